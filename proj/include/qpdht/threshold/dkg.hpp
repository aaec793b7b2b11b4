#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "qpdht/algebra/hash.hpp"
#include "qpdht/algebra/lagrange.hpp"
#include "qpdht/threshold/pairing.hpp"

namespace qpdht::threshold {

using algebra::Drbg;
using algebra::PrfKey;

template <PrimeOrderGroup G>
struct DkgOutput {
  typename G::Element pk;
  std::vector<typename G::Element> pk_shares;  // PK-hat, index i-1
  std::vector<typename G::Scalar> sk_shares;   // sk_i, index i-1
  PrfKey prf_key;
  std::uint32_t eta = 0;
  std::uint32_t t = 0;
  std::vector<std::uint32_t> qual;          // dealers whose polynomials were summed
  std::vector<std::uint32_t> disqualified;
  unsigned attempts = 1;
};

// Scripted misbehaviour for tests. Participants are 1-based.
struct DkgFault {
  enum class Kind { bad_subshares, false_complaint };
  std::uint32_t participant = 0;
  Kind kind = Kind::bad_subshares;
  std::vector<std::uint32_t> victims;  // empty: everyone else
  bool reveal_correct = false;         // bad_subshares: answers complaints with the right share
};

namespace detail {

template <PrimeOrderGroup G>
typename G::Element feldman_eval(const G& g, const std::vector<typename G::Element>& commits, std::uint32_t j) {
  auto acc = g.identity();
  auto power = g.scalar(1);
  for (const auto& a : commits) {
    acc = g.mul(acc, g.exp(a, power));
    power = g.mul(power, g.scalar(j));
  }
  return acc;
}

inline bool targets(const DkgFault& f, std::uint32_t j) {
  if (j == f.participant) return false;
  return f.victims.empty() || std::find(f.victims.begin(), f.victims.end(), j) != f.victims.end();
}

}  // namespace detail

// Synchronous Joint-Feldman DKG among eta participants with threshold t.
// Every dealer shares a random degree-t polynomial with Feldman commitments;
// recipients complain about shares that do not match, the accused dealer
// reveals, and dealers that cannot answer are disqualified. The PRF key for
// the quorum comes out of the same run.
template <PrimeOrderGroup G>
DkgOutput<G> dkg_run(const G& g, std::uint32_t eta, std::uint32_t t, Drbg& rng,
                     const std::vector<DkgFault>& faults = {}, SimulatedPairing<G>* registry = nullptr) {
  if (eta == 0) throw InvalidArgument("DKG needs at least one participant");
  if (eta < 3 * t + 1) throw InvalidArgument("DKG requires eta >= 3t+1");
  for (const auto& f : faults)
    if (f.participant < 1 || f.participant > eta) throw InvalidArgument("fault names an unknown participant");

  for (unsigned attempt = 1;; ++attempt) {
    using Scalar = typename G::Scalar;
    using Element = typename G::Element;
    std::vector<std::vector<Scalar>> polys(eta + 1);
    std::vector<std::vector<Element>> commits(eta + 1);
    std::vector<Bytes> prf_seeds(eta + 1);
    // sent[i][j] = share dealer i hands participant j
    std::vector<std::vector<Scalar>> sent(eta + 1, std::vector<Scalar>(eta + 1));

    for (std::uint32_t i = 1; i <= eta; ++i) {
      for (std::uint32_t k = 0; k <= t; ++k) polys[i].push_back(g.random_scalar(rng));
      if (t > 0 && g.is_zero(polys[i][t])) polys[i][t] = g.scalar(1);
      for (const auto& a : polys[i]) commits[i].push_back(g.exp(g.generator(), a));
      prf_seeds[i] = rng.bytes(32);
      for (std::uint32_t j = 1; j <= eta; ++j)
        sent[i][j] = algebra::poly_eval(g, std::span<const Scalar>(polys[i]), g.scalar(j));
    }
    for (const auto& f : faults) {
      if (f.kind != DkgFault::Kind::bad_subshares) continue;
      for (std::uint32_t j = 1; j <= eta; ++j)
        if (detail::targets(f, j)) sent[f.participant][j] = g.add(sent[f.participant][j], g.scalar(1));
    }

    // complaints[i] = recipients complaining about dealer i
    std::vector<std::set<std::uint32_t>> complaints(eta + 1);
    for (std::uint32_t j = 1; j <= eta; ++j) {
      for (std::uint32_t i = 1; i <= eta; ++i) {
        if (i == j) continue;
        if (g.exp(g.generator(), sent[i][j]) != detail::feldman_eval(g, commits[i], j)) complaints[i].insert(j);
      }
    }
    for (const auto& f : faults) {
      if (f.kind != DkgFault::Kind::false_complaint) continue;
      for (std::uint32_t i = 1; i <= eta; ++i)
        if (detail::targets(f, i)) complaints[i].insert(f.participant);
    }

    // Accused dealers publish the disputed shares; a wrong reveal disqualifies.
    std::vector<std::uint32_t> disqualified;
    for (std::uint32_t i = 1; i <= eta; ++i) {
      bool bad = false;
      for (auto j : complaints[i]) {
        Scalar revealed = sent[i][j];
        for (const auto& f : faults)
          if (f.participant == i && f.kind == DkgFault::Kind::bad_subshares && f.reveal_correct)
            revealed = algebra::poly_eval(g, std::span<const Scalar>(polys[i]), g.scalar(j));
        if (g.exp(g.generator(), revealed) != detail::feldman_eval(g, commits[i], j)) {
          bad = true;
        } else {
          sent[i][j] = revealed;
        }
      }
      if (bad) disqualified.push_back(i);
    }
    if (disqualified.size() > t)
      throw DkgAborted("more than t dealers disqualified in DKG", disqualified);

    DkgOutput<G> out{g.identity(), {}, {}, {}, eta, t, {}, disqualified, attempt};
    for (std::uint32_t i = 1; i <= eta; ++i)
      if (std::find(disqualified.begin(), disqualified.end(), i) == disqualified.end()) out.qual.push_back(i);

    std::vector<Element> joint(t + 1, g.identity());
    for (auto i : out.qual)
      for (std::uint32_t k = 0; k <= t; ++k) joint[k] = g.mul(joint[k], commits[i][k]);
    // A vanishing top coefficient would let t shares determine the key.
    if (t > 0 && g.is_identity(joint[t])) continue;

    out.pk = joint[0];
    algebra::Sha256 h;
    h.update(as_view("qpdht/dkg-prf/v1"));
    for (std::uint32_t j = 1; j <= eta; ++j) {
      auto sk = g.scalar(0);
      for (auto i : out.qual) sk = g.add(sk, sent[i][j]);
      out.sk_shares.push_back(sk);
      out.pk_shares.push_back(detail::feldman_eval(g, joint, j));
    }
    for (auto i : out.qual) h.update(prf_seeds[i]);
    out.prf_key.bytes = h.finish();

    if (registry) {
      auto sk = g.scalar(0);
      for (auto i : out.qual) sk = g.add(sk, polys[i][0]);
      registry->record(out.pk, sk);
      for (std::uint32_t j = 1; j <= eta; ++j) registry->record(out.pk_shares[j - 1], out.sk_shares[j - 1]);
    }
    return out;
  }
}

}  // namespace qpdht::threshold
