#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "qpdht/algebra/lagrange.hpp"
#include "qpdht/threshold/pairing.hpp"

namespace qpdht::threshold {

template <PrimeOrderGroup G>
struct SignatureShare {
  std::uint32_t index = 0;  // 1-based signer index inside the quorum
  typename G::Element sigma;
  friend bool operator==(const SignatureShare&, const SignatureShare&) = default;
};

template <PrimeOrderGroup G>
struct ThresholdSignature {
  Bytes message;
  typename G::Element sigma;
  friend bool operator==(const ThresholdSignature&, const ThresholdSignature&) = default;
};

template <PrimeOrderGroup G>
typename G::Element hash_message(const G& g, ByteView m) {
  ByteWriter w;
  w.raw(as_view("qpdht.sig")).raw(m);
  return g.hash_to_group(w.bytes());
}

template <PrimeOrderGroup G>
SignatureShare<G> sign_share(const G& g, std::uint32_t index, const typename G::Scalar& sk_i, ByteView m) {
  return {index, g.exp(hash_message(g, m), sk_i)};
}

// Signature under the full key; used when a quorum's table is signed at setup.
template <PrimeOrderGroup G>
typename G::Element sign_full(const G& g, const typename G::Scalar& sk, ByteView m) {
  return g.exp(hash_message(g, m), sk);
}

// e(g, sigma_i) == e(PK_i, H(m))
template <PrimeOrderGroup G>
bool verify_share(const SimulatedPairing<G>& e, const typename G::Element& pk_i, ByteView m,
                  const SignatureShare<G>& share) {
  const auto& g = e.group();
  return e.pairing_equal(g.generator(), share.sigma, pk_i, hash_message(g, m));
}

template <PrimeOrderGroup G>
bool verify(const SimulatedPairing<G>& e, const typename G::Element& pk, ByteView m, const typename G::Element& sigma) {
  const auto& g = e.group();
  return e.pairing_equal(g.generator(), sigma, pk, hash_message(g, m));
}

// Interpolates in the exponent over the first t+1 distinct indices. Shares
// are expected to be verified already.
template <PrimeOrderGroup G>
ThresholdSignature<G> combine(const G& g, std::span<const SignatureShare<G>> shares, std::uint32_t t, ByteView m) {
  std::vector<SignatureShare<G>> picked;
  for (const auto& s : shares) {
    if (s.index == 0) throw InvalidArgument("signer index must be positive");
    bool dup = std::any_of(picked.begin(), picked.end(), [&](const auto& p) { return p.index == s.index; });
    if (!dup) picked.push_back(s);
    if (picked.size() == t + 1) break;
  }
  if (picked.size() < t + 1) throw InsufficientShares("need t+1 distinct signature shares");
  std::vector<std::uint32_t> idx;
  for (const auto& s : picked) idx.push_back(s.index);
  auto lambda = algebra::lagrange_coeffs(g, std::span<const std::uint32_t>(idx));
  auto sigma = g.identity();
  for (std::size_t i = 0; i < picked.size(); ++i) sigma = g.mul(sigma, g.exp(picked[i].sigma, lambda[i]));
  return {Bytes(m.begin(), m.end()), sigma};
}

template <PrimeOrderGroup G>
ThresholdSignature<G> combine(const G& g, const std::vector<SignatureShare<G>>& shares, std::uint32_t t, ByteView m) {
  return combine(g, std::span<const SignatureShare<G>>(shares), t, m);
}

// SIG_SHARE body: u32 index | sigma
template <PrimeOrderGroup G>
Bytes encode_share(const G& g, const SignatureShare<G>& s) {
  ByteWriter w;
  w.u32(s.index).raw(g.encode(s.sigma));
  return w.take();
}

template <PrimeOrderGroup G>
SignatureShare<G> decode_share(const G& g, ByteReader& r) {
  auto idx = r.u32();
  return {idx, g.decode(r.raw(g.element_size()))};
}

// Encoded threshold signature: var(message) | sigma
template <PrimeOrderGroup G>
Bytes encode_signature(const G& g, const ThresholdSignature<G>& s) {
  ByteWriter w;
  w.var(s.message).raw(g.encode(s.sigma));
  return w.take();
}

template <PrimeOrderGroup G>
ThresholdSignature<G> decode_signature(const G& g, ByteReader& r) {
  auto m = r.var();
  return {std::move(m), g.decode(r.raw(g.element_size()))};
}

}  // namespace qpdht::threshold
