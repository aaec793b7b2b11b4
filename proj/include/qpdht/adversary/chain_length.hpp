#pragma once

#include <bit>
#include <cmath>
#include <map>

#include "qpdht/adversary/observation.hpp"
#include "qpdht/algebra/drbg.hpp"
#include "qpdht/dht/topology.hpp"

namespace qpdht::adversary {

// Remaining quorum distance to the owner, bucketed by bit width: bucket 0 is
// the owner itself, bucket b covers distances [2^(b-1), 2^b).
inline std::uint32_t distance_bucket(const dht::Topology& t, dht::QuorumId at, dht::QuorumId owner) {
  const auto m = t.quorum_count();
  return static_cast<std::uint32_t>(std::bit_width((owner + m - at) % m));
}

// Joint counts of (visible chain length, distance bucket) over random
// unpadded lookups, as an adversary would tabulate them offline.
struct ChainLengthModel {
  std::uint32_t buckets = 0;
  std::map<int, std::vector<double>> counts;  // chain length -> counts per bucket
  std::vector<double> prior;

  // Posterior over buckets given the chain length; the prior when the length
  // was never seen.
  std::vector<double> posterior(int length) const {
    auto it = counts.find(length);
    const auto& c = it == counts.end() ? prior : it->second;
    double total = 0;
    for (auto x : c) total += x;
    std::vector<double> out(buckets, 0.0);
    for (std::size_t b = 0; b < buckets; ++b) out[b] = total > 0 ? c[b] / total : 1.0 / buckets;
    return out;
  }

  std::uint32_t predict(int length) const {
    auto p = posterior(length);
    return static_cast<std::uint32_t>(std::max_element(p.begin(), p.end()) - p.begin());
  }

  double expected_bucket(int length) const {
    auto p = posterior(length);
    double e = 0;
    for (std::size_t b = 0; b < p.size(); ++b) e += static_cast<double>(b) * p[b];
    return e;
  }
};

// Observers at hop i (home is hop 1) see a chain of i-2 links.
inline ChainLengthModel build_chain_length_model(const dht::Topology& t, std::size_t samples, algebra::Drbg& rng) {
  ChainLengthModel model;
  const auto m = t.quorum_count();
  model.buckets = static_cast<std::uint32_t>(std::bit_width(m)) + 1;
  model.prior.assign(model.buckets, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    auto home = static_cast<dht::QuorumId>(rng.uniform(m));
    auto key = rng() & t.ring.mask();
    auto path = dht::oracle_path(t, home, key);
    const auto owner = path.back();
    for (std::size_t i = 1; i + 1 < path.size(); ++i) {
      auto b = distance_bucket(t, path[i], owner);
      auto& row = model.counts[static_cast<int>(i - 1)];
      row.resize(model.buckets, 0.0);
      row[b] += 1;
      model.prior[b] += 1;
    }
  }
  return model;
}

// KL(p || q) in bits; q is smoothed so unseen buckets stay finite.
inline double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  constexpr double eps = 1e-9;
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) d += p[i] * std::log2(p[i] / std::max(q[i], eps));
  return d;
}

// Fraction of chain-carrying hop observations whose predicted bucket matches
// the truth. `owner_of` maps a lookup id to its owner quorum.
template <class OwnerOf>
double chain_inference_hit_rate(const ChainLengthModel& model, const ObservationLog& log, const dht::Topology& t,
                                OwnerOf owner_of) {
  std::size_t seen = 0, hits = 0;
  for (const auto& o : log.entries) {
    if (o.kind != ObservationKind::hop || o.chain_length < 0) continue;
    ++seen;
    if (model.predict(o.chain_length) == distance_bucket(t, o.quorum, owner_of(o.lookup))) ++hits;
  }
  return seen ? static_cast<double>(hits) / static_cast<double>(seen) : 0.0;
}

}  // namespace qpdht::adversary
