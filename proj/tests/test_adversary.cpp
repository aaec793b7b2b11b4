#include <gtest/gtest.h>

#include "qpdht/adversary/chain_length.hpp"
#include "qpdht/adversary/crawl.hpp"
#include "qpdht/adversary/range_estimate.hpp"
#include "qpdht/algebra/schnorr_group.hpp"

using namespace qpdht;
using namespace qpdht::adversary;
using algebra::SchnorrGroup;
using protocols::Engine;
using protocols::Protocol;

namespace {

dht::Topology topo(std::uint32_t n, std::uint32_t eta, double f, std::uint64_t seed,
                   std::vector<dht::Behavior> b = {dht::Behavior::observe_only}) {
  dht::TopologyParams p;
  p.n = n;
  p.eta = eta;
  p.byzantine_fraction = f;
  p.behaviors = b;
  p.seed = seed;
  return dht::build_topology(p);
}

protocols::World<SchnorrGroup> world(dht::Topology t, std::uint64_t seed = 3) {
  return protocols::build_world(SchnorrGroup::sim64(), std::move(t), seed);
}

dht::PeerIndex honest_peer(const dht::Topology& t, std::uint64_t i) {
  algebra::Drbg rng(500 + i);
  for (;;) {
    auto p = static_cast<dht::PeerIndex>(rng.uniform(t.peers.size()));
    if (!t.peer(p).byzantine()) return p;
  }
}

// Mean candidate fraction over `lookups` RCPqp-I lookups.
double mean_range_fraction(double f, std::size_t lookups, std::uint64_t seed) {
  auto w = world(topo(256, 8, f, seed), seed);
  Engine<SchnorrGroup> e(w, {}, {}, seed);
  algebra::Drbg rng(seed);
  double sum = 0;
  for (std::size_t i = 0; i < lookups; ++i) {
    auto p = honest_peer(w.topo, i);
    auto key = rng() & w.topo.ring.mask();
    auto r = e.lookup(Protocol::rcpqp1, p, key, i);
    EXPECT_TRUE(r.correct());
    auto est = range_estimate(e.observations().for_lookup(i), w.topo);
    EXPECT_TRUE(dht::contains(w.topo.ring, est, key)) << "lookup " << i;
    sum += dht::fraction(w.topo.ring, est);
  }
  return sum / static_cast<double>(lookups);
}

}  // namespace

TEST(RangeEstimate, NoObservationsGivesWholeRing) {
  auto t = topo(64, 8, 0.0, 1);
  auto r = range_estimate({}, t);
  EXPECT_TRUE(dht::full_ring(r));
  // observers only in the home quorum learn nothing either
  Observation home{0, 0, t.peer(0).quorum, protocols::kNoQuorum, 5, -1, 0, ObservationKind::home};
  EXPECT_TRUE(dht::full_ring(range_estimate({home}, t)));
}

TEST(RangeEstimate, ObserverInFinalIntermediateQuorum) {
  auto t = topo(128, 8, 0.0, 2);  // 16 quorums
  const dht::PeerIndex p = t.quorum(0).members.front();
  // key in the arc of quorum 7: path 0 -> 4 -> 6 -> 7
  const auto key = t.quorum(7).arc.lower;
  ASSERT_EQ(dht::oracle_path(t, 0, key), (std::vector<dht::QuorumId>{0, 4, 6, 7}));
  Observation at6{t.quorum(6).members[0], p, 6, 4, 40, -1, 0, ObservationKind::hop};
  auto r = range_estimate({at6}, t);
  // from quorum 6 up to where finger 3 of quorum 0 starts
  EXPECT_EQ(r.lower, t.quorum(6).arc.lower);
  EXPECT_EQ(r.upper, t.quorum(8).arc.lower);
  EXPECT_TRUE(dht::contains(t.ring, r, key));
  Observation at4{t.quorum(4).members[0], p, 4, 0, 20, -1, 0, ObservationKind::hop};
  EXPECT_EQ(range_estimate({at4, at6}, t), r);
}

TEST(RangeEstimate, SoundAndShrinksWithMoreObservers) {
  auto low = mean_range_fraction(0.05, 150, 11);
  auto high = mean_range_fraction(0.25, 150, 11);
  EXPECT_GT(low, high);
}

TEST(Adversary, ObserveOnlyDoesNotChangeOutcomes) {
  auto t = topo(64, 8, 0.2, 5);
  auto honest = t;
  for (auto& p : honest.peers) p.behavior = dht::Behavior::honest;
  auto w1 = world(t), w2 = world(honest);
  for (auto proto : {Protocol::rcp1, Protocol::rcpqp1, Protocol::rcp2, Protocol::rcpqp2}) {
    Engine<SchnorrGroup> a(w1, {}, {}, 9), b(w2, {}, {}, 9);
    for (std::uint64_t i = 0; i < 6; ++i) {
      auto p = honest_peer(t, i);
      auto key = 0x9e3779b97f4a7c15ULL * (i + 1);
      auto x = a.lookup(proto, p, key, i);
      auto y = b.lookup(proto, p, key, i);
      EXPECT_EQ(x.path, y.path);
      EXPECT_EQ(x.metrics.bytes, y.metrics.bytes);
      EXPECT_EQ(x.latency, y.latency);
    }
    EXPECT_EQ(a.transcript().lines(), b.transcript().lines());
    EXPECT_FALSE(a.observations().entries.empty());
    EXPECT_TRUE(b.observations().entries.empty());
  }
}

TEST(ChainLength, LongerChainsPointCloser) {
  auto t = topo(1024, 8, 0.0, 3);  // 128 quorums
  algebra::Drbg rng(1);
  auto model = build_chain_length_model(t, 4000, rng);
  EXPECT_GT(model.expected_bucket(0), model.expected_bucket(3));
  EXPECT_GT(model.expected_bucket(1), model.expected_bucket(4));
  // the first link says little: its posterior is close to the prior
  auto prior = model.posterior(-5);
  EXPECT_LT(kl_divergence(model.posterior(0), prior), kl_divergence(model.posterior(4), prior));
  EXPECT_GT(kl_divergence(model.posterior(0), model.posterior(2)), 0.0);
}

TEST(ChainLength, PaddingDegradesInference) {
  auto t = topo(256, 8, 0.25, 4);
  auto w = world(t);
  algebra::Drbg mrng(2);
  auto model = build_chain_length_model(w.topo, 4000, mrng);
  auto run = [&](std::uint32_t pad) {
    protocols::ProtocolOptions opts;
    opts.pad_chain = pad;
    Engine<SchnorrGroup> e(w, opts, {}, 6);
    std::map<std::uint64_t, dht::QuorumId> owners;
    algebra::Drbg rng(8);
    for (std::uint64_t i = 0; i < 150; ++i) {
      auto key = rng() & w.topo.ring.mask();
      owners[i] = w.topo.owner(key);
      EXPECT_TRUE(e.lookup(Protocol::rcpqp2, honest_peer(w.topo, i), key, i).correct());
    }
    return chain_inference_hit_rate(model, e.observations(), w.topo, [&](std::uint64_t id) { return owners.at(id); });
  };
  auto plain = run(0), padded = run(2);
  EXPECT_GT(plain, padded);
}

TEST(Crawl, LeakageByVariant) {
  auto w = world(topo(64, 8, 0.0, 7));
  auto attacker = w.topo.quorum(0).members.front();
  const auto nu = w.topo.nu;
  std::map<CrawlVariant, CrawlReport> reps;
  for (auto v : {CrawlVariant::trivial_pir, CrawlVariant::qp1, CrawlVariant::qp1_signed, CrawlVariant::qp2}) {
    protocols::ProtocolOptions opts;
    opts.sign_ot_request = v == CrawlVariant::qp1_signed;
    Engine<SchnorrGroup> e(w, opts, {}, 2);
    algebra::Drbg rng(3);
    reps[v] = crawl_rt(e, attacker, v, rng);
  }
  const auto& plain = reps[CrawlVariant::qp1];
  EXPECT_EQ(plain.entries, nu);
  EXPECT_EQ(plain.authorizations, 1u);
  EXPECT_EQ(plain.entries_per_authorization, std::vector<std::uint32_t>{nu});

  const auto& guarded = reps[CrawlVariant::qp1_signed];
  EXPECT_EQ(guarded.entries, nu);
  EXPECT_EQ(guarded.authorizations, nu);
  EXPECT_EQ(guarded.entries_per_authorization, std::vector<std::uint32_t>(nu, 1));

  const auto& chain = reps[CrawlVariant::qp2];
  EXPECT_EQ(chain.entries, nu);
  EXPECT_GE(chain.interactions, nu);

  EXPECT_GT(reps[CrawlVariant::trivial_pir].leakage(), plain.leakage());
  EXPECT_GT(plain.leakage(), guarded.leakage());
  EXPECT_GE(guarded.leakage(), chain.leakage());
}

TEST(Crawl, SignedRequestsCapAtOnePerAuthorizationUnderFaults) {
  auto w = world(topo(64, 8, 0.1, 8, {dht::Behavior::bogus_share, dht::Behavior::drop}));
  dht::PeerIndex attacker = honest_peer(w.topo, 0);
  protocols::ProtocolOptions opts;
  opts.sign_ot_request = true;
  Engine<SchnorrGroup> e(w, opts, {}, 2);
  algebra::Drbg rng(3);
  auto rep = crawl_rt(e, attacker, CrawlVariant::qp1_signed, rng);
  for (auto got : rep.entries_per_authorization) EXPECT_LE(got, 1u);
}

TEST(KeyMutationWalk, WorkGrowsWithQuorumsVisited) {
  auto w = world(topo(128, 8, 0.0, 9));
  auto attacker = w.topo.quorum(2).members.front();
  Engine<SchnorrGroup> e(w, {}, {}, 1);
  auto zero = key_mutation_walk(e, attacker, 0);
  EXPECT_EQ(zero.visited, 1u);
  EXPECT_EQ(zero.interactions, 0u);
  for (std::uint32_t s : {1u, 4u, 9u}) {
    Engine<SchnorrGroup> f(w, {}, {}, s);
    auto r = key_mutation_walk(f, attacker, s);
    EXPECT_LE(r.visited, s + 1);
    EXPECT_EQ(r.visited, s + 1);
    EXPECT_GE(r.interactions, s);
    EXPECT_EQ(r.entries, s);
    EXPECT_GT(r.trivial_pir_entries, r.entries);
  }
}
