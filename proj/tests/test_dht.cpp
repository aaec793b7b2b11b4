#include <gtest/gtest.h>

#include "qpdht/dht/topology_io.hpp"
#include "qpdht/dht/validate.hpp"

using namespace qpdht;
using namespace qpdht::dht;

namespace {

// Linear-scan owner oracle: the quorum whose clockwise-most id is the first
// at or after key, wrapping.
QuorumId scan_owner(const Topology& t, KeyId key) {
  QuorumId best = 0;
  std::uint64_t best_d = ~0ULL;
  for (const auto& q : t.quorums) {
    auto d = t.ring.distance(key, t.peer(q.members.back()).id);
    if (d < best_d) {
      best_d = d;
      best = q.id;
    }
  }
  return best;
}

Topology make(std::uint32_t n, std::uint32_t eta, double f = 0.0, std::uint64_t seed = 1, unsigned bits = 64) {
  TopologyParams p;
  p.n = n;
  p.eta = eta;
  p.byzantine_fraction = f;
  p.seed = seed;
  p.bits = bits;
  return build_topology(p);
}

}  // namespace

TEST(Ring, RangesAndDistances) {
  Ring r{8};
  EXPECT_EQ(r.distance(250, 4), 10u);
  EXPECT_TRUE(contains(r, Range{128, 0}, 200));
  EXPECT_FALSE(contains(r, Range{128, 0}, 0));
  EXPECT_TRUE(contains(r, Range{5, 5}, 77));
  Ring full{64};
  EXPECT_EQ(full.distance(~0ULL, 1), 2u);
  EXPECT_TRUE(contains(full, Range{~0ULL - 3, 2}, 1));
}

TEST(RtIndex, Examples) {
  Ring r{8};
  std::vector<Range> rs{{0, 64}, {64, 128}, {128, 0}};
  EXPECT_EQ(rt_index_for_key(r, rs, 200), 3u);
  EXPECT_EQ(rt_index_for_key(r, rs, 64), 2u);
  EXPECT_EQ(rt_index_for_key(r, rs, 128), 3u);
  EXPECT_EQ(rt_index_for_key(r, rs, 0), 1u);
  std::vector<Range> one{{17, 17}};
  for (KeyId k : {0, 17, 255}) EXPECT_EQ(rt_index_for_key(r, one, k), 1u);
  std::vector<Range> gap{{0, 64}, {128, 0}};
  EXPECT_THROW(rt_index_for_key(r, gap, 100), TopologyError);
}

TEST(RtIndex, MatchesLinearScanOracle) {
  Ring r{8};
  std::vector<Range> rs{{10, 70}, {70, 71}, {71, 200}, {200, 10}};
  for (KeyId k = 0; k < 256; ++k) {
    std::uint32_t want = 0;
    for (std::uint32_t i = 0; i < rs.size(); ++i) {
      bool in = rs[i].lower < rs[i].upper ? (k >= rs[i].lower && k < rs[i].upper) : (k >= rs[i].lower || k < rs[i].upper);
      if (in) want = i + 1;
    }
    EXPECT_EQ(rt_index_for_key(r, rs, k), want) << k;
  }
}

TEST(BuildTopology, SixtyFourPeersEightQuorums) {
  auto t = make(64, 8);
  EXPECT_EQ(t.quorum_count(), 8u);
  EXPECT_EQ(t.nu, 3u);
  for (const auto& q : t.quorums) {
    EXPECT_EQ(q.members.size(), 8u);
    EXPECT_EQ(q.rt.size(), 3u);
  }
  EXPECT_TRUE(validate(t).ok());
}

TEST(BuildTopology, ByzantineCapAtTenPercent) {
  auto t = make(1024, 16, 0.10, 3);
  std::size_t total = 0;
  for (const auto& q : t.quorums) {
    EXPECT_LE(t.byzantine_in(q.id), 5u);
    total += t.byzantine_in(q.id);
  }
  EXPECT_EQ(total, 102u);
  EXPECT_TRUE(validate(t).ok());
}

TEST(BuildTopology, SingleQuorumIsSelfReferential) {
  auto t = make(8, 8);
  ASSERT_EQ(t.quorum_count(), 1u);
  ASSERT_EQ(t.quorums[0].rt.size(), 1u);
  EXPECT_EQ(t.quorums[0].rt[0].target, 0u);
  EXPECT_TRUE(full_ring(t.quorums[0].rt[0].range));
  EXPECT_TRUE(full_ring(t.quorums[0].arc));
  EXPECT_EQ(oracle_path(t, 0, 12345).size(), 1u);
  EXPECT_TRUE(validate(t).ok());
}

TEST(BuildTopology, RejectsBadParameters) {
  EXPECT_THROW(make(64, 3), InvalidArgument);
  EXPECT_THROW(make(4, 8), InvalidArgument);
  // 8 quorums of 4 tolerate one fault each: 8 of 32 is fine, 9 is not.
  EXPECT_NO_THROW(make(32, 4, 0.25));
  EXPECT_THROW(make(32, 4, 0.30), TopologyError);
}

TEST(BuildTopology, DefaultEta) {
  EXPECT_EQ(default_eta(64), 6u);
  EXPECT_EQ(default_eta(1024), 10u);
  EXPECT_EQ(default_eta(8), 4u);
  TopologyParams p;
  p.n = 256;
  EXPECT_EQ(build_topology(p).eta, 8u);
}

TEST(BuildTopology, DeterministicPerSeed) {
  EXPECT_EQ(to_json(make(256, 8, 0.1, 5)).dump(), to_json(make(256, 8, 0.1, 5)).dump());
  EXPECT_NE(to_json(make(256, 8, 0.1, 5)).dump(), to_json(make(256, 8, 0.1, 6)).dump());
}

TEST(Validate, FiftySeeds) {
  for (std::uint64_t s = 1; s <= 50; ++s) {
    auto t = make(200 + 7 * static_cast<std::uint32_t>(s), 0, 0.1, s);
    auto rep = validate(t);
    EXPECT_TRUE(rep.ok()) << s;
  }
}

TEST(Validate, DetectsCorruption) {
  auto t = make(64, 8);
  auto bad = t;
  for (int i = 0; i < 3; ++i) bad.peers[bad.quorums[2].members[i]].behavior = Behavior::drop;
  auto rep = validate(bad);
  EXPECT_FALSE(rep.find("Goodness")->ok);
  EXPECT_TRUE(rep.find("RangeCoverage")->ok);

  auto gap = t;
  gap.quorums[1].rt[1].range.upper += 5;
  auto rep2 = validate(gap);
  EXPECT_FALSE(rep2.find("RangeCoverage")->ok);
  EXPECT_TRUE(rep2.find("Goodness")->ok);

  auto orphan = t;
  orphan.quorums[0].members.pop_back();
  EXPECT_FALSE(validate(orphan).find("Membership")->ok);
}

TEST(Routing, OwnerMatchesScan) {
  auto t = make(300, 10, 0, 4);
  algebra::Drbg rng(1);
  for (int i = 0; i < 2000; ++i) {
    KeyId k = rng();
    EXPECT_EQ(t.owner(k), scan_owner(t, k));
    EXPECT_TRUE(contains(t.ring, t.quorum(t.owner(k)).arc, k));
  }
  for (const auto& p : t.peers) EXPECT_EQ(t.owner(p.id), p.quorum);
}

TEST(Routing, EntryArcIsTargetArc) {
  auto t = make(300, 10, 0, 4);
  for (const auto& q : t.quorums)
    for (const auto& e : q.rt) EXPECT_EQ(entry_arc(t, e), t.quorum(e.target).arc);
}

TEST(Routing, ExhaustivePathsSmallRing) {
  // 2^10 ring, every key and every start quorum.
  auto t = make(64, 8, 0, 9, 10);
  const std::size_t bound = 2 * 3 + 2;
  for (QuorumId s = 0; s < t.quorum_count(); ++s)
    for (KeyId k = 0; k < 1024; ++k) {
      auto path = oracle_path(t, s, k);
      EXPECT_LE(path.size(), bound);
      EXPECT_EQ(path.back(), t.owner(k));
      // routing-table step agrees with the oracle and the distance to the
      // key's owner shrinks at every hop
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        auto idx = rt_index_for_key(t, path[i], k);
        EXPECT_EQ(t.quorum(path[i]).rt[idx - 1].target, path[i + 1]);
        auto m = t.quorum_count();
        EXPECT_LT((t.owner(k) + m - path[i + 1]) % m, (t.owner(k) + m - path[i]) % m);
      }
    }
  EXPECT_EQ(next_quorum_oracle(t, t.owner(77), 77), t.owner(77));
}

TEST(TopologyIo, RoundTrip) {
  auto t = make(128, 8, 0.1, 2);
  auto j = to_json(t);
  auto back = from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_TRUE(validate(back).ok());
  EXPECT_THROW(from_json(nlohmann::json::parse("{\"bits\": 64}")), ConfigError);
}
