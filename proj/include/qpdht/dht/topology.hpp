#pragma once

#include <algorithm>
#include <bit>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qpdht/algebra/drbg.hpp"
#include "qpdht/dht/key_id.hpp"

namespace qpdht::dht {

enum class Behavior : std::uint8_t { honest, drop, bogus_share, bogus_rt, bogus_ot, observe_only };

inline std::string_view behavior_name(Behavior b) {
  switch (b) {
    case Behavior::honest: return "honest";
    case Behavior::drop: return "drop";
    case Behavior::bogus_share: return "bogus-share";
    case Behavior::bogus_rt: return "bogus-rt";
    case Behavior::bogus_ot: return "bogus-ot";
    case Behavior::observe_only: return "observe-only";
  }
  return "?";
}

inline Behavior parse_behavior(std::string_view s) {
  for (auto b : {Behavior::honest, Behavior::drop, Behavior::bogus_share, Behavior::bogus_rt, Behavior::bogus_ot,
                 Behavior::observe_only})
    if (behavior_name(b) == s) return b;
  std::string alt(s);
  std::replace(alt.begin(), alt.end(), '_', '-');
  if (alt != s) return parse_behavior(alt);
  throw ConfigError("unknown behavior '" + std::string(s) + "'");
}

using PeerIndex = std::uint32_t;
using QuorumId = std::uint32_t;

struct Peer {
  PeerIndex index = 0;
  KeyId id = 0;
  std::string addr;
  QuorumId quorum = 0;
  std::uint32_t member_index = 0;  // 1-based position inside the quorum (share index)
  Behavior behavior = Behavior::honest;

  bool byzantine() const { return behavior != Behavior::honest; }
};

// [Q_j, p, p', PK_{Q_j}, ts] plus the range this entry answers for. The
// quorum key lives with the quorum's key material, looked up by `target`.
struct RtEntry {
  QuorumId target = 0;
  PeerIndex p = 0;       // clockwise-most member of Q_j
  PeerIndex p_prev = 0;  // clockwise-most member of Q_{j-1}
  Range range;
  std::uint64_t ts = 0;
  friend bool operator==(const RtEntry&, const RtEntry&) = default;
};

struct Quorum {
  QuorumId id = 0;
  std::vector<PeerIndex> members;  // sorted by id
  Range arc;                       // (p', p] stored as [p'+1, p+1)
  std::vector<RtEntry> rt;
};

struct TopologyParams {
  std::uint32_t n = 0;
  std::uint32_t eta = 0;  // 0: max(4, ceil(log2 n))
  unsigned bits = 64;
  double byzantine_fraction = 0.0;
  std::vector<Behavior> behaviors{Behavior::drop, Behavior::bogus_share, Behavior::bogus_rt, Behavior::bogus_ot};
  std::uint64_t seed = 1;
};

struct Topology {
  Ring ring;
  std::uint32_t eta = 0;
  std::uint32_t nu = 0;
  double byzantine_fraction = 0.0;
  std::uint64_t seed = 0;
  std::vector<Peer> peers;
  std::vector<Quorum> quorums;

  std::size_t quorum_count() const { return quorums.size(); }
  const Peer& peer(PeerIndex i) const { return peers.at(i); }
  const Quorum& quorum(QuorumId q) const { return quorums.at(q); }
  // Threshold of a quorum: largest t with 3t < size.
  std::uint32_t threshold(QuorumId q) const { return static_cast<std::uint32_t>((quorum(q).members.size() - 1) / 3); }

  QuorumId owner(KeyId key) const {
    // quorums are ordered by their clockwise-most id p; the owner is the
    // first with key <= p, wrapping to quorum 0
    auto it = std::lower_bound(quorums.begin(), quorums.end(), key,
                               [this](const Quorum& q, KeyId k) { return peers[q.members.back()].id < k; });
    return it == quorums.end() ? 0 : it->id;
  }

  std::size_t byzantine_in(QuorumId q) const {
    const auto& m = quorum(q).members;
    return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [&](PeerIndex p) { return peers[p].byzantine(); }));
  }
};

inline std::uint32_t default_eta(std::uint32_t n) {
  std::uint32_t lg = n <= 1 ? 0 : static_cast<std::uint32_t>(std::bit_width(n - 1));
  return std::max<std::uint32_t>(4, lg);
}

// Number of finger entries for m quorums: ceil(log2 m), and 1 for m = 1.
inline std::uint32_t finger_count(std::size_t m) {
  if (m <= 1) return 1;
  return static_cast<std::uint32_t>(std::bit_width(m - 1));
}

inline QuorumId finger_target(std::size_t m, QuorumId from, std::uint32_t j) {
  if (m <= 1) return from;
  return static_cast<QuorumId>((from + (std::uint64_t{1} << j)) % m);
}

// Fills ranges, fingers and arcs from the peer/quorum partition.
inline void build_routing_tables(Topology& t) {
  const std::size_t m = t.quorums.size();
  for (std::size_t k = 0; k < m; ++k) {
    auto& q = t.quorums[k];
    const auto& prev = t.quorums[(k + m - 1) % m];
    KeyId p = t.peers[q.members.back()].id;
    KeyId pp = t.peers[prev.members.back()].id;
    q.arc = Range{t.ring.wrap(pp + 1), t.ring.wrap(p + 1)};
  }
  t.nu = finger_count(m);
  for (std::size_t k = 0; k < m; ++k) {
    auto& q = t.quorums[k];
    q.rt.clear();
    for (std::uint32_t j = 0; j < t.nu; ++j) {
      QuorumId f = finger_target(m, static_cast<QuorumId>(k), j);
      QuorumId next = finger_target(m, static_cast<QuorumId>(k), (j + 1 == t.nu) ? 0 : j + 1);
      RtEntry e;
      e.target = f;
      e.p = t.quorums[f].members.back();
      e.p_prev = t.quorums[(f + m - 1) % m].members.back();
      e.range = Range{t.quorums[f].arc.lower, t.quorums[next].arc.lower};
      q.rt.push_back(e);
    }
  }
}

inline std::string peer_address(PeerIndex i) {
  return "10." + std::to_string((i >> 16) & 0xff) + "." + std::to_string((i >> 8) & 0xff) + "." +
         std::to_string(i & 0xff) + ":7000";
}

// Structural topology: ids, quorums by rank, routing tables and Byzantine
// placement. Keys are generated separately.
inline Topology build_topology(TopologyParams params) {
  if (params.eta == 0) params.eta = default_eta(params.n);
  if (params.eta < 4) throw InvalidArgument("quorum size must be at least 4");
  if (params.n < params.eta) throw InvalidArgument("need at least eta peers");
  if (params.bits < 1 || params.bits > 64) throw InvalidArgument("ring bits must be in [1, 64]");
  if (params.bits < 64 && params.n > (1ULL << params.bits)) throw InvalidArgument("ring too small for n peers");
  if (params.byzantine_fraction < 0 || params.byzantine_fraction >= 1.0 / 3)
    throw TopologyError("Byzantine fraction must be in [0, 1/3)");

  algebra::Drbg rng(params.seed);
  auto id_rng = rng.fork("ids", 0);
  auto byz_rng = rng.fork("byzantine", 0);

  Topology t;
  t.ring = Ring{params.bits};
  t.eta = params.eta;
  t.byzantine_fraction = params.byzantine_fraction;
  t.seed = params.seed;

  std::vector<KeyId> ids;
  ids.reserve(params.n);
  while (ids.size() < params.n) {
    ids.push_back(t.ring.wrap(id_rng()));
    if (ids.size() == params.n) {
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }
  }
  for (PeerIndex i = 0; i < params.n; ++i) t.peers.push_back(Peer{i, ids[i], peer_address(i), 0, 0, Behavior::honest});

  const std::size_t m = params.n / params.eta;
  const std::size_t base = params.n / m, extra = params.n % m;
  PeerIndex next = 0;
  for (std::size_t k = 0; k < m; ++k) {
    Quorum q;
    q.id = static_cast<QuorumId>(k);
    std::size_t size = base + (k < extra ? 1 : 0);
    for (std::size_t s = 0; s < size; ++s) {
      auto& p = t.peers[next];
      p.quorum = q.id;
      p.member_index = static_cast<std::uint32_t>(s + 1);
      q.members.push_back(next++);
    }
    t.quorums.push_back(std::move(q));
  }
  build_routing_tables(t);

  const auto f = static_cast<std::size_t>(params.byzantine_fraction * params.n + 0.5);
  std::size_t capacity = 0;
  for (const auto& q : t.quorums) capacity += (q.members.size() - 1) / 3;
  if (f > capacity) throw TopologyError("Byzantine fraction cannot be placed with fewer than 1/3 faulty per quorum");
  if (f > 0 && params.behaviors.empty()) throw ConfigError("behaviors list is empty");
  std::vector<PeerIndex> order(params.n);
  for (PeerIndex i = 0; i < params.n; ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[byz_rng.uniform(i)]);
  std::vector<std::size_t> placed(m, 0);
  std::size_t assigned = 0;
  for (auto idx : order) {
    if (assigned == f) break;
    auto& p = t.peers[idx];
    if (placed[p.quorum] >= (t.quorums[p.quorum].members.size() - 1) / 3) continue;
    p.behavior = params.behaviors[assigned % params.behaviors.size()];
    ++placed[p.quorum];
    ++assigned;
  }
  if (assigned != f) throw TopologyError("Byzantine placement violates goodness");
  return t;
}

// 1-based index of the range containing key.
inline std::uint32_t rt_index_for_key(const Ring& ring, std::span<const Range> ranges, KeyId key) {
  for (std::size_t i = 0; i < ranges.size(); ++i)
    if (contains(ring, ranges[i], key)) return static_cast<std::uint32_t>(i + 1);
  throw TopologyError("routing table ranges leave a gap");
}

inline std::vector<Range> rt_ranges(const Quorum& q) {
  std::vector<Range> out;
  for (const auto& e : q.rt) out.push_back(e.range);
  return out;
}

inline std::uint32_t rt_index_for_key(const Topology& t, QuorumId q, KeyId key) {
  auto r = rt_ranges(t.quorum(q));
  return rt_index_for_key(t.ring, std::span<const Range>(r), key);
}

// Arc of an entry's target quorum, (p', p], recoverable by the requester.
inline Range entry_arc(const Topology& t, const RtEntry& e) {
  return Range{t.ring.wrap(t.peer(e.p_prev).id + 1), t.ring.wrap(t.peer(e.p).id + 1)};
}

// Ground truth next hop: the largest power-of-two quorum step that does not
// pass the owner.
inline QuorumId next_quorum_oracle(const Topology& t, QuorumId from, KeyId key) {
  const std::size_t m = t.quorum_count();
  QuorumId owner = t.owner(key);
  std::uint64_t d = (owner + m - from) % m;
  if (d == 0) return from;
  std::uint64_t step = std::bit_floor(d);
  return static_cast<QuorumId>((from + step) % m);
}

inline std::vector<QuorumId> oracle_path(const Topology& t, QuorumId from, KeyId key) {
  std::vector<QuorumId> path{from};
  QuorumId owner = t.owner(key);
  while (path.back() != owner) path.push_back(next_quorum_oracle(t, path.back(), key));
  return path;
}

}  // namespace qpdht::dht
