#pragma once

#include <map>
#include <sstream>

#include "qpdht/dht/topology.hpp"

namespace qpdht::dht {

struct CheckResult {
  std::string name;
  bool ok = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.ok; });
  }
  const CheckResult* find(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

namespace detail {

// Disjoint and covering: walking the ranges in clockwise order from any
// start, each upper bound is the next lower bound and the lengths add up to
// the ring size.
inline bool ranges_partition_ring(const Ring& ring, std::vector<Range> rs, std::string& why) {
  if (rs.empty()) {
    why = "no ranges";
    return false;
  }
  if (rs.size() == 1) {
    if (!full_ring(rs[0])) why = "single range does not cover the ring";
    return full_ring(rs[0]);
  }
  unsigned __int128 total = 0;
  for (const auto& r : rs) {
    if (full_ring(r)) {
      why = "full-ring range alongside others";
      return false;
    }
    total += length(ring, r);
  }
  std::sort(rs.begin(), rs.end(), [](const Range& a, const Range& b) { return a.lower < b.lower; });
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto& nxt = rs[(i + 1) % rs.size()];
    if (rs[i].upper != nxt.lower) {
      std::ostringstream os;
      os << (total < ring.size() ? "gap" : "overlap") << " after range starting at " << rs[i].lower;
      why = os.str();
      return false;
    }
  }
  if (total != ring.size()) {
    why = "ranges wrap more than once";
    return false;
  }
  return true;
}

}  // namespace detail

// Goodness, Membership, intra- and inter-quorum links, plus coverage of every
// routing table and of the quorum arcs.
inline ValidationReport validate(const Topology& t) {
  ValidationReport rep;
  auto fail = [](CheckResult& c, const std::string& why) {
    if (c.ok) c.detail = why;
    c.ok = false;
  };

  CheckResult good{"Goodness", true, ""};
  for (const auto& q : t.quorums) {
    auto bad = t.byzantine_in(q.id);
    if (q.members.size() < 4)
      fail(good, "quorum " + std::to_string(q.id) + " has fewer than 4 members");
    else if (3 * bad >= q.members.size())
      fail(good, "quorum " + std::to_string(q.id) + " has " + std::to_string(bad) + " faulty of " +
                     std::to_string(q.members.size()));
  }
  rep.checks.push_back(good);

  CheckResult mem{"Membership", true, ""};
  std::vector<int> seen(t.peers.size(), 0);
  for (const auto& q : t.quorums)
    for (std::size_t s = 0; s < q.members.size(); ++s) {
      auto p = q.members[s];
      if (p >= t.peers.size()) {
        fail(mem, "quorum " + std::to_string(q.id) + " lists unknown peer");
        continue;
      }
      ++seen[p];
      if (t.peers[p].quorum != q.id || t.peers[p].member_index != s + 1)
        fail(mem, "peer " + std::to_string(p) + " disagrees with quorum " + std::to_string(q.id));
    }
  for (std::size_t p = 0; p < seen.size(); ++p)
    if (seen[p] != 1) fail(mem, "peer " + std::to_string(p) + " belongs to " + std::to_string(seen[p]) + " quorums");
  rep.checks.push_back(mem);

  CheckResult intra{"IntraQuorum", true, ""};
  for (const auto& q : t.quorums)
    for (auto p : q.members)
      if (p < t.peers.size() && !contains(t.ring, q.arc, t.peers[p].id))
        fail(intra, "peer " + std::to_string(p) + " lies outside the arc of quorum " + std::to_string(q.id));
  rep.checks.push_back(intra);

  CheckResult inter{"InterQuorum", true, ""};
  const std::size_t m = t.quorums.size();
  for (const auto& q : t.quorums) {
    if (q.rt.size() != finger_count(m)) fail(inter, "quorum " + std::to_string(q.id) + " has a short routing table");
    for (std::uint32_t j = 0; j < q.rt.size(); ++j) {
      const auto& e = q.rt[j];
      if (e.target >= m || e.target != finger_target(m, q.id, j)) {
        fail(inter, "quorum " + std::to_string(q.id) + " entry " + std::to_string(j + 1) + " points to the wrong quorum");
        continue;
      }
      const auto& tq = t.quorums[e.target];
      const auto& pq = t.quorums[(e.target + m - 1) % m];
      if (e.p >= t.peers.size() || e.p != tq.members.back() || e.p_prev >= t.peers.size() ||
          e.p_prev != pq.members.back())
        fail(inter, "quorum " + std::to_string(q.id) + " entry " + std::to_string(j + 1) + " names the wrong peers");
    }
  }
  rep.checks.push_back(inter);

  CheckResult cov{"RangeCoverage", true, ""};
  for (const auto& q : t.quorums) {
    std::string why;
    if (!detail::ranges_partition_ring(t.ring, rt_ranges(q), why))
      fail(cov, "quorum " + std::to_string(q.id) + ": " + why);
  }
  rep.checks.push_back(cov);

  CheckResult arcs{"ArcPartition", true, ""};
  std::vector<Range> all;
  for (const auto& q : t.quorums) all.push_back(q.arc);
  std::string why;
  if (!detail::ranges_partition_ring(t.ring, all, why)) fail(arcs, why);
  rep.checks.push_back(arcs);
  return rep;
}

}  // namespace qpdht::dht
