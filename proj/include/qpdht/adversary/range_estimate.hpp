#pragma once

#include <bit>

#include "qpdht/adversary/observation.hpp"
#include "qpdht/dht/topology.hpp"

namespace qpdht::adversary {

// Candidate interval for the key of one lookup, from the colluding log.
//
// The ring is directed, so after the first hop the requester never contacts a
// quorum past the key: the key lies at or after the last contacted quorum's
// arc. The first hop fixes the finger j the requester used, and the key sits
// before finger j+1 of its home quorum.
inline dht::Range range_estimate(const std::vector<Observation>& log, const dht::Topology& t) {
  const Observation* first = nullptr;
  const Observation* last = nullptr;
  for (const auto& o : log) {
    if (o.kind != ObservationKind::hop) continue;
    if (!first || o.time < first->time) first = &o;
    if (!last || o.time > last->time) last = &o;
  }
  if (!first) return dht::Range{0, 0};

  const auto m = t.quorum_count();
  const auto home = t.peer(first->requester).quorum;
  const auto dist = (first->quorum + m - home) % m;
  if (dist == 0) return dht::Range{0, 0};
  const auto j = static_cast<std::size_t>(std::bit_width(dist) - 1);
  auto ranges = dht::rt_ranges(t.quorum(home));
  const auto upper = ranges.at(j).upper;
  const auto lower = t.quorum(last->quorum).arc.lower;
  return dht::Range{lower, upper};
}

inline double range_fraction(const std::vector<Observation>& log, const dht::Topology& t) {
  return dht::fraction(t.ring, range_estimate(log, t));
}

}  // namespace qpdht::adversary
