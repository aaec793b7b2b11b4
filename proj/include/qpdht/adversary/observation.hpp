#pragma once

#include <cstdint>
#include <vector>

#include "qpdht/dht/topology.hpp"

namespace qpdht::adversary {

enum class ObservationKind : std::uint8_t { home, hop, final };

// What one controlled peer saw when a requester contacted its quorum.
struct Observation {
  dht::PeerIndex observer = 0;
  dht::PeerIndex requester = 0;
  dht::QuorumId quorum = 0;
  dht::QuorumId prev_quorum = 0xffffffffu;  // visible through the proof S_{i-1} or the chain
  std::uint64_t time = 0;
  int chain_length = -1;  // links visible in a signature chain, -1 otherwise
  std::uint64_t lookup = 0;
  ObservationKind kind = ObservationKind::hop;
};

// Colluding adversary: every controlled peer appends to one shared log.
struct ObservationLog {
  std::vector<Observation> entries;

  std::vector<Observation> for_lookup(std::uint64_t id) const {
    std::vector<Observation> out;
    for (const auto& o : entries)
      if (o.lookup == id) out.push_back(o);
    return out;
  }
};

}  // namespace qpdht::adversary
