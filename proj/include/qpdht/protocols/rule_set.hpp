#pragma once

#include <deque>
#include <map>

#include "qpdht/dht/topology.hpp"

namespace qpdht::protocols {

// Lookups a peer may start per window of simulated rounds.
struct RuleSet {
  std::uint32_t max_lookups = 10;
  std::uint64_t window_rounds = 100;
};

class RuleSetState {
 public:
  explicit RuleSetState(RuleSet rules = {}) : rules_(rules) {}

  // Records the attempt when admitted.
  bool admit(dht::PeerIndex p, std::uint64_t round) {
    auto& h = history_[p];
    while (!h.empty() && h.front() + rules_.window_rounds <= round) h.pop_front();
    if (h.size() >= rules_.max_lookups) return false;
    h.push_back(round);
    return true;
  }

 private:
  RuleSet rules_;
  std::map<dht::PeerIndex, std::deque<std::uint64_t>> history_;
};

}  // namespace qpdht::protocols
