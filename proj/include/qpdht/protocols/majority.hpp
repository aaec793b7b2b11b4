#pragma once

#include <map>
#include <vector>

#include "qpdht/error.hpp"

namespace qpdht::protocols {

// Value reported by strictly more than half of a quorum of `quorum_size`.
template <class T>
T majority_filter(const std::vector<T>& responses, std::size_t quorum_size) {
  std::map<T, std::size_t> counts;
  for (const auto& r : responses) {
    if (++counts[r] * 2 > quorum_size) return r;
  }
  throw FilteringFailed("no value reported by a strict majority");
}

}  // namespace qpdht::protocols
