#pragma once

#include <cstdint>

#include "qpdht/error.hpp"

namespace qpdht::dht {

using KeyId = std::uint64_t;

// Identifier ring Z_{2^bits}, 1 <= bits <= 64.
struct Ring {
  unsigned bits = 64;

  std::uint64_t mask() const { return bits >= 64 ? ~0ULL : ((1ULL << bits) - 1); }
  unsigned __int128 size() const { return static_cast<unsigned __int128>(1) << bits; }
  KeyId wrap(std::uint64_t v) const { return v & mask(); }
  // Steps clockwise from a to b.
  std::uint64_t distance(KeyId a, KeyId b) const { return (b - a) & mask(); }
  friend bool operator==(const Ring&, const Ring&) = default;
};

// Half-open [lower, upper) walking clockwise; lower == upper is the whole ring.
struct Range {
  KeyId lower = 0;
  KeyId upper = 0;
  friend bool operator==(const Range&, const Range&) = default;
};

inline bool full_ring(const Range& r) { return r.lower == r.upper; }

inline bool contains(const Ring& ring, const Range& r, KeyId key) {
  if (full_ring(r)) return true;
  return ring.distance(r.lower, key) < ring.distance(r.lower, r.upper);
}

inline unsigned __int128 length(const Ring& ring, const Range& r) {
  if (full_ring(r)) return ring.size();
  return ring.distance(r.lower, r.upper);
}

inline double fraction(const Ring& ring, const Range& r) {
  return static_cast<double>(length(ring, r)) / static_cast<double>(ring.size());
}

}  // namespace qpdht::dht
