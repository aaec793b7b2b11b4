#pragma once

#include <cstdint>
#include <limits>
#include <span>

#include "qpdht/algebra/hash.hpp"

namespace qpdht::algebra {

// Seedable deterministic random source (HMAC-SHA256 counter mode). All
// randomness in the library flows through this type, so identical seeds give
// bit-identical outputs. Satisfies UniformRandomBitGenerator.
class Drbg {
 public:
  using result_type = std::uint64_t;

  explicit Drbg(std::uint64_t seed) {
    ByteWriter w;
    w.raw(as_view("qpdht/drbg-seed/v1")).u64(seed);
    key_.bytes = sha256(w.bytes());
  }
  Drbg(const PrfKey& key, ByteView personalization) {
    key_.bytes = hmac_sha256(key.bytes, personalization);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint8_t b[8];
    fill(b);
    std::uint64_t v = 0;
    for (auto x : b) v = (v << 8) | x;
    return v;
  }

  void fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
      if (pos_ == block_.size()) refill();
      b = block_[pos_++];
    }
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }

  // Uniform in [0, bound), rejection sampled.
  std::uint64_t uniform(std::uint64_t bound) {
    if (bound == 0) throw InvalidArgument("uniform bound must be positive");
    const std::uint64_t limit = max() - (max() % bound);
    for (;;) {
      auto v = (*this)();
      if (v < limit) return v % bound;
    }
  }

  // Independent child stream; the parent stream is not advanced.
  Drbg fork(ByteView label) const { return Drbg(key_, label); }
  Drbg fork(std::string_view label, std::uint64_t index) const {
    ByteWriter w;
    w.raw(as_view(label)).u64(index);
    return Drbg(key_, w.bytes());
  }

 private:
  void refill() {
    ByteWriter w;
    w.raw(as_view("block")).u64(counter_++);
    block_ = hmac_sha256(key_.bytes, w.bytes());
    pos_ = 0;
  }

  PrfKey key_;
  std::uint64_t counter_ = 0;
  Digest block_{};
  std::size_t pos_ = 32;
};

}  // namespace qpdht::algebra
