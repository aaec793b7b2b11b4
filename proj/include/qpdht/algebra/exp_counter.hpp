#pragma once

#include <atomic>
#include <cstdint>

namespace qpdht::algebra {

// Process-wide exponentiation count plus a per-thread view. Simulation runs are
// single-threaded, so per-role deltas are taken from the thread-local counter.
inline std::atomic<std::uint64_t>& global_exp_counter() {
  static std::atomic<std::uint64_t> counter{0};
  return counter;
}

inline std::uint64_t& thread_exp_counter() {
  thread_local std::uint64_t counter = 0;
  return counter;
}

inline void count_exponentiation() {
  global_exp_counter().fetch_add(1, std::memory_order_relaxed);
  ++thread_exp_counter();
}

inline std::uint64_t exp_count() { return global_exp_counter().load(std::memory_order_relaxed); }

class ExpScope {
 public:
  ExpScope() : start_(thread_exp_counter()) {}
  std::uint64_t delta() const { return thread_exp_counter() - start_; }

 private:
  std::uint64_t start_;
};

}  // namespace qpdht::algebra
