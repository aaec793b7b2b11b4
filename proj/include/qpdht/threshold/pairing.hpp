#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>

#include "qpdht/algebra/group.hpp"

namespace qpdht::threshold {

using algebra::PrimeOrderGroup;

// Simulation-grade bilinear map: e(a, b) = b^{dlog a}. Discrete logs are
// recorded when keys are generated; nothing here is cryptographically sound.
// It gives the verification predicates the same accept/reject behaviour a
// real pairing would, which is all the simulator needs.
template <PrimeOrderGroup G>
class SimulatedPairing {
 public:
  explicit SimulatedPairing(const G& g) : g_(g), table_(std::make_shared<Table>()) {
    record(g.generator(), g.scalar(1));
  }

  void record(const typename G::Element& e, const typename G::Scalar& dl) {
    std::unique_lock lock(table_->mu);
    table_->dl.insert_or_assign(g_.encode(e), dl);
  }

  std::optional<typename G::Scalar> dlog(const typename G::Element& e) const {
    {
      std::shared_lock lock(table_->mu);
      auto it = table_->dl.find(g_.encode(e));
      if (it != table_->dl.end()) return it->second;
    }
    return g_.dlog(e);
  }

  // One counted exponentiation; nullopt when a's discrete log is unknown.
  std::optional<typename G::Element> pair(const typename G::Element& a, const typename G::Element& b) const {
    auto dl = dlog(a);
    if (!dl) return std::nullopt;
    return g_.exp(b, *dl);
  }

  // e(a, b) == e(c, d)
  bool pairing_equal(const typename G::Element& a, const typename G::Element& b, const typename G::Element& c,
                     const typename G::Element& d) const {
    auto l = pair(a, b);
    auto r = pair(c, d);
    return l && r && *l == *r;
  }

  const G& group() const { return g_; }

 private:
  struct Table {
    mutable std::shared_mutex mu;
    std::map<Bytes, typename G::Scalar> dl;
  };
  G g_;
  std::shared_ptr<Table> table_;
};

}  // namespace qpdht::threshold
