#pragma once

#include <concepts>
#include <cstdint>
#include <optional>
#include <string>

#include "qpdht/algebra/drbg.hpp"
#include "qpdht/bytes.hpp"

namespace qpdht::algebra {

enum class GroupMode { production, testdouble };

struct GroupParams {
  std::string name;
  std::string descriptor;  // modulus or curve name
  std::string order_hex;
  unsigned kappa = 0;
  GroupMode mode = GroupMode::production;
};

// Everything the OT and threshold-signature code needs from a backend.
// exp() is the only counted operation.
template <class G>
concept PrimeOrderGroup = requires(const G& g, const typename G::Element& e, const typename G::Scalar& s,
                                   Drbg& rng, ByteView v, std::uint64_t n) {
  typename G::Element;
  typename G::Scalar;
  { g.params() } -> std::convertible_to<GroupParams>;
  { g.element_size() } -> std::convertible_to<std::size_t>;
  { g.scalar_size() } -> std::convertible_to<std::size_t>;
  { g.generator() } -> std::same_as<typename G::Element>;
  { g.identity() } -> std::same_as<typename G::Element>;
  { g.exp(e, s) } -> std::same_as<typename G::Element>;
  { g.mul(e, e) } -> std::same_as<typename G::Element>;
  { g.div(e, e) } -> std::same_as<typename G::Element>;
  { g.inverse(e) } -> std::same_as<typename G::Element>;
  { g.is_identity(e) } -> std::same_as<bool>;
  { g.encode(e) } -> std::same_as<Bytes>;
  { g.decode(v) } -> std::same_as<typename G::Element>;
  { g.hash_to_group(v) } -> std::same_as<typename G::Element>;
  { g.random_element(rng) } -> std::same_as<typename G::Element>;
  { g.dlog(e) } -> std::same_as<std::optional<typename G::Scalar>>;
  { g.scalar(n) } -> std::same_as<typename G::Scalar>;
  { g.random_scalar(rng) } -> std::same_as<typename G::Scalar>;
  { g.random_nonzero_scalar(rng) } -> std::same_as<typename G::Scalar>;
  { g.add(s, s) } -> std::same_as<typename G::Scalar>;
  { g.sub(s, s) } -> std::same_as<typename G::Scalar>;
  { g.mul(s, s) } -> std::same_as<typename G::Scalar>;
  { g.neg(s) } -> std::same_as<typename G::Scalar>;
  { g.inverse(s) } -> std::same_as<typename G::Scalar>;
  { g.is_zero(s) } -> std::same_as<bool>;
  { g.encode(s) } -> std::same_as<Bytes>;
  { g.decode_scalar(v) } -> std::same_as<typename G::Scalar>;
  { g.scalar_from_hash(v) } -> std::same_as<typename G::Scalar>;
  { e == e } -> std::convertible_to<bool>;
  { s == s } -> std::convertible_to<bool>;
};

}  // namespace qpdht::algebra
