#pragma once

#include <set>
#include <span>
#include <vector>

#include "qpdht/algebra/group.hpp"

namespace qpdht::algebra {

// Coefficients lambda_i with sum lambda_i * f(x_i) = f(0) for deg f < |xs|.
template <PrimeOrderGroup G>
std::vector<typename G::Scalar> lagrange_coeffs(const G& g, std::span<const typename G::Scalar> xs) {
  if (xs.empty()) throw InvalidArgument("need at least one interpolation point");
  std::set<typename G::Scalar> seen;
  for (const auto& x : xs) {
    if (g.is_zero(x)) throw InvalidArgument("interpolation index must be nonzero");
    if (!seen.insert(x).second) throw InvalidArgument("duplicate interpolation index");
  }
  std::vector<typename G::Scalar> out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto num = g.scalar(1), den = g.scalar(1);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (i == j) continue;
      num = g.mul(num, xs[j]);                   // (0 - x_j) up to sign
      den = g.mul(den, g.sub(xs[j], xs[i]));     // (x_i - x_j) with the same sign flip
    }
    out.push_back(g.mul(num, g.inverse(den)));
  }
  return out;
}

template <PrimeOrderGroup G>
std::vector<typename G::Scalar> lagrange_coeffs(const G& g, std::span<const std::uint32_t> indices) {
  std::vector<typename G::Scalar> xs;
  xs.reserve(indices.size());
  for (auto i : indices) xs.push_back(g.scalar(i));
  return lagrange_coeffs(g, std::span<const typename G::Scalar>(xs));
}

// Horner evaluation; coeffs[0] is the constant term.
template <PrimeOrderGroup G>
typename G::Scalar poly_eval(const G& g, std::span<const typename G::Scalar> coeffs, const typename G::Scalar& x) {
  auto acc = g.scalar(0);
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = g.add(g.mul(acc, x), *it);
  return acc;
}

}  // namespace qpdht::algebra
