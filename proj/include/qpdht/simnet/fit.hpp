#pragma once

#include <cmath>
#include <string_view>
#include <vector>

#include "qpdht/error.hpp"

namespace qpdht::simnet {

enum class Model { log_n, log2_n };

inline double model_basis(Model m, double n) {
  double l = std::log2(n);
  return m == Model::log_n ? l : l * l;
}

inline std::string_view model_name(Model m) { return m == Model::log_n ? "log n" : "log^2 n"; }

struct Fit {
  double coefficient = 0;
  double r2 = 0;
};

// Least squares for y = c * f(n) through the origin. R^2 = 1 - SS_res/SS_tot
// with SS_tot taken about the mean of y.
inline Fit fit_complexity(const std::vector<std::pair<double, double>>& series, Model m) {
  if (series.size() < 2) throw InvalidArgument("need at least two points to fit");
  double sxy = 0, sxx = 0, mean = 0;
  for (auto [n, y] : series) {
    double x = model_basis(m, n);
    sxy += x * y;
    sxx += x * x;
    mean += y;
  }
  mean /= static_cast<double>(series.size());
  Fit f;
  f.coefficient = sxy / sxx;
  double ss_res = 0, ss_tot = 0;
  for (auto [n, y] : series) {
    double e = y - f.coefficient * model_basis(m, n);
    ss_res += e * e;
    ss_tot += (y - mean) * (y - mean);
  }
  f.r2 = ss_tot == 0 ? (ss_res == 0 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
  return f;
}

}  // namespace qpdht::simnet
