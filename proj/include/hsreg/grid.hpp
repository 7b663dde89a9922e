#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hsreg/error.hpp"

namespace hsreg {

/// n equally spaced points on [lo, hi], endpoints included.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  detail::require(n >= 1, "linspace: n must be positive");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  out.back() = hi;
  return out;
}

/// n log-spaced points on [lo, hi], endpoints included.
inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
  detail::require(lo > 0.0 && hi > 0.0, "logspace: bounds must be positive");
  auto exps = linspace(std::log10(lo), std::log10(hi), n);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::pow(10.0, exps[i]);
  out.front() = lo;
  out.back() = hi;
  return out;
}

/// Log-spaced grid with a fixed density per decade (at least two points).
inline std::vector<double> logspace_per_decade(double lo, double hi, std::size_t per_decade) {
  detail::require(lo > 0.0 && hi > lo, "logspace_per_decade: need 0 < lo < hi");
  const double decades = std::log10(hi / lo);
  const auto n = static_cast<std::size_t>(std::ceil(decades * static_cast<double>(per_decade))) + 1;
  return logspace(lo, hi, n < 2 ? 2 : n);
}

/// Default grids for checking filter constants: 400 log-spaced lambda in
/// [1e-6, 1] and 1000 linear t in [0, t_max].
inline std::vector<double> default_filter_lambda_grid() { return logspace(1e-6, 1.0, 400); }
inline std::vector<double> default_filter_t_grid(double t_max = 1.0) {
  return linspace(0.0, t_max, 1000);
}

}  // namespace hsreg
