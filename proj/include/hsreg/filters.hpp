#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "hsreg/error.hpp"
#include "hsreg/index_function.hpp"

namespace hsreg {

enum class FilterId { Tikhonov, SpectralCutoff, Landweber };

/// Regularization family g_lambda with declared constants
///   sup |t g(t)| <= D,  sup |g(t)| <= B / lambda,  sup |r(t)| <= gamma,
///   sup |r(t)| t^p <= gamma_p lambda^p,
/// on t in [0, t_max], where r(t) = 1 - t g(t).
///
/// Landweber iterates on the normalized spectrum t / t_max with step 1:
///   g(t) = (1/c) sum_{i<nu} (1 - t/c)^i,  nu = ceil(c / lambda),  c = t_max.
struct FilterFamily {
  FilterId id = FilterId::Tikhonov;
  double D = 1.0;
  double B = 1.0;
  double gamma = 1.0;
  double qualification_p = 1.0;  ///< +inf for spectral cut-off
  double gamma_p = 1.0;
  double t_max = 1.0;
  std::int64_t nu_max = 1000000;

  static FilterFamily tikhonov(double t_max = 1.0) {
    return {FilterId::Tikhonov, 1.0, 1.0, 1.0, 1.0, 1.0, t_max, 0};
  }
  static FilterFamily cutoff(double t_max = 1.0) {
    return {FilterId::SpectralCutoff, 1.0, 1.0, 1.0, std::numeric_limits<double>::infinity(), 1.0, t_max, 0};
  }
  /// Declared qualification p with gamma_p = (p/e)^p.
  static FilterFamily landweber(double p = 2.0, double t_max = 1.0, std::int64_t nu_max = 1000000) {
    detail::require(p > 0.0, "landweber: qualification must be positive");
    detail::require(nu_max >= 1, "landweber: nu_max must be >= 1");
    return {FilterId::Landweber, 1.0, 2.0, 1.0, p, std::pow(p / std::numbers::e, p), t_max, nu_max};
  }

  /// Copy with the spectrum bound replaced (Landweber rescales internally).
  FilterFamily with_t_max(double c) const {
    FilterFamily f = *this;
    f.t_max = c;
    return f;
  }

  bool infinite_qualification() const { return std::isinf(qualification_p); }

  /// Landweber iteration count for a given lambda.
  std::int64_t landweber_steps(double lambda) const {
    const double inv = t_max / lambda;
    // Guard against 1/lambda landing a hair above an integer.
    const double n = std::ceil(inv * (1.0 - 4.0 * std::numeric_limits<double>::epsilon()));
    if (!(n < static_cast<double>(nu_max))) return nu_max;
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(n));
  }

  void check_args(double lambda, double t) const {
    if (!(lambda > 0.0)) throw domain_error("filter: lambda must be positive");
    if (!(t >= 0.0)) throw domain_error("filter: spectrum entries must be nonnegative");
    if (id == FilterId::Landweber && t > t_max * (1.0 + 1e-12))
      throw domain_error("landweber: spectrum entry exceeds t_max");
  }

  double g(double lambda, double t) const {
    check_args(lambda, t);
    switch (id) {
      case FilterId::Tikhonov:
        return 1.0 / (t + lambda);
      case FilterId::SpectralCutoff:
        return t >= lambda ? 1.0 / t : 0.0;
      case FilterId::Landweber: {
        const auto nu = static_cast<double>(landweber_steps(lambda));
        const double u = std::min(t / t_max, 1.0);
        if (u == 0.0) return nu / t_max;
        return -std::expm1(nu * std::log1p(-u)) / u / t_max;
      }
    }
    return 0.0;
  }

  double r(double lambda, double t) const {
    check_args(lambda, t);
    switch (id) {
      case FilterId::Tikhonov:
        return lambda / (t + lambda);
      case FilterId::SpectralCutoff:
        return t >= lambda ? 0.0 : 1.0;
      case FilterId::Landweber: {
        const auto nu = static_cast<double>(landweber_steps(lambda));
        const double u = std::min(t / t_max, 1.0);
        if (u == 0.0) return 1.0;
        return std::exp(nu * std::log1p(-u));
      }
    }
    return 1.0;
  }
};

inline const char* to_string(FilterId id) {
  switch (id) {
    case FilterId::Tikhonov: return "tikhonov";
    case FilterId::SpectralCutoff: return "cutoff";
    case FilterId::Landweber: return "landweber";
  }
  return "?";
}

inline std::optional<FilterId> parse_filter_id(const std::string& s) {
  if (s == "tikhonov") return FilterId::Tikhonov;
  if (s == "cutoff") return FilterId::SpectralCutoff;
  if (s == "landweber") return FilterId::Landweber;
  return std::nullopt;
}

inline FilterFamily make_filter(FilterId id, double t_max = 1.0) {
  switch (id) {
    case FilterId::Tikhonov: return FilterFamily::tikhonov(t_max);
    case FilterId::SpectralCutoff: return FilterFamily::cutoff(t_max);
    case FilterId::Landweber: return FilterFamily::landweber(2.0, t_max);
  }
  return FilterFamily::tikhonov(t_max);
}

/// g_lambda applied elementwise.
inline Eigen::VectorXd apply_filter(const FilterFamily& f, double lambda, const Eigen::VectorXd& spectrum) {
  Eigen::VectorXd out(spectrum.size());
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) out[i] = f.g(lambda, spectrum[i]);
  return out;
}

/// r_lambda applied elementwise.
inline Eigen::VectorXd residual(const FilterFamily& f, double lambda, const Eigen::VectorXd& spectrum) {
  Eigen::VectorXd out(spectrum.size());
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) out[i] = f.r(lambda, spectrum[i]);
  return out;
}

struct RegularizationCheck {
  double D_obs = 0.0;      ///< max |t g(t)|
  double B_obs = 0.0;      ///< max lambda |g(t)|
  double gamma_obs = 0.0;  ///< max |r(t)|
  bool pass = false;
};

inline RegularizationCheck check_regularization_constants(const FilterFamily& f, std::span<const double> lambda_grid,
                                                          std::span<const double> t_grid, double tol = 1e-9) {
  RegularizationCheck out;
  for (double lam : lambda_grid) {
    for (double t : t_grid) {
      const double g = f.g(lam, t);
      const double r = f.r(lam, t);
      out.D_obs = std::max(out.D_obs, std::abs(t * g));
      out.B_obs = std::max(out.B_obs, lam * std::abs(g));
      out.gamma_obs = std::max(out.gamma_obs, std::abs(r));
    }
  }
  out.pass = out.D_obs <= f.D + tol && out.B_obs <= f.B + tol && out.gamma_obs <= f.gamma + tol;
  return out;
}

/// max over the grids of |r(t)| t^p / lambda^p.
inline double check_qualification(const FilterFamily& f, double p, std::span<const double> lambda_grid,
                                  std::span<const double> t_grid) {
  detail::require(p > 0.0, "check_qualification: p must be positive");
  double best = 0.0;
  for (double lam : lambda_grid) {
    for (double t : t_grid) {
      if (t == 0.0) continue;
      const double v = std::abs(f.r(lam, t)) * std::exp(p * (std::log(t) - std::log(lam)));
      best = std::max(best, v);
    }
  }
  return best;
}

/// t^p / phi(t) nondecreasing on the positive grid points.
inline bool check_covering(double p, const IndexFunction& phi, std::span<const double> t_grid) {
  if (std::isinf(p)) return true;
  double prev = -1.0;
  for (double t : t_grid) {
    if (t <= 0.0) continue;
    const double v = std::pow(t, p) / phi(t);
    if (prev >= 0.0 && v < prev * (1.0 - 1e-12)) return false;
    prev = v;
  }
  return true;
}

struct PropRegularizationCheck {
  double max_ratio_1 = 0.0;  ///< max sup_s |r(s)| phi(s) / phi(lambda)
  double max_ratio_2 = 0.0;  ///< max sup_s |r(s)| phi(lambda + s) / phi(lambda)
  double p = 1.0;            ///< qualification used for the 2^p factor
  double c_p = 1.0;          ///< max(gamma, gamma_p)
  double bound_1 = 1.0;
  double bound_2 = 2.0;
  bool pass = false;
};

/// Smallest integer p >= 1 whose power covers phi on the grid.
inline double smallest_covering_integer(const IndexFunction& phi, std::span<const double> t_grid, int p_max = 64) {
  for (int p = 1; p <= p_max; ++p)
    if (check_covering(p, phi, t_grid)) return p;
  throw domain_error("no integer qualification up to 64 covers the index function");
}

inline PropRegularizationCheck check_prop_regularization(const FilterFamily& f, const IndexFunction& phi,
                                                         std::span<const double> lambda_grid,
                                                         std::span<const double> t_grid, double tol = 1e-9) {
  PropRegularizationCheck out;
  if (f.infinite_qualification()) {
    out.p = smallest_covering_integer(phi, t_grid);
  } else {
    out.p = f.qualification_p;
    if (!check_covering(out.p, phi, t_grid))
      throw domain_error("check_prop_regularization: filter qualification does not cover phi");
  }
  out.c_p = std::max(f.gamma, f.gamma_p);
  out.bound_1 = out.c_p;
  out.bound_2 = std::pow(2.0, out.p) * out.c_p;
  for (double lam : lambda_grid) {
    const double pl = phi(lam);
    for (double s : t_grid) {
      const double r = std::abs(f.r(lam, s));
      out.max_ratio_1 = std::max(out.max_ratio_1, r * phi(s) / pl);
      out.max_ratio_2 = std::max(out.max_ratio_2, r * phi(lam + s) / pl);
    }
  }
  out.pass = out.max_ratio_1 <= out.bound_1 + tol && out.max_ratio_2 <= out.bound_2 + tol;
  return out;
}

}  // namespace hsreg
