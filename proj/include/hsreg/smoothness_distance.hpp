#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsreg/error.hpp"
#include "hsreg/index_function.hpp"
#include "hsreg/spectral_model.hpp"

namespace hsreg {

enum class RateCase { Oversmoothing, Regular };

inline const char* to_string(RateCase c) { return c == RateCase::Oversmoothing ? "oversmoothing" : "regular"; }

inline std::optional<RateCase> parse_rate_case(const std::string& s) {
  if (s == "oversmoothing") return RateCase::Oversmoothing;
  if (s == "regular") return RateCase::Regular;
  return std::nullopt;
}

struct DistanceResult {
  double d_value = 0.0;
  Vec minimizer_v;
  double mu = 0.0;  ///< KKT multiplier; 0 when the constraint is inactive
};

namespace detail {

/// Root of norm(mu) = R for a strictly decreasing norm(.), with norm(0) > R.
/// Bracket [0, 1], doubled until norm(hi) < R, then bisection.
inline double solve_multiplier(const std::function<double(double)>& norm, double R) {
  constexpr int kMaxIter = 200;
  constexpr double kTol = 1e-12;
  double lo = 0.0;
  double hi = 1.0;
  int grow = 0;
  while (norm(hi) >= R) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 2000 || !std::isfinite(hi)) throw numerical_error("distance: multiplier bracket did not close");
  }
  for (int it = 0; it < kMaxIter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = norm(mid);
    if (std::abs(v - R) <= kTol * std::max(1.0, R)) return mid;
    (v > R ? lo : hi) = mid;
    if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
  }
  const double mid = 0.5 * (lo + hi);
  // Interval collapsed to machine precision: accept when the residual is at
  // the level the arithmetic can resolve.
  if (std::abs(norm(mid) - R) <= 1e-9 * std::max(1.0, R)) return mid;
  throw numerical_error("distance: multiplier root finder did not converge");
}

}  // namespace detail

/// d(R) = inf { ||f - L^{-1} v|| : ||v|| <= R }, solved via
/// v_j(mu) = l_j f_j / (1 + mu l_j^2).
inline DistanceResult distance_fn(const SpectralProblem& p, double R) {
  detail::require(R > 0.0, "distance_fn: R must be positive");
  const Vec& f = p.f_true;
  const Vec& l = p.l;
  DistanceResult out;
  const Vec lf = (l.array() * f.array()).matrix();
  if (lf.norm() <= R) {
    out.minimizer_v = lf;
    return out;
  }
  auto v_of = [&](double mu) { return (lf.array() / (1.0 + mu * l.array().square())).matrix().eval(); };
  out.mu = detail::solve_multiplier([&](double mu) { return v_of(mu).norm(); }, R);
  out.minimizer_v = v_of(out.mu);
  const auto l2 = l.array().square();
  out.d_value = (f.array() * out.mu * l2 / (1.0 + out.mu * l2)).matrix().norm();
  return out;
}

/// d_q(R) = inf { ||L(f - f_rho)|| : f = L^{-q} v, ||v|| <= R }, solved via
/// v_j(mu) = l_j^{2-q} f_j / (l_j^{2-2q} + mu).
inline DistanceResult distance_fn_q(const SpectralProblem& p, double q, double R) {
  detail::require(R > 0.0, "distance_fn_q: R must be positive");
  detail::require(q > 1.0, "distance_fn_q: q must exceed 1");
  const Vec& f = p.f_true;
  const Vec& l = p.l;
  DistanceResult out;
  const Vec lqf = (l.array().pow(q) * f.array()).matrix();
  if (lqf.norm() <= R) {
    out.minimizer_v = lqf;
    return out;
  }
  const Eigen::ArrayXd w = l.array().pow(2.0 - 2.0 * q);
  const Eigen::ArrayXd num = l.array().pow(2.0 - q) * f.array();
  auto v_of = [&](double mu) { return (num / (w + mu)).matrix().eval(); };
  out.mu = detail::solve_multiplier([&](double mu) { return v_of(mu).norm(); }, R);
  out.minimizer_v = v_of(out.mu);
  out.d_value = (l.array() * f.array() * out.mu / (w + out.mu)).matrix().norm();
  return out;
}

enum class DistanceKind { D, DQ };

struct DistanceCurve {
  std::vector<double> Rs;
  std::vector<double> values;
  DistanceKind kind = DistanceKind::D;
  double q = 1.0;
};

inline DistanceCurve distance_curve(const SpectralProblem& p, std::span<const double> Rs, DistanceKind kind,
                                    double q = 2.0) {
  DistanceCurve c;
  c.kind = kind;
  c.q = q;
  c.Rs.assign(Rs.begin(), Rs.end());
  c.values.reserve(Rs.size());
  for (double R : Rs) c.values.push_back(kind == DistanceKind::D ? distance_fn(p, R).d_value : distance_fn_q(p, q, R).d_value);
  return c;
}

struct DistanceBound {
  double value = 0.0;
  bool degenerate = false;  ///< theta_r >= 1: benchmark smoothness attained
};

/// R (R_dagger / R)^{1/(1-r)} for theta(t) = t^r with r < 1.
inline DistanceBound distance_bound(double theta_r, double R_dagger, double R) {
  detail::require(theta_r > 0.0, "distance_bound: theta exponent must be positive");
  detail::require(R_dagger > 0.0 && R > 0.0, "distance_bound: radii must be positive");
  if (theta_r >= 1.0) return {0.0, true};
  detail::require(R >= R_dagger, "distance_bound: requires R >= R_dagger");
  return {R * std::pow(R_dagger / R, 1.0 / (1.0 - theta_r)), false};
}

/// R (iota/theta)^{-1}(R_dagger / R) for a general sub-linear theta, with the
/// inverse of t -> t / theta(t) found by bisection on (0, t_hi].
inline double distance_bound_general(const IndexFunction& theta, double R_dagger, double R, double t_hi = 1.0) {
  detail::require(R >= R_dagger && R_dagger > 0.0, "distance_bound_general: requires R >= R_dagger > 0");
  const double target = R_dagger / R;
  auto h = [&](double t) { return t / theta(t); };
  if (h(t_hi) <= target) return R * t_hi;
  double lo = 0.0, hi = t_hi;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= 0.0) break;
    (h(mid) < target ? lo : hi) = mid;
  }
  return R * hi;
}

/// R(lambda) = R_dagger theta(rho(lambda)) / rho(lambda)     (oversmoothing)
///           = R_dagger theta(rho(lambda)) / rho(lambda)^q   (regular).
inline double r_of_lambda(const SmoothnessSpec& spec, double lambda, RateCase c) {
  detail::require(lambda > 0.0 && lambda <= 1.0, "r_of_lambda: lambda must lie in (0, 1]");
  const double e = c == RateCase::Oversmoothing ? spec.a_link * (spec.r - 1.0) : spec.a_link * (spec.r - spec.q);
  return spec.R_dagger * std::pow(lambda, e);
}

}  // namespace hsreg
