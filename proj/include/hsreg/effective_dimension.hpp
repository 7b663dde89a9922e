#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsreg/error.hpp"
#include "hsreg/grid.hpp"
#include "hsreg/index_function.hpp"
#include "hsreg/spectral_model.hpp"

namespace hsreg {

/// N(lambda) = sum_j t_j / (t_j + lambda).
inline double effdim(const Vec& spectrum, double lambda) {
  if (!(lambda > 0.0)) throw domain_error("effdim: lambda must be positive");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < spectrum.size(); ++j) acc += spectrum[j] / (spectrum[j] + lambda);
  return acc;
}

struct EffDimCurve {
  std::vector<double> lambdas;
  std::vector<double> values;
  std::string spectrum_id;
};

inline EffDimCurve effdim_curve(const Vec& spectrum, double lambda_lo, double lambda_hi, std::size_t per_decade = 40,
                                std::string id = {}) {
  EffDimCurve c;
  c.lambdas = logspace_per_decade(lambda_lo, lambda_hi, per_decade);
  c.values.reserve(c.lambdas.size());
  for (double lam : c.lambdas) c.values.push_back(effdim(spectrum, lam));
  c.spectrum_id = std::move(id);
  return c;
}

/// Ordinary least squares y = c0 + c1 x with the slope standard error.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double max_abs_residual = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y,
                        std::span<const double> w = {}) {
  const std::size_t n = x.size();
  detail::require(n == y.size() && n >= 2, "fit_line: need at least two points");
  detail::require(w.empty() || w.size() == n, "fit_line: weight length mismatch");
  auto wt = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += wt(i);
    sx += wt(i) * x[i];
    sy += wt(i) * y[i];
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += wt(i) * (x[i] - mx) * (x[i] - mx);
    sxy += wt(i) * (x[i] - mx) * (y[i] - my);
  }
  detail::require(sxx > 0.0, "fit_line: abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double res = y[i] - f.intercept - f.slope * x[i];
    rss += wt(i) * res * res;
    f.max_abs_residual = std::max(f.max_abs_residual, std::abs(res));
  }
  f.slope_stderr = n > 2 ? std::sqrt(rss / static_cast<double>(n - 2) / sxx) : 0.0;
  return f;
}

struct EffDimFit {
  double b_hat = 0.0;
  double b_stderr = 0.0;
  double c_hat = 1.0;            ///< N(lambda) ~ c_hat lambda^{-b_hat}
  double max_log_residual = 0.0;
  bool poor_power_fit = false;   ///< log-type or otherwise curved profile
};

/// Threshold on the max log-residual above which a power law is flagged.
inline constexpr double kPoorPowerFitResidual = 0.08;

/// Leading constant c in N(lambda) ~ c lambda^{-b} for t_j = j^{-1/b}:
/// the integral of 1/(1 + x^{1/b}) over (0, inf), equal to pi b / sin(pi b).
inline double effdim_power_constant(double b) {
  detail::require(b > 0.0 && b < 1.0, "effdim_power_constant: b must lie in (0, 1)");
  return std::numbers::pi * b / std::sin(std::numbers::pi * b);
}

/// Least-squares slope of log N against log lambda on a log grid.
inline EffDimFit fit_effdim_exponent(const Vec& spectrum, double lambda_lo, double lambda_hi, std::size_t n_points) {
  detail::require(lambda_lo > 0.0 && lambda_lo < lambda_hi && lambda_hi <= 1.0,
                  "fit_effdim_exponent: need 0 < lambda_lo < lambda_hi <= 1");
  detail::require(n_points >= 3, "fit_effdim_exponent: need at least three points");
  const double d = static_cast<double>(spectrum.size());
  if (effdim(spectrum, lambda_lo) > std::max(d / 2.0, 1.0))
    throw domain_error("fit_effdim_exponent: N(lambda_lo) exceeds d/2, truncation is binding; increase d");
  const auto lams = logspace(lambda_lo, lambda_hi, n_points);
  std::vector<double> lx(n_points), ly(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    lx[i] = std::log(lams[i]);
    ly[i] = std::log(effdim(spectrum, lams[i]));
  }
  const LineFit lf = fit_line(lx, ly);
  EffDimFit out;
  out.b_hat = -lf.slope;
  out.b_stderr = lf.slope_stderr;
  out.c_hat = std::exp(lf.intercept);
  out.max_log_residual = lf.max_abs_residual;
  out.poor_power_fit = lf.max_abs_residual > kPoorPowerFitResidual;
  return out;
}

/// Smallest C with t^{-1} sum_{s_j < t} s_j <= C #{j : s_j >= t} over the grid.
inline double check_tail_condition(const Vec& spectrum, std::span<const double> t_grid) {
  std::vector<double> s(spectrum.data(), spectrum.data() + spectrum.size());
  std::sort(s.begin(), s.end());  // ascending
  std::vector<double> prefix(s.size() + 1, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) prefix[i + 1] = prefix[i] + s[i];
  double best = 0.0;
  bool any = false;
  for (double t : t_grid) {
    if (!(t > 0.0)) continue;
    const auto below = static_cast<std::size_t>(std::lower_bound(s.begin(), s.end(), t) - s.begin());
    const std::size_t above = s.size() - below;
    if (above == 0) continue;
    any = true;
    best = std::max(best, (prefix[below] / t) / static_cast<double>(above));
  }
  if (!any) throw domain_error("check_tail_condition: no grid point lies at or below the spectrum maximum");
  return best;
}

struct EffDimRelation {
  double max_ratio = 0.0;
  double ceiling = 8.0;
  bool pass = false;
  std::size_t skipped = 0;  ///< cells with lambda / rho^2(lambda) above ||L_nu||
};

/// max over lambda of N_{L_nu}(lambda / rho^2(lambda)) / N_{T_nu}(lambda).
inline EffDimRelation check_effdim_relation(const SpectralProblem& p, const IndexFunction& rho,
                                            std::span<const double> lambda_grid, double ceiling = 8.0) {
  const Vec t = p.t();
  const Vec lnu = p.l_nu();
  const double lnu_max = lnu.maxCoeff();
  EffDimRelation out;
  out.ceiling = ceiling;
  for (double lam : lambda_grid) {
    const double r = rho(lam);
    const double arg = lam / (r * r);
    if (!(arg <= lnu_max) || !std::isfinite(arg)) {
      ++out.skipped;
      continue;
    }
    const double ratio = effdim(lnu, arg) / effdim(t, lam);
    if (!std::isfinite(ratio)) throw numerical_error("check_effdim_relation: non-finite ratio");
    out.max_ratio = std::max(out.max_ratio, ratio);
  }
  out.pass = out.max_ratio <= ceiling;
  return out;
}

}  // namespace hsreg
