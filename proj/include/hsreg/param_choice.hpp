#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "hsreg/effective_dimension.hpp"
#include "hsreg/error.hpp"
#include "hsreg/smoothness_distance.hpp"
#include "hsreg/spectral_model.hpp"

namespace hsreg {

enum class LambdaRuleKind { BalanceEffdim, PhiInverse, BalanceGeneral, PowerTable };

inline const char* to_string(LambdaRuleKind k) {
  switch (k) {
    case LambdaRuleKind::BalanceEffdim: return "balance_effdim";
    case LambdaRuleKind::PhiInverse: return "phi_inverse";
    case LambdaRuleKind::BalanceGeneral: return "balance_general";
    case LambdaRuleKind::PowerTable: return "power_table";
  }
  return "?";
}

inline std::optional<LambdaRuleKind> parse_lambda_rule(const std::string& s) {
  if (s == "balance_effdim") return LambdaRuleKind::BalanceEffdim;
  if (s == "phi_inverse") return LambdaRuleKind::PhiInverse;
  if (s == "balance_general") return LambdaRuleKind::BalanceGeneral;
  if (s == "power_table") return LambdaRuleKind::PowerTable;
  return std::nullopt;
}

/// Rule plus its parameters. `c` is the effective-dimension constant in
/// N(lambda) ~ c lambda^{-b} used by the power table; `scale` multiplies the
/// resulting lambda (default 1).
struct LambdaRule {
  LambdaRuleKind kind = LambdaRuleKind::BalanceEffdim;
  double c = 1.0;
  double scale = 1.0;
};

struct LambdaChoice {
  double lambda = 1.0;
  bool flagged = false;
  std::string note;
};

inline constexpr double kLambdaFloor = 1e-14;

namespace detail {

/// Root of an increasing h on [lo, hi] by bisection in log lambda.
inline double bisect_log(const std::function<double(double)>& h, double lo, double hi) {
  double a = std::log(lo), b = std::log(hi);
  for (int it = 0; it < 300 && b - a > 1e-14; ++it) {
    const double mid = 0.5 * (a + b);
    (h(std::exp(mid)) < 0.0 ? a : b) = mid;
  }
  return std::exp(0.5 * (a + b));
}

}  // namespace detail

/// Solves N(lambda) = m lambda for a decreasing effective-dimension curve.
inline LambdaChoice lambda_balance_effdim(const std::function<double(double)>& N, std::size_t m) {
  detail::require(m >= 1, "lambda_balance_effdim: m must be positive");
  const double md = static_cast<double>(m);
  auto h = [&](double lam) { return md * lam - N(lam); };  // increasing
  LambdaChoice out;
  if (h(1.0) < 0.0) {
    out.lambda = 1.0;
    out.flagged = true;
    out.note = "N(1) > m: sample size too small for the balance rule";
    return out;
  }
  if (h(kLambdaFloor) > 0.0) {
    out.lambda = kLambdaFloor;
    out.flagged = true;
    out.note = "no sign change above the lambda floor";
    return out;
  }
  out.lambda = detail::bisect_log(h, kLambdaFloor, 1.0);
  return out;
}

inline LambdaChoice lambda_balance_effdim(const Vec& spectrum, std::size_t m) {
  return lambda_balance_effdim([&](double lam) { return effdim(spectrum, lam); }, m);
}

/// lambda = phi^{-1}(1/sqrt(m)) with phi(t) = t^{a(q-1)}.
inline double lambda_phi_inverse(double a_link, double q, std::size_t m) {
  if (!(q > 1.0)) throw domain_error("lambda_phi_inverse: requires q > 1");
  detail::require(a_link > 0.0, "lambda_phi_inverse: a_link must be positive");
  detail::require(m >= 1, "lambda_phi_inverse: m must be positive");
  const double lam = std::pow(static_cast<double>(m), -1.0 / (2.0 * a_link * (q - 1.0)));
  return std::min(lam, 1.0);
}

/// Solves theta^2(rho(lambda)) / rho^2(lambda) lambda m = N(lambda), i.e.
/// lambda^{2a(r-1)} lambda m = N(lambda) for power theta, rho.
inline LambdaChoice lambda_balance_general(const Vec& spectrum, const SmoothnessSpec& spec, std::size_t m) {
  detail::require(m >= 1, "lambda_balance_general: m must be positive");
  const double e = 2.0 * spec.a_link * (spec.r - 1.0) + 1.0;
  detail::require(e > 0.0, "lambda_balance_general: balance equation is not monotone for these exponents");
  const double md = static_cast<double>(m);
  auto h = [&](double lam) { return std::pow(lam, e) * md - effdim(spectrum, lam); };
  LambdaChoice out;
  if (h(1.0) < 0.0) {
    out.lambda = 1.0;
    out.flagged = true;
    out.note = "no sign change on (floor, 1]: returned the upper endpoint";
    return out;
  }
  if (h(kLambdaFloor) > 0.0) {
    out.lambda = kLambdaFloor;
    out.flagged = true;
    out.note = "no sign change on (floor, 1]: returned the lower endpoint";
    return out;
  }
  out.lambda = detail::bisect_log(h, kLambdaFloor, 1.0);
  if (effdim(spectrum, out.lambda) > md * out.lambda * (1.0 + 1e-9)) {
    out.flagged = true;
    out.note = "N(lambda) > m lambda: sample size below the threshold for this rule";
  }
  return out;
}

/// lambda = (c/m)^{1/(b+1)}: closed-form solution of c lambda^{-b} = m lambda.
inline double lambda_power_effdim(double b, std::size_t m, double c = 1.0) {
  return std::pow(c / static_cast<double>(m), 1.0 / (b + 1.0));
}

/// True when the regular case uses the first (saturated) regime.
inline bool regular_first_regime(double a, double b, double r, double q) {
  return a * q >= a * r + 0.5 * (b + 1.0);
}

/// Closed-form lambda from the rate table; `c` is the effective-dimension
/// constant (1 reproduces the bare orders).
inline double lambda_power_table(double a, double b, double r, double q, std::size_t m, RateCase c_case,
                                 double c = 1.0) {
  detail::require(a > 0.0 && a <= 0.5, "lambda_power_table: requires 0 < a <= 1/2");
  detail::require(b >= 0.0 && b < 1.0, "lambda_power_table: requires 0 <= b < 1");
  detail::require(m >= 1, "lambda_power_table: m must be positive");
  const double md = static_cast<double>(m);
  if (c_case == RateCase::Oversmoothing) {
    if (!(r <= 1.0)) throw domain_error("lambda_power_table: oversmoothing requires r <= 1");
    if (q != 1.0) throw domain_error("lambda_power_table: oversmoothing requires q = 1");
    return lambda_power_effdim(b, m, c);
  }
  if (!(r >= 1.0)) throw domain_error("lambda_power_table: regular case requires r >= 1");
  if (!(q > 1.0)) throw domain_error("lambda_power_table: regular case requires q > 1");
  if (!(a * q >= a * r)) throw domain_error("lambda_power_table: regular case requires a r <= a q");
  if (regular_first_regime(a, b, r, q)) return std::pow(md, -1.0 / (2.0 * a * (q - 1.0)));
  return std::pow(c / md, 1.0 / (2.0 * a * r + b + 1.0 - 2.0 * a));
}

}  // namespace hsreg
