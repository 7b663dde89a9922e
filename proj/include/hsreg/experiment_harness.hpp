#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsreg/effective_dimension.hpp"
#include "hsreg/error.hpp"
#include "hsreg/filters.hpp"
#include "hsreg/param_choice.hpp"
#include "hsreg/parallel.hpp"
#include "hsreg/rng.hpp"
#include "hsreg/sampling_estimator.hpp"
#include "hsreg/smoothness_distance.hpp"
#include "hsreg/spectral_model.hpp"

namespace hsreg {

enum class ErrorNorm { H, Prediction, Zeta };

inline const char* to_string(ErrorNorm e) {
  switch (e) {
    case ErrorNorm::H: return "h";
    case ErrorNorm::Prediction: return "prediction";
    case ErrorNorm::Zeta: return "zeta";
  }
  return "?";
}

inline std::optional<ErrorNorm> parse_error_norm(const std::string& s) {
  if (s == "h" || s == "H") return ErrorNorm::H;
  if (s == "prediction") return ErrorNorm::Prediction;
  if (s == "zeta") return ErrorNorm::Zeta;
  return std::nullopt;
}

/// Parameters of build_power_problem; d = 0 selects the truncation rule.
struct ProblemSpec {
  double s = 1.0;
  double a_link = 0.5;
  double r = 0.5;
  double q = 1.0;
  double R_dagger = 1.0;
  double sigma = 0.05;
  int d = 0;
  VPatternSpec v_pattern{VPattern::Decaying, 0};

  SmoothnessSpec smoothness() const { return {r, a_link, q, R_dagger, s}; }
};

/// d(m) = min(2000, max(64, 4 ceil(m^{1/(2s)}))).
inline int truncation_rule(std::size_t m, double s) {
  const double root = std::ceil(std::pow(static_cast<double>(m), 1.0 / (2.0 * s)) - 1e-9);
  const double d = std::min(2000.0, std::max(64.0, 4.0 * root));
  return static_cast<int>(d);
}

struct ExperimentConfig {
  ProblemSpec problem;
  FilterId filter = FilterId::Tikhonov;
  double landweber_p = 2.0;
  std::int64_t nu_max = 1000000;
  LambdaRule lambda_rule;
  std::vector<std::size_t> m_grid;
  std::size_t trials_per_m = 50;
  std::uint64_t seed = 0;
  ErrorNorm error_norm = ErrorNorm::H;
  double zeta_exponent = 0.5;  ///< zeta(t) = t^c for ErrorNorm::Zeta
  RateCase rate_case = RateCase::Regular;
  Design design = Design::RandomUniform;
  double tolerance = 0.08;
  std::optional<double> expected_exponent;  ///< overrides the table value
  unsigned threads = 0;

  FilterFamily make_filter_family() const {
    switch (filter) {
      case FilterId::Tikhonov: return FilterFamily::tikhonov();
      case FilterId::SpectralCutoff: return FilterFamily::cutoff();
      case FilterId::Landweber: return FilterFamily::landweber(landweber_p, 1.0, nu_max);
    }
    return FilterFamily::tikhonov();
  }

  int resolved_d() const {
    if (problem.d > 0) return problem.d;
    const std::size_t m_max = m_grid.empty() ? 1 : *std::max_element(m_grid.begin(), m_grid.end());
    return truncation_rule(m_max, problem.s);
  }

  void validate() const {
    problem.smoothness().validate();
    detail::require(problem.sigma >= 0.0, "config: sigma must be nonnegative");
    detail::require(problem.d == 0 || problem.d >= 2, "config: d must be >= 2");
    detail::require(trials_per_m >= 10, "config: trials_per_m must be >= 10");
    detail::require(m_grid.size() >= 2, "config: m_grid needs at least two sizes");
    for (std::size_t i = 1; i < m_grid.size(); ++i)
      detail::require(m_grid[i] > m_grid[i - 1], "config: m_grid must be strictly increasing");
    detail::require(m_grid.front() >= 1, "config: m_grid entries must be positive");
    const double decades = std::log10(static_cast<double>(m_grid.back()) / static_cast<double>(m_grid.front()));
    detail::require(decades >= 1.5 - 1e-12, "config: m_grid must span at least 1.5 decades");
    detail::require(tolerance > 0.0, "config: tolerance must be positive");
    const FilterFamily f = make_filter_family();
    const double aq = problem.a_link * problem.q;
    if (!f.infinite_qualification() && aq > f.qualification_p * (1.0 + 1e-12))
      throw domain_error("config: filter qualification does not cover a*q");
    const auto grid = linspace(0.0, 1.0, 1001);
    if (!check_covering(f.qualification_p, IndexFunction::power(problem.a_link), grid))
      throw domain_error("config: filter qualification does not cover the link function");
  }
};

/// Exponent of m in the error rate. Oversmoothing -ar/(b+1); regular
/// -r/(2(q-1)) when aq >= ar + (b+1)/2, otherwise -ar/(2ar+b+1-2a).
inline double theoretical_exponent(double a, double b, double r, double q, RateCase c) {
  detail::require(a > 0.0 && a <= 0.5, "theoretical_exponent: requires 0 < a <= 1/2");
  if (c == RateCase::Oversmoothing) {
    if (!(r <= 1.0)) throw domain_error("theoretical_exponent: oversmoothing requires r <= 1");
    if (q != 1.0) throw domain_error("theoretical_exponent: oversmoothing requires q = 1");
    const double n = std::floor(1.0 / a);
    if (!(a >= 1.0 / (n + 1.0))) throw domain_error("theoretical_exponent: oversmoothing requires a >= 1/(n+1)");
    return -a * r / (b + 1.0);
  }
  if (!(r >= 1.0)) throw domain_error("theoretical_exponent: regular case requires r >= 1");
  if (!(q > 1.0)) throw domain_error("theoretical_exponent: regular case requires q > 1");
  if (!(a * q >= a * r)) throw domain_error("theoretical_exponent: regular case requires a r <= a q");
  if (regular_first_regime(a, b, r, q)) return -r / (2.0 * (q - 1.0));
  return -a * r / (2.0 * a * r + b + 1.0 - 2.0 * a);
}

/// Minimax lower-bound exponent -ar/(2ar+b+1-2a).
inline double minimax_exponent(double a, double b, double r) { return -a * r / (2.0 * a * r + b + 1.0 - 2.0 * a); }

struct RateFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

/// OLS of log error on log m.
inline RateFit fit_rate(std::span<const std::pair<double, double>> points) {
  detail::require(points.size() >= 4, "fit_rate: need at least four points");
  std::vector<double> lx, ly;
  for (const auto& [m, e] : points) {
    if (!(e > 0.0) || !(m > 0.0)) throw domain_error("fit_rate: sizes and errors must be positive");
    lx.push_back(std::log(m));
    ly.push_back(std::log(e));
  }
  const LineFit lf = fit_line(lx, ly);
  return {lf.slope, lf.slope_stderr, lf.intercept};
}

struct RateCell {
  std::size_t m = 0;
  double lambda_used = 0.0;
  double mean_error = 0.0;
  double median_error = 0.0;
  double std_error = 0.0;
  bool lambda_flagged = false;
};

struct RateReport {
  std::vector<RateCell> per_m;
  double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
  double fit_stderr = std::numeric_limits<double>::quiet_NaN();
  double theoretical_exponent = std::numeric_limits<double>::quiet_NaN();
  double minimax_exponent = std::numeric_limits<double>::quiet_NaN();
  double tolerance = 0.08;
  bool degenerate = false;
  bool pass = false;
  int d = 0;
  std::size_t trend_inversions = 0;
  std::string config_hash;
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Fixed textual form of every field that influences results.
inline std::string canonical_string(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "s=" << c.problem.s << ";a=" << c.problem.a_link << ";r=" << c.problem.r << ";q=" << c.problem.q
     << ";R=" << c.problem.R_dagger << ";sigma=" << c.problem.sigma << ";d=" << c.resolved_d()
     << ";v=" << to_string(c.problem.v_pattern.kind) << ":" << c.problem.v_pattern.seed << ";filter=" << to_string(c.filter)
     << ";lw_p=" << c.landweber_p << ";nu_max=" << c.nu_max << ";rule=" << to_string(c.lambda_rule.kind)
     << ";c=" << c.lambda_rule.c << ";scale=" << c.lambda_rule.scale << ";m=";
  for (auto m : c.m_grid) os << m << ",";
  os << ";trials=" << c.trials_per_m << ";seed=" << c.seed << ";norm=" << to_string(c.error_norm)
     << ";zeta=" << c.zeta_exponent << ";case=" << to_string(c.rate_case) << ";design=" << to_string(c.design)
     << ";tol=" << c.tolerance;
  if (c.expected_exponent) os << ";expected=" << *c.expected_exponent;
  return os.str();
}

inline std::string config_hash(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canonical_string(c));
  return os.str();
}

inline SpectralProblem build_problem(const ExperimentConfig& c) {
  const auto& p = c.problem;
  return build_power_problem(p.s, p.a_link, p.r, p.q, p.R_dagger, c.resolved_d(), p.sigma, p.v_pattern);
}

/// lambda for sample size m under the configured rule.
inline LambdaChoice choose_lambda(const ExperimentConfig& c, const Vec& spectrum, std::size_t m) {
  const auto& p = c.problem;
  LambdaChoice out;
  switch (c.lambda_rule.kind) {
    case LambdaRuleKind::BalanceEffdim:
      out = lambda_balance_effdim(spectrum, m);
      break;
    case LambdaRuleKind::PhiInverse:
      out.lambda = lambda_phi_inverse(p.a_link, p.q, m);
      break;
    case LambdaRuleKind::BalanceGeneral:
      out = lambda_balance_general(spectrum, p.smoothness(), m);
      break;
    case LambdaRuleKind::PowerTable:
      out.lambda = lambda_power_table(p.a_link, p.smoothness().b(), p.r, p.q, m, c.rate_case, c.lambda_rule.c);
      break;
  }
  out.lambda = std::min(out.lambda * c.lambda_rule.scale, 1.0);
  return out;
}

inline double error_of(const SpectralProblem& p, const Estimate& e, ErrorNorm norm, double zeta_exponent) {
  switch (norm) {
    case ErrorNorm::H: return errors(p, e).h_norm;
    case ErrorNorm::Prediction: return errors(p, e).prediction_norm;
    case ErrorNorm::Zeta: return *errors(p, e, IndexFunction::power(zeta_exponent)).zeta_norm;
  }
  return 0.0;
}

/// Monte Carlo rate experiment. Cell (m, trial) uses the dataset seeded by
/// trial_seed(seed, m, trial); results are reduced in (m, trial) order.
inline RateReport run_rate_experiment(const ExperimentConfig& config) {
  config.validate();
  const SpectralProblem problem = build_problem(config);
  const FilterFamily filter = config.make_filter_family();
  const Vec t = problem.t();
  const std::size_t nm = config.m_grid.size();
  const std::size_t nt = config.trials_per_m;

  RateReport rep;
  rep.d = problem.d;
  rep.tolerance = config.tolerance;
  rep.config_hash = config_hash(config);
  rep.per_m.resize(nm);
  for (std::size_t i = 0; i < nm; ++i) {
    const LambdaChoice lc = choose_lambda(config, t, config.m_grid[i]);
    rep.per_m[i].m = config.m_grid[i];
    rep.per_m[i].lambda_used = lc.lambda;
    rep.per_m[i].lambda_flagged = lc.flagged;
  }

  std::vector<double> errs(nm * nt, 0.0);
  // Largest cells first so the tail of the schedule is short.
  parallel_for(nm * nt, config.threads, [&](std::size_t k) {
    const std::size_t i = nm - 1 - k / nt;
    const std::size_t trial = k % nt;
    const std::size_t m = config.m_grid[i];
    const Dataset ds = sample_dataset(problem, m, rng::trial_seed(config.seed, m, trial), config.design);
    const Estimate e = estimate(problem, ds, filter, rep.per_m[i].lambda_used);
    const double err = error_of(problem, e, config.error_norm, config.zeta_exponent);
    if (!std::isfinite(err)) {
      throw numerical_error("rate experiment: non-finite error at m=" + std::to_string(m) +
                            ", trial=" + std::to_string(trial));
    }
    errs[i * nt + trial] = err;
  });

  std::vector<double> weights(nm, 1.0);
  std::vector<double> lx(nm), ly(nm);
  double scale = std::max(1.0, problem.f_true.norm());
  rep.degenerate = false;
  for (std::size_t i = 0; i < nm; ++i) {
    std::vector<double> v(errs.begin() + static_cast<std::ptrdiff_t>(i * nt),
                          errs.begin() + static_cast<std::ptrdiff_t>((i + 1) * nt));
    auto& cell = rep.per_m[i];
    double sum = 0.0;
    for (double e : v) sum += e;
    cell.mean_error = sum / static_cast<double>(nt);
    double ss = 0.0;
    for (double e : v) ss += (e - cell.mean_error) * (e - cell.mean_error);
    cell.std_error = std::sqrt(ss / static_cast<double>(nt - 1));
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    cell.median_error = nt % 2 ? sorted[nt / 2] : 0.5 * (sorted[nt / 2 - 1] + sorted[nt / 2]);
    if (!(cell.median_error > 1e-12 * scale)) {
      rep.degenerate = true;
      continue;
    }
    // Weight by the inverse sampling variance of log(median), estimated
    // from the spread of the log errors.
    double lmean = 0.0;
    for (double e : v) lmean += std::log(std::max(e, 1e-300));
    lmean /= static_cast<double>(nt);
    double lvar = 0.0;
    for (double e : v) {
      const double dl = std::log(std::max(e, 1e-300)) - lmean;
      lvar += dl * dl;
    }
    lvar /= static_cast<double>(nt - 1);
    const double var_median = 0.5 * std::numbers::pi * lvar / static_cast<double>(nt);
    weights[i] = var_median > 0.0 ? 1.0 / var_median : 1.0;
    lx[i] = std::log(static_cast<double>(cell.m));
    ly[i] = std::log(cell.median_error);
  }
  for (std::size_t i = 1; i < nm; ++i)
    if (rep.per_m[i].median_error > rep.per_m[i - 1].median_error) ++rep.trend_inversions;

  const auto& p = config.problem;
  const double b = p.a_link / p.s;
  if (config.expected_exponent) {
    rep.theoretical_exponent = *config.expected_exponent;
  } else if (config.error_norm == ErrorNorm::H) {
    rep.theoretical_exponent = theoretical_exponent(p.a_link, b, p.r, p.q, config.rate_case);
  }
  if (config.rate_case == RateCase::Regular) rep.minimax_exponent = minimax_exponent(p.a_link, b, p.r);

  if (!rep.degenerate) {
    const LineFit lf = fit_line(lx, ly, weights);
    rep.fitted_exponent = lf.slope;
    rep.fit_stderr = lf.slope_stderr;
  }
  rep.pass = !rep.degenerate && std::isfinite(rep.theoretical_exponent) &&
             std::abs(rep.fitted_exponent - rep.theoretical_exponent) <= rep.tolerance;
  return rep;
}

}  // namespace hsreg
