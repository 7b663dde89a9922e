#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsreg/effective_dimension.hpp"
#include "hsreg/error.hpp"
#include "hsreg/filters.hpp"
#include "hsreg/grid.hpp"
#include "hsreg/index_function.hpp"
#include "hsreg/parallel.hpp"
#include "hsreg/rng.hpp"
#include "hsreg/sampling_estimator.hpp"
#include "hsreg/spectral_model.hpp"

namespace hsreg {

enum class Quantity { Psi, Upsilon, LambdaQ, XiS, XiZeta, TxDev };

inline const char* to_string(Quantity q) {
  switch (q) {
    case Quantity::Psi: return "PSI";
    case Quantity::Upsilon: return "UPSILON";
    case Quantity::LambdaQ: return "LAMBDA_Q";
    case Quantity::XiS: return "XI_S";
    case Quantity::XiZeta: return "XI_ZETA";
    case Quantity::TxDev: return "TX_DEV";
  }
  return "?";
}

inline std::optional<Quantity> parse_quantity(const std::string& s) {
  if (s == "PSI") return Quantity::Psi;
  if (s == "UPSILON") return Quantity::Upsilon;
  if (s == "LAMBDA_Q") return Quantity::LambdaQ;
  if (s == "XI_S") return Quantity::XiS;
  if (s == "XI_ZETA") return Quantity::XiZeta;
  if (s == "TX_DEV") return Quantity::TxDev;
  return std::nullopt;
}

/// Largest singular value.
inline double op_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

/// Psi = ||(T_nu + lambda)^{-1/2} B_x^* (S_x A f - y)||.
inline double compute_psi(const SpectralProblem& p, const Dataset& ds, double lambda) {
  detail::require(lambda > 0.0, "compute_psi: lambda must be positive");
  const Mat phi = design_matrix(p, ds.x);
  const Vec resid = regression_values(p, ds.x) - to_vec(ds.y);
  const Vec w = phi.transpose() * resid / static_cast<double>(ds.m());
  const Vec t = p.t();
  return std::sqrt((w.array().square() / (t.array() + lambda)).sum());
}

/// ||diag(s + lambda)^{-1/2} (diag(s) - E)||_HS for a diagonal population operator.
inline double weighted_hs_deviation(const Vec& s, const Mat& emp, double lambda) {
  Mat dev = -emp;
  dev.diagonal() += s;
  const Vec w = (s.array() + lambda).rsqrt().matrix();
  return (w.asDiagonal() * dev).norm();
}

inline double compute_upsilon_from(const Vec& t, const Mat& tx, double lambda) {
  detail::require(lambda > 0.0, "compute_upsilon: lambda must be positive");
  return weighted_hs_deviation(t, tx, lambda);
}

/// Upsilon = ||(T_nu + lambda)^{-1/2} (T_nu - T_x)||_HS.
inline double compute_upsilon(const SpectralProblem& p, std::span<const double> x, double lambda) {
  return compute_upsilon_from(p.t(), empirical_cov(p, x), lambda);
}

/// L_x = diag(l) T_x diag(l), the empirical operator of A.
inline Mat empirical_lx_from(const SpectralProblem& p, const Mat& tx) {
  return p.l.asDiagonal() * tx * p.l.asDiagonal();
}

inline double compute_lambda_q_from(const SpectralProblem& p, const Mat& tx, double lambda) {
  detail::require(lambda > 0.0, "compute_lambda_q: lambda must be positive");
  return weighted_hs_deviation(p.l_nu(), empirical_lx_from(p, tx), lambda);
}

/// Lambda = ||(L_nu + lambda)^{-1/2} (L_nu - L_x)||_HS.
inline double compute_lambda_q(const SpectralProblem& p, std::span<const double> x, double lambda) {
  return compute_lambda_q_from(p, empirical_cov(p, x), lambda);
}

inline double compute_tx_dev_from(const Vec& t, const Mat& tx) {
  Mat dev = -tx;
  dev.diagonal() += t;
  return dev.norm();
}

/// ||T_nu - T_x||_HS.
inline double compute_tx_dev(const SpectralProblem& p, std::span<const double> x) {
  return compute_tx_dev_from(p.t(), empirical_cov(p, x));
}

/// Symmetric eigendecomposition with small negative eigenvalues set to 0.
struct SymEig {
  Vec values;
  Mat vectors;
};

inline SymEig sym_eig(const Mat& a) {
  const Mat s = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  if (es.info() != Eigen::Success) throw numerical_error("eigensolver failed");
  SymEig out{es.eigenvalues(), es.eigenvectors()};
  for (Eigen::Index k = 0; k < out.values.size(); ++k) out.values[k] = std::max(out.values[k], 0.0);
  return out;
}

/// Nondecreasing and sub-linear on a grid covering [lo, hi].
inline bool is_nondecreasing_sublinear(const IndexFunction& z, double lo, double hi) {
  const auto grid = lo > 0.0 ? logspace(lo, hi, 200) : linspace(lo, hi, 200);
  return z.is_nondecreasing_on(grid) && z.is_sublinear_on(grid);
}

/// Xi^zeta = || (1/zeta)(T_x + lambda) zeta(T_nu + lambda) ||, left factor
/// through the eigendecomposition of T_x, right factor diagonal.
inline double compute_xi_from(const SymEig& tx, const Vec& t, double lambda, const IndexFunction& zeta,
                              bool check = true) {
  detail::require(lambda > 0.0, "compute_xi: lambda must be positive");
  if (check) {
    const double hi = std::max(t.maxCoeff(), tx.values.size() ? tx.values.maxCoeff() : 0.0) + lambda;
    if (!is_nondecreasing_sublinear(zeta, lambda, hi))
      throw domain_error("compute_xi: zeta must be nondecreasing and sub-linear");
  }
  Vec left(tx.values.size());
  for (Eigen::Index k = 0; k < left.size(); ++k) left[k] = 1.0 / zeta(tx.values[k] + lambda);
  Vec right(t.size());
  for (Eigen::Index j = 0; j < right.size(); ++j) right[j] = zeta(t[j] + lambda);
  const Mat prod = tx.vectors * left.asDiagonal() * tx.vectors.transpose() * right.asDiagonal();
  return op_norm(prod);
}

inline double compute_xi(const SpectralProblem& p, std::span<const double> x, double lambda, const IndexFunction& zeta) {
  return compute_xi_from(sym_eig(empirical_cov(p, x)), p.t(), lambda, zeta);
}

/// Constants entering the concentration bounds.
struct BoundConstants {
  double kappa = 1.0;
  double kappa_tilde = 1.0;
  double M = 0.0;
  double Sigma = 0.0;
  double effdim_T = 0.0;
  double effdim_L = 0.0;
  double s = 0.5;  ///< exponent for XI_S
};

inline BoundConstants bound_constants(const SpectralProblem& p, double lambda, double s = 0.5) {
  BoundConstants c;
  c.kappa = std::sqrt(kappa_sq(p));
  c.kappa_tilde = std::sqrt(kappa_tilde_sq(p));
  c.M = p.noise.M;
  c.Sigma = p.noise.Sigma;
  c.effdim_T = effdim(p.t(), lambda);
  c.effdim_L = effdim(p.l_nu(), lambda);
  c.s = s;
  return c;
}

/// High-probability upper bounds, each holding with confidence 1 - eta.
inline double bound_appendix(Quantity q, double lambda, double m, double eta, const BoundConstants& c) {
  detail::require(lambda > 0.0, "bound_appendix: lambda must be positive");
  detail::require(m >= 1.0, "bound_appendix: m must be positive");
  detail::require(eta > 0.0 && eta < 1.0, "bound_appendix: eta must lie in (0, 1)");
  const double lg = std::log(2.0 / eta);
  const double k2 = c.kappa * c.kappa;
  const double kt2 = c.kappa_tilde * c.kappa_tilde;
  const double sl = std::sqrt(lambda);
  switch (q) {
    case Quantity::Psi:
      return 2.0 * (c.kappa * c.M / (m * sl) + std::sqrt(c.Sigma * c.Sigma * c.effdim_T / m)) * lg;
    case Quantity::Upsilon:
      return 2.0 * (k2 / (m * sl) + std::sqrt(k2 * c.effdim_T / m)) * lg;
    case Quantity::TxDev:
      return 2.0 * (k2 / m + k2 / std::sqrt(m)) * lg;
    case Quantity::LambdaQ:
      return 2.0 * (kt2 / (m * sl) + std::sqrt(kt2 * c.effdim_L / m)) * lg;
    case Quantity::XiS: {
      const double base = (2.0 * c.kappa + 1.0) * (2.0 * c.kappa + 1.0) * lg;
      return std::pow(base, 2.0 * c.s);
    }
    case Quantity::XiZeta: {
      const double base = (2.0 * c.kappa + 1.0) * (2.0 * c.kappa + 1.0) * lg;
      return base * base;
    }
  }
  throw domain_error("bound_appendix: unknown quantity");
}

struct BoundCheckReport {
  Quantity quantity = Quantity::Psi;
  double lambda = 0.0;
  std::size_t m = 0;
  double eta = 0.1;
  std::size_t trials = 0;
  double empirical_quantile = 0.0;  ///< (1 - eta)-quantile of the observed values
  double bound_value = 0.0;
  double coverage = 0.0;
  bool pass = false;
  bool in_hypothesis = true;  ///< N(lambda) <= m lambda and lambda <= 1
};

/// Type-7 sample quantile.
inline double sample_quantile(std::vector<double> v, double p) {
  detail::require(!v.empty(), "sample_quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct CoverageOptions {
  std::uint64_t seed = 0;
  std::size_t trials = 500;
  unsigned threads = 0;
  double s = 0.5;                 ///< XI_S exponent
  IndexFunction zeta = IndexFunction::power(0.5);  ///< XI_ZETA function
};

/// Per-trial values of several quantities at one (lambda, m). Trial k uses
/// the dataset seeded by trial_seed(seed, m, k).
inline std::vector<std::vector<double>> sample_quantities(const SpectralProblem& p, std::span<const Quantity> qs,
                                                          double lambda, std::size_t m, const CoverageOptions& opt) {
  std::vector<std::vector<double>> values(qs.size(), std::vector<double>(opt.trials, 0.0));
  const Vec t = p.t();
  const Vec sqrt_t = p.sqrt_t();
  const Vec coef = (p.a.array() * p.f_true.array()).matrix();
  bool need_eig = false;
  for (auto q : qs) need_eig = need_eig || q == Quantity::XiS || q == Quantity::XiZeta;
  const IndexFunction xi_s = IndexFunction::power(opt.s);
  parallel_for(opt.trials, opt.threads, [&](std::size_t k) {
    const Dataset ds = sample_dataset(p, m, rng::trial_seed(opt.seed, m, k), Design::RandomUniform);
    // g is formed exactly as in sample_dataset so that sigma = 0 gives Psi = 0.
    const Mat e = basis_matrix(ds.x, p.d);
    const Vec g = e * coef;
    const Mat phi = e * sqrt_t.asDiagonal();
    const Mat tx = gram(phi);
    std::optional<SymEig> eig;
    if (need_eig) eig = sym_eig(tx);
    for (std::size_t qi = 0; qi < qs.size(); ++qi) {
      double v = 0.0;
      switch (qs[qi]) {
        case Quantity::Psi: {
          const Vec resid = g - to_vec(ds.y);
          const Vec w = phi.transpose() * resid / static_cast<double>(m);
          v = std::sqrt((w.array().square() / (t.array() + lambda)).sum());
          break;
        }
        case Quantity::Upsilon: v = compute_upsilon_from(t, tx, lambda); break;
        case Quantity::LambdaQ: v = compute_lambda_q_from(p, tx, lambda); break;
        case Quantity::TxDev: v = compute_tx_dev_from(t, tx); break;
        case Quantity::XiS: v = compute_xi_from(*eig, t, lambda, xi_s, false); break;
        case Quantity::XiZeta: v = compute_xi_from(*eig, t, lambda, opt.zeta, false); break;
      }
      values[qi][k] = v;
    }
  });
  return values;
}

inline BoundCheckReport make_report(Quantity q, const std::vector<double>& vals, double lambda, std::size_t m,
                                    double eta, const BoundConstants& c) {
  BoundCheckReport r;
  r.quantity = q;
  r.lambda = lambda;
  r.m = m;
  r.eta = eta;
  r.trials = vals.size();
  r.bound_value = bound_appendix(q, lambda, static_cast<double>(m), eta, c);
  r.empirical_quantile = sample_quantile(vals, 1.0 - eta);
  std::size_t ok = 0;
  for (double v : vals) ok += v <= r.bound_value ? 1 : 0;
  r.coverage = static_cast<double>(ok) / static_cast<double>(vals.size());
  r.pass = r.coverage >= 1.0 - eta;
  r.in_hypothesis = c.effdim_T <= static_cast<double>(m) * lambda * (1.0 + 1e-9) && lambda <= 1.0;
  return r;
}

/// Coverage reports for every (quantity, eta) pair from one set of trials.
inline std::vector<BoundCheckReport> montecarlo_coverage_batch(const SpectralProblem& p, std::span<const Quantity> qs,
                                                               double lambda, std::size_t m,
                                                               std::span<const double> etas,
                                                               const CoverageOptions& opt) {
  detail::require(opt.trials >= 100, "montecarlo_coverage: trials must be >= 100");
  const auto vals = sample_quantities(p, qs, lambda, m, opt);
  const BoundConstants c = bound_constants(p, lambda, opt.s);
  std::vector<BoundCheckReport> out;
  for (std::size_t qi = 0; qi < qs.size(); ++qi)
    for (double eta : etas) out.push_back(make_report(qs[qi], vals[qi], lambda, m, eta, c));
  return out;
}

inline BoundCheckReport montecarlo_coverage(const SpectralProblem& p, Quantity q, double lambda, std::size_t m,
                                            double eta, const CoverageOptions& opt) {
  const Quantity qs[1] = {q};
  const double etas[1] = {eta};
  return montecarlo_coverage_batch(p, qs, lambda, m, etas, opt).front();
}

struct InterpolationCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// ||f||_r <= ||f||_t^{(s-r)/(s-t)} ||f||_s^{(r-t)/(s-t)} for t < r < s.
inline InterpolationCheck check_interpolation(const SpectralProblem& p, const Vec& f, double t_exp, double r_exp,
                                              double s_exp) {
  if (!(t_exp < r_exp && r_exp < s_exp)) throw domain_error("check_interpolation: requires t < r < s");
  InterpolationCheck out;
  out.lhs = hilbert_scale_norm(p, f, r_exp);
  const double nt = hilbert_scale_norm(p, f, t_exp);
  const double ns = hilbert_scale_norm(p, f, s_exp);
  const double w = s_exp - t_exp;
  out.rhs = std::pow(nt, (s_exp - r_exp) / w) * std::pow(ns, (r_exp - t_exp) / w);
  out.pass = out.lhs <= out.rhs * (1.0 + 1e-12);
  return out;
}

/// max over lambda of sup_j t_j^a / sqrt(t_j + lambda) * sqrt(lambda) / lambda^a.
inline double check_heinz_bound(const Vec& spectrum, double a_link, std::span<const double> lambda_grid) {
  detail::require(a_link > 0.0 && a_link <= 0.5, "check_heinz_bound: a must lie in (0, 1/2]");
  double best = 0.0;
  for (double lam : lambda_grid) {
    double sup = 0.0;
    for (Eigen::Index j = 0; j < spectrum.size(); ++j) {
      const double tj = spectrum[j];
      // (t/lambda)^a (lambda/(t + lambda))^{1/2}, evaluated in ratio form.
      const double v = std::pow(tj / lam, a_link) * std::sqrt(lam / (tj + lam));
      sup = std::max(sup, v);
    }
    best = std::max(best, sup);
  }
  return best;
}

struct XiEnvelopeCheck {
  double xi = 0.0;
  double envelope = 0.0;  ///< (Upsilon / sqrt(lambda) + 1)^2
  bool in_hypothesis = true;
  bool pass = false;
};

inline XiEnvelopeCheck check_xi_envelope(const SpectralProblem& p, std::span<const double> x, double lambda,
                                         const IndexFunction& zeta) {
  const Mat tx = empirical_cov(p, x);
  const Vec t = p.t();
  XiEnvelopeCheck out;
  out.xi = compute_xi_from(sym_eig(tx), t, lambda, zeta);
  const double u = compute_upsilon_from(t, tx, lambda);
  out.envelope = std::pow(u / std::sqrt(lambda) + 1.0, 2.0);
  out.in_hypothesis = effdim(t, lambda) <= static_cast<double>(x.size()) * lambda * (1.0 + 1e-9) && lambda <= 1.0;
  out.pass = out.xi <= out.envelope * (1.0 + 1e-9);
  return out;
}

struct LemmaEnvelopeCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double xi_rho = 0.0;
  double xi_upsilon = 0.0;
  double xi = 0.0;
  double lambda_q = 0.0;
  bool pass = false;
};

/// ||L^{-1} r_lambda(T_x) L|| against
/// 1 + (B + D)(Xi^rho Xi^upsilon + Xi rho(lambda)(rho(lambda) + 1) Lambda / sqrt(lambda)).
inline LemmaEnvelopeCheck check_lemma_envelope(const SpectralProblem& p, const Dataset& ds, const FilterFamily& f,
                                               double lambda) {
  if (!p.smoothness) throw domain_error("check_lemma_envelope: problem has no link specification");
  detail::require(lambda > 0.0, "check_lemma_envelope: lambda must be positive");
  const double a = p.smoothness->a_link;
  const IndexFunction rho = IndexFunction::power(a);
  const IndexFunction ups = IndexFunction::power(1.0 - a);
  const IndexFunction id = IndexFunction::power(1.0);
  const FilterFamily ff = f.id == FilterId::Landweber ? f.with_t_max(kappa_sq(p)) : f;

  const Mat tx = empirical_cov(p, ds.x);
  const SymEig eig = sym_eig(tx);
  const Vec t = p.t();

  Vec rv(eig.values.size());
  const bool clamp = ff.id == FilterId::Landweber;
  for (Eigen::Index k = 0; k < rv.size(); ++k)
    rv[k] = ff.r(lambda, clamp ? std::min(eig.values[k], ff.t_max) : eig.values[k]);
  const Mat r_tx = eig.vectors * rv.asDiagonal() * eig.vectors.transpose();
  const Vec inv_l = p.l.cwiseInverse();
  const Mat sandwich = inv_l.asDiagonal() * r_tx * p.l.asDiagonal();

  LemmaEnvelopeCheck out;
  out.lhs = op_norm(sandwich);
  out.xi_rho = compute_xi_from(eig, t, lambda, rho);
  out.xi_upsilon = compute_xi_from(eig, t, lambda, ups);
  out.xi = compute_xi_from(eig, t, lambda, id);
  out.lambda_q = compute_lambda_q_from(p, tx, lambda);
  const double rl = rho(lambda);
  out.rhs = 1.0 + (ff.B + ff.D) * (out.xi_rho * out.xi_upsilon + out.xi * rl * (rl + 1.0) * out.lambda_q / std::sqrt(lambda));
  out.pass = out.lhs <= out.rhs * (1.0 + 1e-9);
  return out;
}

}  // namespace hsreg
