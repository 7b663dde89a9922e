#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "hsreg/error.hpp"
#include "hsreg/index_function.hpp"
#include "hsreg/rng.hpp"

namespace hsreg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Basis { Cosine };

/// Gaussian noise N(0, sigma^2) with the Bernstein constants (M, Sigma)
/// reported to the concentration bounds. M = Sigma = sigma is the stored
/// sufficient choice for Gaussian noise.
struct NoiseModel {
  double sigma = 0.0;
  double M = 0.0;
  double Sigma = 0.0;

  static NoiseModel gaussian(double sigma) { return {sigma, sigma, sigma}; }

  void validate() const {
    detail::require(sigma >= 0.0 && std::isfinite(sigma), "noise: sigma must be finite and nonnegative");
    detail::require(M >= sigma, "noise: M must be >= sigma");
    detail::require(Sigma >= sigma, "noise: Sigma must be >= sigma");
  }
};

/// Source condition theta(t) = t^r, link rho(t) = t^a, benchmark power q,
/// source norm R_dagger, scale growth l_j = j^s.
struct SmoothnessSpec {
  double r = 1.0;
  double a_link = 0.5;
  double q = 1.0;
  double R_dagger = 1.0;
  double s = 1.0;

  /// Effective-dimension exponent of t_j = j^{-s/a}.
  double b() const { return a_link / s; }
  IndexFunction theta() const { return IndexFunction::power(r); }
  IndexFunction rho() const { return IndexFunction::power(a_link); }
  /// phi = rho^{q-1}
  IndexFunction phi() const { return IndexFunction::power(a_link * (q - 1.0)); }

  void validate() const {
    detail::require(r > 0.0, "smoothness: r must be positive");
    detail::require(a_link > 0.0 && a_link <= 0.5, "smoothness: a_link must lie in (0, 1/2]");
    detail::require(q >= 1.0, "smoothness: q must be >= 1");
    detail::require(R_dagger > 0.0, "smoothness: R_dagger must be positive");
    detail::require(s > 0.0, "smoothness: s must be positive");
  }
};

/// Truncated diagonal model: A e_j = a_j e_j, L e_j = l_j e_j in the cosine
/// basis of L^2([0,1]). Immutable after construction.
struct SpectralProblem {
  int d = 0;
  Basis basis = Basis::Cosine;
  Vec a;
  Vec l;
  Vec f_true;
  NoiseModel noise;
  std::optional<SmoothnessSpec> smoothness;

  /// Eigenvalues of T_nu: (a_j / l_j)^2.
  Vec t() const { return (a.array() / l.array()).square().matrix(); }
  /// Eigenvalues of L_nu: a_j^2.
  Vec l_nu() const { return a.array().square().matrix(); }
  /// Square roots of t_j, the column weights of the sampling design.
  Vec sqrt_t() const { return (a.array() / l.array()).matrix(); }
  /// Coefficients u = L f_true.
  Vec u_true() const { return (l.array() * f_true.array()).matrix(); }

  void validate() const {
    detail::require(d >= 1, "problem: d must be positive");
    detail::require_dim(static_cast<std::size_t>(a.size()), static_cast<std::size_t>(d), "problem.a");
    detail::require_dim(static_cast<std::size_t>(l.size()), static_cast<std::size_t>(d), "problem.l");
    detail::require_dim(static_cast<std::size_t>(f_true.size()), static_cast<std::size_t>(d), "problem.f_true");
    for (int j = 0; j < d; ++j) {
      detail::require(a[j] > 0.0 && std::isfinite(a[j]), "problem: a_j must be positive and finite");
      detail::require(l[j] > 0.0 && std::isfinite(l[j]), "problem: l_j must be positive and finite");
      detail::require(std::isfinite(f_true[j]), "problem: f_true must be finite");
      if (j > 0) detail::require(l[j] >= l[j - 1], "problem: l must be nondecreasing");
    }
    noise.validate();
    if (smoothness) smoothness->validate();
  }
};

/// Pattern of the source element v in f_true = L^{-r} v, ||v|| = R_dagger.
enum class VPattern {
  Constant,     ///< v_j = R / sqrt(d)
  Alternating,  ///< v_j = (-1)^{j+1} R / sqrt(d)
  Seeded,       ///< Gaussian draw rescaled to norm R
  Decaying      ///< v_j proportional to j^{-1/2}
};

struct VPatternSpec {
  VPattern kind = VPattern::Constant;
  std::uint64_t seed = 0;
};

inline Vec make_source_element(VPatternSpec pattern, int d, double R) {
  Vec v(d);
  switch (pattern.kind) {
    case VPattern::Constant:
      v.setConstant(1.0);
      break;
    case VPattern::Alternating:
      for (int j = 0; j < d; ++j) v[j] = (j % 2 == 0) ? 1.0 : -1.0;
      break;
    case VPattern::Seeded: {
      rng::CounterRng gen(pattern.seed, rng::kStreamSource);
      for (int j = 0; j < d; ++j) v[j] = gen.normal(static_cast<std::uint64_t>(j));
      break;
    }
    case VPattern::Decaying:
      for (int j = 0; j < d; ++j) v[j] = 1.0 / std::sqrt(static_cast<double>(j + 1));
      break;
  }
  const double n = v.norm();
  if (!(n > 0.0)) throw numerical_error("source element has zero norm");
  return v * (R / n);
}

/// Power problem with exact link: l_j = j^s, a_j = j^{s(1 - 1/(2a))},
/// hence t_j = j^{-s/a} and l_j^{-1} = t_j^a. f_true = L^{-r} v.
inline SpectralProblem build_power_problem(double s, double a_link, double r, double q, double R_dagger,
                                           int d, double sigma, VPatternSpec pattern = {}) {
  detail::require(s > 0.0, "build_power_problem: s must be positive");
  detail::require(a_link > 0.0 && a_link <= 0.5, "build_power_problem: a_link must lie in (0, 1/2]");
  detail::require(d >= 2, "build_power_problem: d must be >= 2");
  detail::require(r > 0.0, "build_power_problem: r must be positive");
  detail::require(q >= 1.0, "build_power_problem: q must be >= 1");
  detail::require(R_dagger > 0.0, "build_power_problem: R_dagger must be positive");
  detail::require(sigma >= 0.0, "build_power_problem: sigma must be nonnegative");

  SpectralProblem p;
  p.d = d;
  p.basis = Basis::Cosine;
  p.a.resize(d);
  p.l.resize(d);
  const double a_exp = s * (1.0 - 1.0 / (2.0 * a_link));
  for (int j = 0; j < d; ++j) {
    const double jj = static_cast<double>(j + 1);
    p.l[j] = std::pow(jj, s);
    p.a[j] = std::pow(jj, a_exp);
  }
  const Vec v = make_source_element(pattern, d, R_dagger);
  p.f_true = (p.l.array().pow(-r) * v.array()).matrix();
  p.noise = NoiseModel::gaussian(sigma);
  p.smoothness = SmoothnessSpec{r, a_link, q, R_dagger, s};
  return p;
}

/// e_1 = 1, e_j(x) = sqrt(2) cos((j-1) pi x). j is 1-based.
inline double eval_basis(Basis basis, int j, double x) {
  (void)basis;
  if (j < 1) throw domain_error("eval_basis: index must be >= 1");
  detail::require(x >= 0.0 && x <= 1.0, "eval_basis: x must lie in [0, 1]");
  if (j == 1) return 1.0;
  return std::numbers::sqrt2 * std::cos(static_cast<double>(j - 1) * std::numbers::pi * x);
}

inline double eval_basis(const SpectralProblem& p, int j, double x) {
  if (j > p.d) throw domain_error("eval_basis: index exceeds problem dimension");
  return eval_basis(p.basis, j, x);
}

/// out(i, j) = e_{j+1}(x_i) for j < d. Columns follow the angle-addition
/// recurrence across all points at once, reseeded every 64 modes to bound
/// drift.
inline Mat basis_matrix(std::span<const double> x, int d) {
  detail::require(d >= 1, "basis_matrix: d must be positive");
  const auto m = static_cast<Eigen::Index>(x.size());
  const Eigen::Map<const Eigen::ArrayXd> xs(x.data(), m);
  detail::require(m == 0 || (xs.minCoeff() >= 0.0 && xs.maxCoeff() <= 1.0), "basis_matrix: x must lie in [0, 1]");
  constexpr int kReseed = 64;
  const Eigen::ArrayXd th = std::numbers::pi * xs;
  const Eigen::ArrayXd c1 = th.cos();
  const Eigen::ArrayXd s1 = th.sin();
  Eigen::ArrayXd c = Eigen::ArrayXd::Ones(m);
  Eigen::ArrayXd s = Eigen::ArrayXd::Zero(m);
  Eigen::ArrayXd cn(m);
  Mat out(m, d);
  out.col(0).setOnes();
  for (int k = 1; k < d; ++k) {
    if (k % kReseed == 0) {
      c = (static_cast<double>(k) * th).cos();
      s = (static_cast<double>(k) * th).sin();
    } else {
      cn = c * c1 - s * s1;
      s = s * c1 + c * s1;
      c.swap(cn);
    }
    out.col(k) = std::numbers::sqrt2 * c.matrix();
  }
  return out;
}

/// g(x) = sum_j a_j f_j e_j(x).
inline double forward_eval(const SpectralProblem& p, const Vec& f, double x) {
  detail::require_dim(static_cast<std::size_t>(f.size()), static_cast<std::size_t>(p.d), "forward_eval");
  const double xs[1] = {x};
  const Mat e = basis_matrix(xs, p.d);
  return (e.row(0).transpose().array() * p.a.array() * f.array()).sum();
}

/// ||L^s f|| = sqrt(sum l_j^{2s} f_j^2).
inline double hilbert_scale_norm(const SpectralProblem& p, const Vec& f, double s_exp) {
  detail::require_dim(static_cast<std::size_t>(f.size()), static_cast<std::size_t>(p.d), "hilbert_scale_norm");
  if (s_exp == 0.0) return f.norm();
  return (p.l.array().pow(s_exp) * f.array()).matrix().norm();
}

/// sup_x sum_j w_j e_j(x)^2, attained at x = 0.
inline double cosine_diag_sup(const Vec& w) {
  if (w.size() == 0) return 0.0;
  return w[0] + 2.0 * w.tail(w.size() - 1).sum();
}

/// kappa^2 bounds the rank-one summands of T_x.
inline double kappa_sq(const SpectralProblem& p) { return cosine_diag_sup(p.t()); }
/// kappa_tilde^2 = sup_x K(x, x) for K(x, x') = sum_j a_j^2 e_j(x) e_j(x').
inline double kappa_tilde_sq(const SpectralProblem& p) { return cosine_diag_sup(p.l_nu()); }

inline const char* to_string(VPattern v) {
  switch (v) {
    case VPattern::Constant: return "constant";
    case VPattern::Alternating: return "alternating";
    case VPattern::Seeded: return "seeded";
    case VPattern::Decaying: return "decaying";
  }
  return "?";
}

inline std::optional<VPattern> parse_v_pattern(const std::string& s) {
  if (s == "constant") return VPattern::Constant;
  if (s == "alternating") return VPattern::Alternating;
  if (s == "seeded") return VPattern::Seeded;
  if (s == "decaying") return VPattern::Decaying;
  return std::nullopt;
}

}  // namespace hsreg
