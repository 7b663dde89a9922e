#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsreg/error.hpp"
#include "hsreg/filters.hpp"
#include "hsreg/index_function.hpp"
#include "hsreg/rng.hpp"
#include "hsreg/spectral_model.hpp"

namespace hsreg {

enum class Design { RandomUniform, MidpointGrid };

struct Dataset {
  std::vector<double> x;
  std::vector<double> y;
  std::uint64_t seed = 0;
  Design design = Design::RandomUniform;

  std::size_t m() const { return x.size(); }
};

inline const char* to_string(Design d) { return d == Design::MidpointGrid ? "midpoint" : "uniform"; }

inline std::optional<Design> parse_design(const std::string& s) {
  if (s == "uniform" || s == "random_uniform") return Design::RandomUniform;
  if (s == "midpoint" || s == "midpoint_grid") return Design::MidpointGrid;
  return std::nullopt;
}

/// Design points only; x_i = uniform(i) of the design stream, or (i - 1/2)/m.
inline std::vector<double> sample_design(std::size_t m, std::uint64_t seed, Design design) {
  std::vector<double> x(m);
  if (design == Design::MidpointGrid) {
    for (std::size_t i = 0; i < m; ++i) x[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
  } else {
    const rng::CounterRng gen(seed, rng::kStreamDesign);
    for (std::size_t i = 0; i < m; ++i) x[i] = gen.uniform(i);
  }
  return x;
}

/// Column j of the result holds e_j(x) weighted by a_j / l_j (the matrix of B_x).
inline Mat design_matrix(const SpectralProblem& p, std::span<const double> x) {
  Mat e = basis_matrix(x, p.d);
  e *= p.sqrt_t().asDiagonal();
  return e;
}

/// y_i = g(x_i) + sigma z_i with z_i the i-th normal draw of the noise stream.
inline Dataset sample_dataset(const SpectralProblem& p, std::size_t m, std::uint64_t seed, Design design) {
  detail::require(m >= 1, "sample_dataset: m must be positive");
  Dataset ds;
  ds.seed = seed;
  ds.design = design;
  ds.x = sample_design(m, seed, design);
  const Mat e = basis_matrix(ds.x, p.d);
  const Vec coef = (p.a.array() * p.f_true.array()).matrix();
  const Vec g = e * coef;
  ds.y.resize(m);
  const rng::CounterRng gen(seed, rng::kStreamNoise);
  const double sigma = p.noise.sigma;
  for (std::size_t i = 0; i < m; ++i) {
    ds.y[i] = g[static_cast<Eigen::Index>(i)] + (sigma > 0.0 ? sigma * gen.normal(i) : 0.0);
  }
  return ds;
}

/// Regression function values g(x_i) for the true solution.
inline Vec regression_values(const SpectralProblem& p, std::span<const double> x) {
  const Mat e = basis_matrix(x, p.d);
  return e * (p.a.array() * p.f_true.array()).matrix();
}

/// (1/m) M^T M for a design-type matrix, formed as a symmetric rank update.
inline Mat gram(const Mat& phi) {
  const auto d = phi.cols();
  Mat t = Mat::Zero(d, d);
  t.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose(), 1.0 / static_cast<double>(phi.rows()));
  return t.selfadjointView<Eigen::Lower>();
}

/// T_x = (1/m) Phi^T Phi.
inline Mat empirical_cov(const SpectralProblem& p, std::span<const double> x) {
  return gram(design_matrix(p, x));
}

inline Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Spectral decomposition of the empirical problem, reusable across
/// filters and lambdas. Uses the eigendecomposition of T_x when d <= m and
/// the thin SVD of Phi / sqrt(m) otherwise.
class EmpiricalOperators {
 public:
  EmpiricalOperators(const SpectralProblem& p, const Dataset& ds) : kappa_sq_(kappa_sq(p)) {
    detail::require(ds.x.size() == ds.y.size() && !ds.x.empty(), "dataset: x and y must be nonempty and equal length");
    const Mat phi = design_matrix(p, ds.x);
    const auto m = static_cast<double>(ds.m());
    const Vec y = to_vec(ds.y);
    m_ = ds.m();
    if (p.d <= static_cast<int>(ds.m())) {
      svd_route_ = false;
      Mat tx = gram(phi);
      tx = 0.5 * (tx + tx.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Mat> es(tx);
      if (es.info() != Eigen::Success) throw numerical_error("estimate: eigensolver failed");
      evals_ = es.eigenvalues();
      evecs_ = es.eigenvectors();
      clamp_eigenvalues();
      proj_ = evecs_.transpose() * (phi.transpose() * y / m);
    } else {
      svd_route_ = true;
      Eigen::BDCSVD<Mat> svd(phi / std::sqrt(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
      if (svd.info() != Eigen::Success) throw numerical_error("estimate: SVD failed");
      const Vec s = svd.singularValues();
      evals_ = s.array().square().matrix();
      evecs_ = svd.matrixV();
      // V^T b = S U^T y / sqrt(m)
      proj_ = (s.array() * (svd.matrixU().transpose() * y / std::sqrt(m)).array()).matrix();
    }
  }

  /// u = g_lambda(T_x) B_x^* y.
  Vec solve_u(const FilterFamily& f, double lambda) const {
    const FilterFamily ff = f.id == FilterId::Landweber ? f.with_t_max(kappa_sq_) : f;
    Vec gv(evals_.size());
    const bool clamp = ff.id == FilterId::Landweber;
    for (Eigen::Index k = 0; k < evals_.size(); ++k)
      gv[k] = ff.g(lambda, clamp ? std::min(evals_[k], ff.t_max) : evals_[k]);
    return evecs_ * (gv.array() * proj_.array()).matrix();
  }

  const Vec& eigenvalues() const { return evals_; }
  const Mat& eigenvectors() const { return evecs_; }
  bool svd_route() const { return svd_route_; }
  std::size_t m() const { return m_; }

 private:
  void clamp_eigenvalues() {
    const double floor = -1e-12 * kappa_sq_;
    for (Eigen::Index k = 0; k < evals_.size(); ++k) {
      if (evals_[k] < floor) throw numerical_error("estimate: T_x has a negative eigenvalue below tolerance");
      if (evals_[k] < 0.0) evals_[k] = 0.0;
    }
  }

  double kappa_sq_;
  std::size_t m_ = 0;
  bool svd_route_ = false;
  Vec evals_;
  Mat evecs_;
  Vec proj_;
};

struct Estimate {
  Vec f_hat;
  Vec u_hat;
  double lambda = 0.0;
  FilterId filter = FilterId::Tikhonov;
  std::size_t m = 0;
};

inline Estimate estimate(const SpectralProblem& p, const EmpiricalOperators& ops, const FilterFamily& f,
                         double lambda) {
  if (!(lambda > 0.0)) throw domain_error("estimate: lambda must be positive");
  Estimate e;
  e.u_hat = ops.solve_u(f, lambda);
  e.f_hat = (e.u_hat.array() / p.l.array()).matrix();
  e.lambda = lambda;
  e.filter = f.id;
  e.m = ops.m();
  if (!e.u_hat.allFinite()) throw numerical_error("estimate: non-finite coefficients");
  return e;
}

/// f_{z,lambda} = L^{-1} g_lambda(T_x) B_x^* y.
inline Estimate estimate(const SpectralProblem& p, const Dataset& ds, const FilterFamily& f, double lambda) {
  if (!(lambda > 0.0)) throw domain_error("estimate: lambda must be positive");
  const EmpiricalOperators ops(p, ds);
  return estimate(p, ops, f, lambda);
}

struct ErrorNorms {
  double h_norm = 0.0;
  double prediction_norm = 0.0;
  std::optional<double> zeta_norm;
};

/// ||f_hat - f||, ||A(f_hat - f)|| and ||zeta(T_nu) L (f_hat - f)||.
inline ErrorNorms errors(const SpectralProblem& p, const Estimate& est,
                         const std::optional<IndexFunction>& zeta = std::nullopt) {
  detail::require_dim(static_cast<std::size_t>(est.f_hat.size()), static_cast<std::size_t>(p.d), "errors");
  const Vec diff = est.f_hat - p.f_true;
  ErrorNorms out;
  out.h_norm = diff.norm();
  out.prediction_norm = (p.a.array() * diff.array()).matrix().norm();
  if (zeta) {
    const Vec t = p.t();
    double acc = 0.0;
    for (int j = 0; j < p.d; ++j) {
      const double w = (*zeta)(t[j]) * p.l[j] * diff[j];
      acc += w * w;
    }
    out.zeta_norm = std::sqrt(acc);
  }
  return out;
}

}  // namespace hsreg
