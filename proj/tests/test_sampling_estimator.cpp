#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hsreg/sampling_estimator.hpp"
#include "oracles.hpp"

using namespace hsreg;

namespace {

SpectralProblem scalar_problem(double a, double l, double f, double sigma) {
  SpectralProblem p;
  p.d = 1;
  p.a = Vec::Constant(1, a);
  p.l = Vec::Constant(1, l);
  p.f_true = Vec::Constant(1, f);
  p.noise = NoiseModel::gaussian(sigma);
  return p;
}

}  // namespace

TEST(Sampling, ConstantRegressionFunction) {
  const auto p = scalar_problem(2.0, 1.0, 3.0, 0.0);
  for (auto design : {Design::RandomUniform, Design::MidpointGrid}) {
    const auto ds = sample_dataset(p, 5, 1, design);
    for (double y : ds.y) EXPECT_DOUBLE_EQ(y, 6.0);
  }
  const auto mid = sample_dataset(p, 5, 1, Design::MidpointGrid);
  const std::vector<double> want{0.1, 0.3, 0.5, 0.7, 0.9};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(mid.x[i], want[i], 1e-15);
}

TEST(Sampling, NoiseHasZeroMean) {
  auto p = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, 16, 1.0);
  const std::size_t m = 10000;
  const auto ds = sample_dataset(p, m, 42, Design::RandomUniform);
  const Vec g = regression_values(p, ds.x);
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) mean += ds.y[i] - g[static_cast<Eigen::Index>(i)];
  mean /= static_cast<double>(m);
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(static_cast<double>(m)));
}

TEST(Sampling, SeedDeterminism) {
  const auto p = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, 32, 0.1);
  const auto a = sample_dataset(p, 200, 9, Design::RandomUniform);
  const auto b = sample_dataset(p, 200, 9, Design::RandomUniform);
  const auto c = sample_dataset(p, 200, 10, Design::RandomUniform);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.x, c.x);
  for (double x : a.x) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(Sampling, DesignMatrixExamples) {
  const auto p1 = scalar_problem(1.0, 1.0, 0.0, 0.0);
  const std::vector<double> xs{0.1, 0.7, 0.9};
  const Mat phi1 = design_matrix(p1, xs);
  EXPECT_TRUE(phi1.isApprox(Mat::Ones(3, 1)));
  SpectralProblem p2;
  p2.d = 2;
  p2.a = Vec::Ones(2);
  p2.l = Vec(2);
  p2.l << 1.0, 2.0;
  p2.f_true = Vec::Zero(2);
  const std::vector<double> x0{0.0};
  const Mat phi2 = design_matrix(p2, x0);
  EXPECT_NEAR(phi2(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(phi2(0, 1), std::sqrt(2.0) / 2.0, 1e-15);
}

TEST(Sampling, MidpointGridGivesPopulationCovariance) {
  const auto p = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, 8, 0.0);
  const auto x = sample_design(64, 0, Design::MidpointGrid);
  const Mat tx = empirical_cov(p, x);
  const Mat diag = p.t().asDiagonal();
  EXPECT_LT((tx - diag).cwiseAbs().maxCoeff(), 1e-10);
  const std::vector<double> half{0.5};
  EXPECT_NEAR(empirical_cov(scalar_problem(1.0, 1.0, 0.0, 0.0), half)(0, 0), 1.0, 1e-15);
}

TEST(Sampling, EmpiricalCovarianceConcentrates) {
  const auto p = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, 16, 0.0);
  const double k2 = kappa_sq(p);
  const std::size_t m = 10000;
  int within = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto x = sample_design(m, seed, Design::RandomUniform);
    const Mat diff = empirical_cov(p, x) - Mat(p.t().asDiagonal());
    if (diff.norm() < 10.0 * k2 / std::sqrt(static_cast<double>(m))) ++within;
  }
  EXPECT_GE(within, 95);
}

TEST(Estimator, ScalarHandComputation) {
  const auto p = scalar_problem(1.0, 1.0, 1.0, 0.0);
  const auto ds = sample_dataset(p, 7, 3, Design::RandomUniform);
  const auto e = estimate(p, ds, FilterFamily::tikhonov(), 1.0);
  EXPECT_NEAR(e.u_hat[0], 0.5, 1e-15);
  EXPECT_NEAR(e.f_hat[0], 0.5, 1e-15);
  EXPECT_THROW(estimate(p, ds, FilterFamily::tikhonov(), 0.0), domain_error);
}

TEST(Estimator, NoiselessCutoffRecoversTruth) {
  const auto p = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, 32, 0.0);
  const auto ds = sample_dataset(p, 64, 0, Design::MidpointGrid);
  const auto e = estimate(p, ds, FilterFamily::cutoff(), 0.5 * p.t().minCoeff());
  EXPECT_LT(errors(p, e).h_norm, 1e-8);
}

TEST(Estimator, ZeroDataGivesZeroEstimate) {
  const auto p = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, 16, 0.1);
  auto ds = sample_dataset(p, 50, 4, Design::RandomUniform);
  std::fill(ds.y.begin(), ds.y.end(), 0.0);
  for (const auto& f : {FilterFamily::tikhonov(), FilterFamily::cutoff(), FilterFamily::landweber()})
    EXPECT_EQ(estimate(p, ds, f, 0.01).f_hat.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Estimator, UHatIsLTimesFHat) {
  const auto p = build_power_problem(0.5, 0.25, 2.0, 4.0, 1.0, 40, 0.05);
  const auto ds = sample_dataset(p, 100, 8, Design::RandomUniform);
  const auto e = estimate(p, ds, FilterFamily::tikhonov(), 0.01);
  for (int j = 0; j < p.d; ++j) EXPECT_NEAR(e.u_hat[j], p.l[j] * e.f_hat[j], 1e-12 * std::abs(e.u_hat[j]) + 1e-300);
}

TEST(EstimatorProperty, TikhonovMatchesNormalEquations) {
  std::mt19937_64 gen(1234);
  std::uniform_int_distribution<int> ud(2, 32), um(1, 256);
  std::uniform_real_distribution<double> ul(-4.0, 0.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int d = ud(gen);
    const auto m = static_cast<std::size_t>(um(gen));
    const auto p = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, d, 0.1, {VPattern::Seeded, static_cast<std::uint64_t>(k)});
    const auto ds = sample_dataset(p, m, static_cast<std::uint64_t>(k), Design::RandomUniform);
    const double lam = std::pow(10.0, ul(gen));
    const auto e = estimate(p, ds, FilterFamily::tikhonov(), lam);
    const Vec u = oracle::tikhonov_solve(p.sqrt_t(), ds.x, ds.y, lam);
    worst = std::max(worst, (e.u_hat - u).cwiseAbs().maxCoeff() / std::max(1.0, u.cwiseAbs().maxCoeff()));
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(EstimatorProperty, LinearInObservations) {
  const auto p = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, 24, 0.2);
  const auto d1 = sample_dataset(p, 60, 1, Design::RandomUniform);
  auto d2 = d1;
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z;
  for (auto& y : d2.y) y = z(gen);
  auto sum = d1;
  for (std::size_t i = 0; i < sum.y.size(); ++i) sum.y[i] = d1.y[i] + d2.y[i];
  for (const auto& f : {FilterFamily::tikhonov(), FilterFamily::cutoff(), FilterFamily::landweber()}) {
    const Vec a = estimate(p, d1, f, 0.02).f_hat, b = estimate(p, d2, f, 0.02).f_hat;
    const Vec c = estimate(p, sum, f, 0.02).f_hat;
    EXPECT_LT((c - a - b).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff())) << to_string(f.id);
  }
}

TEST(EstimatorProperty, SvdRouteAgreesWithEigenRoute) {
  // d > m takes the SVD route; compare against the normal-equation oracle.
  const auto p = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, 48, 0.1);
  const auto ds = sample_dataset(p, 20, 2, Design::RandomUniform);
  const EmpiricalOperators ops(p, ds);
  EXPECT_TRUE(ops.svd_route());
  const auto e = estimate(p, ops, FilterFamily::tikhonov(), 0.003);
  const Vec u = oracle::tikhonov_solve(p.sqrt_t(), ds.x, ds.y, 0.003);
  EXPECT_LT((e.u_hat - u).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, u.cwiseAbs().maxCoeff()));
}

TEST(EstimatorProperty, NoiselessTikhonovErrorShrinksWithLambda) {
  const auto p = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, 32, 0.0);
  const auto ds = sample_dataset(p, 64, 0, Design::MidpointGrid);
  const EmpiricalOperators ops(p, ds);
  const Vec u = p.u_true();
  const double envelope_norm = (u.array() / p.t().array()).matrix().norm();
  double prev = std::numeric_limits<double>::infinity();
  for (double lam : {1.0, 0.1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const double h = errors(p, estimate(p, ops, FilterFamily::tikhonov(), lam)).h_norm;
    EXPECT_LE(h, prev);
    EXPECT_LE(h, lam * envelope_norm * (1.0 + 1e-9));
    prev = h;
  }
}

TEST(ErrorNorms, Formulas) {
  auto p = scalar_problem(2.0, 1.0, 0.0, 0.0);
  Estimate e;
  e.f_hat = Vec::Constant(1, 1.0);
  const auto n = errors(p, e);
  EXPECT_DOUBLE_EQ(n.h_norm, 1.0);
  EXPECT_DOUBLE_EQ(n.prediction_norm, 2.0);
  const auto q = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, 20, 0.0);
  Estimate exact;
  exact.f_hat = q.f_true;
  EXPECT_EQ(errors(q, exact).h_norm, 0.0);
  Estimate off;
  off.f_hat = q.f_true + Vec::LinSpaced(20, 0.1, 0.5);
  const auto z = errors(q, off, IndexFunction::power(0.5));
  EXPECT_NEAR(*z.zeta_norm, z.prediction_norm, 1e-12);
  // With zeta = rho and an exact link the zeta norm equals the H norm.
  const auto r = errors(q, off, IndexFunction::power(0.5));
  EXPECT_NEAR(*r.zeta_norm, r.prediction_norm, 1e-12);
  const auto lk = build_power_problem(0.5, 0.25, 2.0, 4.0, 1.0, 20, 0.0);
  Estimate off2;
  off2.f_hat = lk.f_true + Vec::LinSpaced(20, -0.3, 0.2);
  const auto rr = errors(lk, off2, IndexFunction::power(0.25));
  EXPECT_NEAR(*rr.zeta_norm, rr.h_norm, 1e-10 * rr.h_norm);
  Estimate bad;
  bad.f_hat = Vec::Zero(3);
  EXPECT_THROW(errors(q, bad), dimension_error);
}
