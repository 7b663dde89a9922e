#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hsreg/diagnostics_bounds.hpp"
#include "hsreg/param_choice.hpp"
#include "oracles.hpp"

using namespace hsreg;

namespace {

SpectralProblem small_power(int d = 32, double sigma = 0.05) {
  return build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, d, sigma, {VPattern::Decaying, 0});
}

std::vector<double> midpoints(std::size_t m) { return sample_design(m, 0, Design::MidpointGrid); }

}  // namespace

TEST(Quantile, MatchesOracle) {
  EXPECT_DOUBLE_EQ(sample_quantile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(sample_quantile({7.0}, 0.9), 7.0);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z;
  for (int k = 0; k < 50; ++k) {
    std::vector<double> v(1 + k * 7);
    for (auto& e : v) e = z(gen);
    for (double p : {0.0, 0.05, 0.5, 0.9, 0.95, 1.0}) EXPECT_DOUBLE_EQ(sample_quantile(v, p), oracle::quantile(v, p));
  }
  EXPECT_THROW(sample_quantile({}, 0.5), domain_error);
}

TEST(BoundFormulas, PlugIn) {
  const double eta = 2.0 / std::numbers::e;
  BoundConstants c;
  c.kappa = 1.0;
  c.kappa_tilde = 1.0;
  c.M = 1.0;
  c.Sigma = 1.0;
  c.effdim_T = 1.0;
  c.effdim_L = 1.0;
  c.s = 0.5;
  EXPECT_NEAR(bound_appendix(Quantity::Psi, 1.0, 1.0, eta, c), 4.0, 1e-12);
  EXPECT_NEAR(bound_appendix(Quantity::XiS, 0.3, 10.0, eta, c), 9.0, 1e-12);
  EXPECT_NEAR(bound_appendix(Quantity::XiZeta, 0.3, 10.0, eta, c), 81.0, 1e-12);
  c.effdim_T = 4.0;
  c.effdim_L = 4.0;
  EXPECT_NEAR(bound_appendix(Quantity::Psi, 0.01, 100.0, eta, c), 0.6, 1e-12);
  EXPECT_NEAR(bound_appendix(Quantity::Upsilon, 0.01, 100.0, eta, c), 0.6, 1e-12);
  EXPECT_NEAR(bound_appendix(Quantity::LambdaQ, 0.01, 100.0, eta, c), 0.6, 1e-12);
  EXPECT_NEAR(bound_appendix(Quantity::TxDev, 0.01, 100.0, eta, c), 0.22, 1e-12);
  for (Quantity q : {Quantity::Psi, Quantity::Upsilon, Quantity::TxDev, Quantity::LambdaQ})
    EXPECT_GT(bound_appendix(q, 0.5, 50.0, 1.0 - 1e-12, c), 0.0);
  EXPECT_THROW(bound_appendix(Quantity::Psi, 0.1, 10.0, 1.0, c), domain_error);
  EXPECT_THROW(bound_appendix(Quantity::Psi, 0.1, 10.0, 0.0, c), domain_error);
}

TEST(Quantities, ParseRoundTrip) {
  for (Quantity q : {Quantity::Psi, Quantity::Upsilon, Quantity::LambdaQ, Quantity::XiS, Quantity::XiZeta,
                     Quantity::TxDev})
    EXPECT_EQ(parse_quantity(to_string(q)), q);
  EXPECT_FALSE(parse_quantity("psi").has_value());
}

TEST(Quantities, VanishOnMidpointGrid) {
  const auto p = small_power(32);
  const auto x = midpoints(64);
  EXPECT_LE(compute_upsilon(p, x, 1e-3), 1e-9);
  EXPECT_LE(compute_lambda_q(p, x, 1e-3), 1e-9);
  EXPECT_LE(compute_tx_dev(p, x), 1e-9);
  EXPECT_NEAR(compute_xi(p, x, 1e-3, IndexFunction::power(0.5)), 1.0, 1e-9);
  EXPECT_NEAR(compute_xi(p, x, 1e-3, IndexFunction::power(1.0)), 1.0, 1e-9);
}

TEST(Quantities, PsiVanishesWithoutNoise) {
  const auto p = small_power(16, 0.0);
  const auto ds = sample_dataset(p, 200, 5, Design::RandomUniform);
  EXPECT_LE(compute_psi(p, ds, 0.01), 1e-12);
}

TEST(Quantities, ScalarXi) {
  SymEig tx{Vec::Constant(1, 0.5), Mat::Identity(1, 1)};
  EXPECT_NEAR(compute_xi_from(tx, Vec::Ones(1), 0.5, IndexFunction::power(1.0)), 1.5, 1e-14);
}

TEST(Quantities, ConstantModeLambdaQ) {
  SpectralProblem p;
  p.d = 1;
  p.a = Vec::Constant(1, 0.7);
  p.l = Vec::Ones(1);
  p.f_true = Vec::Ones(1);
  const std::vector<double> x{0.1, 0.4, 0.93};
  EXPECT_LE(compute_lambda_q(p, x, 0.1), 1e-15);
  EXPECT_LE(compute_upsilon(p, x, 0.1), 1e-15);
}

TEST(Interpolation, Examples) {
  SpectralProblem p;
  p.d = 2;
  p.a = Vec::Ones(2);
  p.l = Vec(2);
  p.l << 1.0, 2.0;
  Vec f(2);
  f << 1.0, 1.0;
  p.f_true = f;
  const auto c = check_interpolation(p, f, 0.0, 1.0, 2.0);
  EXPECT_NEAR(c.lhs, std::sqrt(5.0), 1e-14);
  EXPECT_NEAR(c.rhs, std::sqrt(std::sqrt(2.0) * std::sqrt(17.0)), 1e-14);
  EXPECT_TRUE(c.pass);
  Vec single = Vec::Zero(2);
  single[1] = 3.0;
  const auto t = check_interpolation(p, single, -0.5, 0.7, 1.3);
  EXPECT_NEAR(t.lhs, t.rhs, 1e-14 * t.rhs);
  EXPECT_THROW(check_interpolation(p, f, 1.0, 1.0, 2.0), domain_error);
}

TEST(InterpolationProperty, RandomInstances) {
  std::mt19937_64 gen(91);
  std::uniform_int_distribution<int> ud(1, 50);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z;
  for (int k = 0; k < 1000; ++k) {
    SpectralProblem p;
    p.d = ud(gen);
    p.a = Vec::Ones(p.d);
    p.l.resize(p.d);
    Vec f(p.d);
    double acc = 0.2 + u(gen);
    for (int j = 0; j < p.d; ++j) {
      acc += 3.0 * u(gen);
      p.l[j] = acc;
      f[j] = z(gen);
    }
    p.f_true = f;
    const double t = -2.0 + 2.0 * u(gen);
    const double r = t + 0.01 + 2.0 * u(gen);
    const double s = r + 0.01 + 2.0 * u(gen);
    EXPECT_TRUE(check_interpolation(p, f, t, r, s).pass) << k;
  }
}

TEST(Heinz, Examples) {
  const double lam = 0.03;
  const double grid[1] = {lam};
  EXPECT_NEAR(check_heinz_bound(Vec::Constant(1, lam), 0.25, grid), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_THROW(check_heinz_bound(Vec::Ones(1), 0.6, grid), domain_error);
}

TEST(HeinzProperty, BoundedByOne) {
  const auto lams = logspace(1e-8, 1.0, 200);
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-9.0, 0.0);
  for (double a : {0.1, 0.25, 0.5}) {
    const auto p = build_power_problem(0.7, a, 1.0, 1.0, 1.0, 400, 0.0);
    EXPECT_LE(check_heinz_bound(p.t(), a, lams), 1.0 + 1e-12);
    Vec dense(500);
    for (auto& v : dense) v = std::pow(10.0, u(gen));
    EXPECT_LE(check_heinz_bound(dense, a, lams), 1.0 + 1e-12);
  }
}

TEST(XiEnvelope, HoldsInHypothesis) {
  const auto p = small_power(32);
  const Vec t = p.t();
  const IndexFunction zeta = IndexFunction::power(0.5);
  for (std::size_t m : {64u, 256u, 1024u}) {
    const double lam = lambda_balance_effdim(t, m).lambda;
    for (std::uint64_t k = 0; k < 30; ++k) {
      const auto x = sample_design(m, rng::trial_seed(11, m, k), Design::RandomUniform);
      const auto c = check_xi_envelope(p, x, lam, zeta);
      EXPECT_TRUE(c.in_hypothesis);
      EXPECT_TRUE(c.pass) << "m=" << m << " trial=" << k << " xi=" << c.xi << " env=" << c.envelope;
    }
  }
}

TEST(LemmaEnvelope, MidpointGridRemovesLambdaTerm) {
  const auto p = small_power(24);
  const Dataset ds{midpoints(48), std::vector<double>(48, 0.0), 0, Design::MidpointGrid};
  const auto c = check_lemma_envelope(p, ds, FilterFamily::tikhonov(), 0.01);
  EXPECT_LE(c.lambda_q, 1e-9);
  const auto ff = FilterFamily::tikhonov();
  EXPECT_LE(c.lhs, 1.0 + (ff.B + ff.D) * c.xi_rho * c.xi_upsilon + 1e-9);
  EXPECT_TRUE(c.pass);
}

TEST(LemmaEnvelope, ScalarCase) {
  SpectralProblem p = small_power(2);
  p.d = 1;
  p.a = p.a.head(1).eval();
  p.l = p.l.head(1).eval();
  p.f_true = p.f_true.head(1).eval();
  const double lam = 0.2;
  const Dataset ds{{0.3, 0.8}, {0.0, 0.0}, 0, Design::RandomUniform};
  const auto c = check_lemma_envelope(p, ds, FilterFamily::tikhonov(), lam);
  // e_1 = 1 so T_x = T_nu = t_1 = 1: r_lambda(1) = lambda/(1+lambda).
  EXPECT_NEAR(c.lhs, lam / (1.0 + lam), 1e-14);
  EXPECT_NEAR(c.lambda_q, 0.0, 1e-14);
  EXPECT_NEAR(c.xi, 1.0, 1e-14);
  EXPECT_NEAR(c.xi_rho, 1.0, 1e-14);
  EXPECT_NEAR(c.rhs, 1.0 + 2.0, 1e-14);
  EXPECT_TRUE(c.pass);
}

TEST(LemmaEnvelope, RandomDesignsAllFilters) {
  const auto p = small_power(24);
  const double lam = lambda_balance_effdim(p.t(), 128).lambda;
  for (const auto& f : {FilterFamily::tikhonov(), FilterFamily::cutoff(), FilterFamily::landweber()}) {
    for (std::uint64_t k = 0; k < 100; ++k) {
      const auto ds = sample_dataset(p, 128, rng::trial_seed(4, 128, k), Design::RandomUniform);
      const auto c = check_lemma_envelope(p, ds, f, lam);
      EXPECT_TRUE(c.pass) << to_string(f.id) << " trial " << k << " lhs=" << c.lhs << " rhs=" << c.rhs;
    }
  }
}

TEST(Coverage, NoiselessPsiAlwaysCovered) {
  const auto p = small_power(16, 0.0);
  const auto r = montecarlo_coverage(p, Quantity::Psi, 0.05, 200, 0.1, {1, 100, 1});
  EXPECT_EQ(r.coverage, 1.0);
  EXPECT_TRUE(r.pass);
}

TEST(Coverage, BatchDeterministicAndConservative) {
  const auto p = small_power(32);
  const double lam = lambda_balance_effdim(p.t(), 512).lambda;
  const Quantity qs[] = {Quantity::Psi, Quantity::Upsilon, Quantity::LambdaQ, Quantity::XiS, Quantity::TxDev};
  const double etas[] = {0.05, 0.1};
  CoverageOptions opt{20240611, 100, 1};
  const auto a = montecarlo_coverage_batch(p, qs, lam, 512, etas, opt);
  opt.threads = 3;
  const auto b = montecarlo_coverage_batch(p, qs, lam, 512, etas, opt);
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].empirical_quantile, b[i].empirical_quantile);
    EXPECT_EQ(a[i].coverage, b[i].coverage);
    EXPECT_TRUE(a[i].in_hypothesis);
    EXPECT_TRUE(a[i].pass) << to_string(a[i].quantity) << " eta=" << a[i].eta;
    EXPECT_GE(a[i].coverage, 1.0 - a[i].eta);
  }
  EXPECT_THROW(montecarlo_coverage(p, Quantity::Psi, lam, 64, 0.1, {1, 99, 1}), domain_error);
}

TEST(Coverage, TxDevLargeSample) {
  const auto p = small_power(32);
  const auto r = montecarlo_coverage(p, Quantity::TxDev, 0.01, 10000, 0.05, {9, 100, 0});
  EXPECT_GE(r.coverage, 0.95);
}
