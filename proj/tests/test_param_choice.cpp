#include <cmath>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "hsreg/effective_dimension.hpp"
#include "hsreg/param_choice.hpp"
#include "hsreg/spectral_model.hpp"
#include "oracles.hpp"

using namespace hsreg;

namespace {

double slope(const std::vector<std::pair<double, double>>& pts) {
  std::vector<double> x, y;
  for (const auto& [a, b] : pts) {
    x.push_back(a);
    y.push_back(b);
  }
  return oracle::ols_slope(x, y);
}

}  // namespace

TEST(BalanceEffdim, SyntheticSquareRootProfile) {
  const auto c = lambda_balance_effdim([](double lam) { return 1.0 / std::sqrt(lam); }, 1000);
  EXPECT_FALSE(c.flagged);
  EXPECT_NEAR(c.lambda, 1e-2, 1e-12);
}

TEST(BalanceEffdim, SingleEigenvalue) {
  const auto c = lambda_balance_effdim(Vec::Ones(1), 2);
  EXPECT_NEAR(c.lambda, (std::sqrt(3.0) - 1.0) / 2.0, 1e-12);
}

TEST(BalanceEffdim, FlagsTooSmallSample) {
  const auto c = lambda_balance_effdim([](double) { return 5.0; }, 2);
  EXPECT_TRUE(c.flagged);
  EXPECT_EQ(c.lambda, 1.0);
}

TEST(BalanceEffdimProperty, SatisfiesHypothesisAndDecreasesInM) {
  const auto p = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, 4000, 0.0);
  const Vec t = p.t();
  double prev = 2.0;
  for (std::size_t m = 8; m <= (1u << 16); m *= 2) {
    const auto c = lambda_balance_effdim(t, m);
    ASSERT_FALSE(c.flagged);
    EXPECT_LE(effdim(t, c.lambda), static_cast<double>(m) * c.lambda * (1.0 + 1e-9));
    EXPECT_NEAR(oracle::effdim_sum(t, c.lambda), static_cast<double>(m) * c.lambda, 1e-8 * m * c.lambda);
    EXPECT_LT(c.lambda, prev);
    prev = c.lambda;
  }
}

TEST(PhiInverse, Examples) {
  EXPECT_NEAR(lambda_phi_inverse(0.25, 3.0, 10000), 1e-4, 1e-16);
  EXPECT_NEAR(lambda_phi_inverse(0.25, 5.0, 100000000), 1e-4, 1e-16);
  EXPECT_EQ(lambda_phi_inverse(0.25, 3.0, 1), 1.0);
  EXPECT_THROW(lambda_phi_inverse(0.25, 1.0, 100), domain_error);
}

TEST(PowerTable, Oversmoothing) {
  EXPECT_NEAR(lambda_power_table(0.5, 0.5, 0.5, 1.0, 1000000, RateCase::Oversmoothing), 1e-4, 1e-15);
  EXPECT_THROW(lambda_power_table(0.5, 0.5, 1.5, 1.0, 100, RateCase::Oversmoothing), domain_error);
  EXPECT_THROW(lambda_power_table(0.5, 0.5, 0.5, 2.0, 100, RateCase::Oversmoothing), domain_error);
}

TEST(PowerTable, RegularRegimes) {
  // a q = 1 < a r + (b+1)/2 = 1.5: second regime, exponent 1/(2ar + b + 1 - 2a) = 1/2.
  EXPECT_FALSE(regular_first_regime(0.5, 0.5, 1.5, 2.0));
  EXPECT_NEAR(lambda_power_table(0.5, 0.5, 1.5, 2.0, 10000, RateCase::Regular), 1e-2, 1e-15);
  // a q = 1.5 >= 1.25: first regime, lambda = m^{-1/(2a(q-1))}.
  EXPECT_TRUE(regular_first_regime(0.5, 0.5, 1.0, 3.0));
  EXPECT_NEAR(lambda_power_table(0.5, 0.5, 1.0, 3.0, 10000, RateCase::Regular), 1e-2, 1e-15);
  EXPECT_NEAR(lambda_power_table(0.5, 0.5, 1.0, 3.0, 10000, RateCase::Regular),
              lambda_phi_inverse(0.5, 3.0, 10000), 1e-15);
  EXPECT_THROW(lambda_power_table(0.5, 0.5, 0.5, 2.0, 100, RateCase::Regular), domain_error);
  EXPECT_THROW(lambda_power_table(0.5, 0.5, 1.0, 1.0, 100, RateCase::Regular), domain_error);
  EXPECT_THROW(lambda_power_table(0.5, 0.5, 3.0, 2.0, 100, RateCase::Regular), domain_error);
  EXPECT_THROW(lambda_power_table(0.6, 0.5, 1.0, 2.0, 100, RateCase::Regular), domain_error);
}

TEST(BalanceGeneral, ReducesToEffdimBalanceAtRateOne) {
  const auto p = build_power_problem(1.0, 0.5, 1.0, 1.0, 1.0, 2000, 0.0);
  const Vec t = p.t();
  for (std::size_t m : {64u, 1024u, 16384u}) {
    const auto g = lambda_balance_general(t, *p.smoothness, m);
    const auto e = lambda_balance_effdim(t, m);
    EXPECT_NEAR(g.lambda, e.lambda, 1e-12 * e.lambda);
  }
}

TEST(BalanceGeneral, ExponentMatchesClosedForm) {
  // t_j = j^{-2}, b = 1/2, a = 1/4, r = 2: lambda ~ m^{-1/(2a(r-1) + 1 + b)} = m^{-1/2}.
  const auto p = build_power_problem(0.5, 0.25, 2.0, 4.0, 1.0, 20000, 0.0);
  const Vec t = p.t();
  std::vector<std::pair<double, double>> pts;
  for (std::size_t m = 1u << 12; m <= (1u << 20); m *= 4) {
    const auto g = lambda_balance_general(t, *p.smoothness, m);
    ASSERT_FALSE(g.flagged) << g.note;
    pts.emplace_back(std::log(static_cast<double>(m)), std::log(g.lambda));
  }
  EXPECT_NEAR(slope(pts), -0.5, 0.5 * 0.03);
}

TEST(BalanceVsPowerTable, AgreeWithLeadingConstant) {
  const auto p = build_power_problem(1.0, 0.5, 0.5, 1.0, 1.0, 20000, 0.0);
  const Vec t = p.t();
  const double c = effdim_power_constant(0.5);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t m = 1u << 10; m <= (1u << 16); m *= 2) {
    const double bal = lambda_balance_effdim(t, m).lambda;
    const double tab = lambda_power_table(0.5, 0.5, 0.5, 1.0, m, RateCase::Oversmoothing, c);
    EXPECT_NEAR(bal / tab, 1.0, 0.05) << "m=" << m;
    pts.emplace_back(std::log(static_cast<double>(m)), std::log(bal));
  }
  const double want = -1.0 / (0.5 + 1.0);
  EXPECT_NEAR(slope(pts), want, std::abs(want) * 0.03);
}
