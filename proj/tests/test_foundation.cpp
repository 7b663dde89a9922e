#include <atomic>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "hsreg/grid.hpp"
#include "hsreg/index_function.hpp"
#include "hsreg/parallel.hpp"
#include "hsreg/rng.hpp"

using namespace hsreg;

TEST(Rng, Mix64MatchesSplitMix64Reference) {
  // First output of the reference SplitMix64 generator started from state 0.
  EXPECT_EQ(rng::mix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Rng, CounterDrawsArePureFunctions) {
  const rng::CounterRng a(42, rng::kStreamNoise);
  const rng::CounterRng b(42, rng::kStreamNoise);
  for (std::uint64_t i = 0; i < 100; ++i) EXPECT_EQ(a.word(i), b.word(i));
  // Order of evaluation does not matter.
  const double late = a.normal(77);
  for (std::uint64_t i = 0; i < 77; ++i) (void)a.normal(i);
  EXPECT_EQ(late, a.normal(77));
}

TEST(Rng, StreamsAndTrialsAreDistinct) {
  const rng::CounterRng d(7, rng::kStreamDesign), n(7, rng::kStreamNoise), s(7, rng::kStreamSource);
  EXPECT_NE(d.word(0), n.word(0));
  EXPECT_NE(n.word(0), s.word(0));
  std::set<std::uint64_t> seeds;
  for (std::uint64_t m : {256u, 512u, 1024u})
    for (std::uint64_t t = 0; t < 50; ++t) seeds.insert(rng::trial_seed(1, m, t));
  EXPECT_EQ(seeds.size(), 150u);
}

TEST(Rng, UniformMomentsAndRange) {
  const rng::CounterRng g(123, 9);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = g.uniform(static_cast<std::uint64_t>(i));
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  EXPECT_NEAR(sq / n - std::pow(sum / n, 2), 1.0 / 12.0, 0.002);
}

TEST(Rng, NormalMoments) {
  const rng::CounterRng g(5, 11);
  const int n = 200000;
  double sum = 0.0, sq = 0.0, q4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = g.normal(static_cast<std::uint64_t>(i));
    ASSERT_TRUE(std::isfinite(z));
    sum += z;
    sq += z * z;
    q4 += z * z * z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.015);
  EXPECT_NEAR(q4 / n, 3.0, 0.08);
}

TEST(Grid, LinspaceEndpointsAndSpacing) {
  const auto g = linspace(0.0, 1.0, 11);
  ASSERT_EQ(g.size(), 11u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] - g[i - 1], 0.1, 1e-15);
  EXPECT_EQ(linspace(3.0, 5.0, 1), std::vector<double>{3.0});
  EXPECT_THROW(linspace(0.0, 1.0, 0), domain_error);
}

TEST(Grid, LogspaceIsGeometric) {
  const auto g = logspace(1e-6, 1.0, 7);
  ASSERT_EQ(g.size(), 7u);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(std::log10(g[i]), -6.0 + static_cast<double>(i), 1e-12);
  const auto h = logspace_per_decade(1e-5, 1e-2, 40);
  EXPECT_EQ(h.size(), 121u);
  EXPECT_THROW(logspace(0.0, 1.0, 3), domain_error);
}

TEST(Grid, DefaultFilterGrids) {
  const auto l = default_filter_lambda_grid();
  const auto t = default_filter_t_grid(2.0);
  EXPECT_EQ(l.size(), 400u);
  EXPECT_EQ(l.front(), 1e-6);
  EXPECT_EQ(l.back(), 1.0);
  EXPECT_EQ(t.size(), 1000u);
  EXPECT_EQ(t.back(), 2.0);
}

TEST(IndexFunction, PowerAndLogValues) {
  const auto p = IndexFunction::power(0.5);
  EXPECT_DOUBLE_EQ(p(0.25), 0.5);
  EXPECT_EQ(p(0.0), 0.0);
  const auto lg = IndexFunction::log_type(0.0, 1.0);
  EXPECT_NEAR(lg(std::exp(-2.0)), 0.5, 1e-15);
  EXPECT_THROW(lg(1.0), domain_error);
  EXPECT_THROW(p(-1.0), domain_error);
}

TEST(IndexFunction, ProductQuotientAndRaise) {
  const auto f = IndexFunction::product(IndexFunction::power(0.3), IndexFunction::power(0.2));
  EXPECT_NEAR(f(0.36), 0.6, 1e-14);
  ASSERT_TRUE(f.power_exponent());
  EXPECT_NEAR(*f.power_exponent(), 0.5, 1e-15);
  EXPECT_NEAR(IndexFunction::power(0.25).identity_quotient()(0.5), std::pow(0.5, 0.75), 1e-15);
  EXPECT_NEAR(IndexFunction::power(0.25).raised(4.0)(0.3), 0.3, 1e-15);
  EXPECT_FALSE(IndexFunction::log_type(0.5, 1.0).power_exponent());
  EXPECT_THROW(f.identity_quotient(), domain_error);
}

TEST(IndexFunction, GridPredicates) {
  const auto grid = linspace(0.0, 0.99, 500);
  EXPECT_TRUE(IndexFunction::power(0.5).is_index_function_on(grid));
  EXPECT_TRUE(IndexFunction::power(0.5).is_sublinear_on(grid));
  EXPECT_FALSE(IndexFunction::power(2.0).is_sublinear_on(grid));
  EXPECT_FALSE(IndexFunction::power(0.0).is_index_function_on(grid));
  EXPECT_TRUE(IndexFunction::log_type(0.0, 1.0).is_index_function_on(grid));
  EXPECT_TRUE(IndexFunction::power(1.0).is_nondecreasing_on(grid));
  EXPECT_EQ(IndexFunction::power(0.5).describe(), "t^0.5");
}

TEST(IndexFunctionProperty, PowerSublinearIffExponentAtMostOne) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> e(0.01, 2.0);
  const auto grid = linspace(0.0, 1.0, 200);
  for (int k = 0; k < 200; ++k) {
    const double p = e(gen);
    EXPECT_EQ(IndexFunction::power(p).is_sublinear_on(grid), p <= 1.0) << "p=" << p;
  }
}

TEST(Parallel, CoversEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(100, 3,
                            [](std::size_t i) {
                              if (i == 57) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
  EXPECT_EQ(resolve_threads(3), 3u);
  EXPECT_GE(resolve_threads(0), 1u);
}
