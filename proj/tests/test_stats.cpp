#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "atomreg/parallel.hpp"
#include "atomreg/random.hpp"
#include "atomreg/stats.hpp"

using namespace atomreg;

TEST(Stats, LinearFitExact) {
  const std::vector<double> xs{0, 1, 2, 3, 4};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(2 * x + 1);
  const auto f = fit_linear(xs, ys);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.slope_std_error, 0.0, 1e-9);
}

TEST(Stats, LinearFitRejectsDegenerateInput) {
  const std::vector<double> same{1, 1, 1};
  const std::vector<double> ys{1, 2, 3};
  EXPECT_THROW(fit_linear(same, ys), ConfigError);
  EXPECT_THROW(fit_linear(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ConfigError);
  EXPECT_THROW(fit_power_law(ys, std::vector<double>{1, 0, 2}), ConfigError);
}

TEST(Stats, PowerLawSlope) {
  std::vector<double> xs, ys;
  for (double x : {0.01, 0.02, 0.05, 0.1}) {
    xs.push_back(x);
    ys.push_back(3 * x * x * x);
  }
  EXPECT_NEAR(fit_power_law(xs, ys).slope, 3.0, 1e-10);
}

TEST(Stats, SaturatingFitNoiseless) {
  std::vector<double> ts, ps;
  for (int k = 0; k <= 12; ++k) {
    ts.push_back(10.0 * k);
    ps.push_back(0.37 * (1 - std::exp(-ts.back() / 45.0)));
  }
  const auto f = fit_saturating_exponential(ts, ps);
  ASSERT_TRUE(f.converged) << f.diagnostic;
  EXPECT_NEAR(f.tau, 45.0, 45e-6);
  EXPECT_NEAR(f.p_inf, 0.37, 1e-6);
}

TEST(Stats, SaturatingFitFlagsZeroData) {
  const std::vector<double> ts{0, 1, 2, 3, 4}, ps(5, 0.0);
  const auto f = fit_saturating_exponential(ts, ps);
  EXPECT_FALSE(f.converged);
  EXPECT_FALSE(f.diagnostic.empty());
}

TEST(Stats, StdErrorScalesAsInverseRootN) {
  auto se = [](std::uint64_t n) {
    Proportion p;
    RandomStream rng(n);
    for (std::uint64_t i = 0; i < n; ++i) p.add(rng.bernoulli(0.3));
    return p.estimate().std_error;
  };
  EXPECT_NEAR(se(10000) / se(40000), 2.0, 0.05);
}

TEST(Stats, RunningStatsMergeEqualsSequential) {
  RunningStats a, b, all;
  for (int i = 0; i < 10; ++i) {
    (i < 4 ? a : b).add(i * 0.5);
    all.add(i * 0.5);
  }
  a.merge(b);
  EXPECT_DOUBLE_EQ(a.estimate().mean, all.estimate().mean);
  EXPECT_NEAR(a.estimate().std_error, all.estimate().std_error, 1e-15);
}

TEST(Parallel, ThreadCountDoesNotChangeResult) {
  auto go = [](unsigned threads) {
    return run_trials(
        50000, threads, RunningStats{},
        [](std::uint64_t i, RunningStats& s) {
          auto rng = RandomStream::for_trial(3, 1, i);
          s.add(rng.uniform());
        },
        [](RunningStats& into, const RunningStats& from) { into.merge(from); });
  };
  const auto one = go(1);
  for (unsigned t : {2u, 4u, 16u}) {
    const auto r = go(t);
    EXPECT_EQ(r.n, one.n);
    EXPECT_EQ(r.sum, one.sum);
    EXPECT_EQ(r.sum_sq, one.sum_sq);
  }
}

TEST(Parallel, PropagatesExceptions) {
  EXPECT_THROW(run_trials(
                   5000, 4, 0,
                   [](std::uint64_t i, int&) {
                     if (i == 3000) throw std::runtime_error("boom");
                   },
                   [](int&, const int&) {}),
               std::runtime_error);
}
