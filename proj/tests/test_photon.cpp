#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "atomreg/photon.hpp"
#include "oracles.hpp"

using namespace atomreg;

TEST(Photon, Cooperativity) {
  EXPECT_NEAR(cooperativity({}), 2.0166666666666666, 1e-12);
}

TEST(Photon, DarkCountMean) {
  const DetectorModel d{};
  EXPECT_NEAR(d.dark_mean(200), 0.024, 1e-12);
  const PhotonModel m{};
  EXPECT_NEAR(m.mean_full(true), 15.024, 1e-12);
  EXPECT_NEAR(m.mean_full(false), 0.024, 1e-12);
  EXPECT_EQ(m.sub_intervals(), 10);
}

TEST(Photon, OracleReproducesFrozenValues) {
  const auto o = oracle::adaptive_stop(15.024 / 10, 10, 2);
  EXPECT_NEAR(o.mean_stop_index, 1.8396842602142143, 1e-12);
  EXPECT_NEAR(o.mean_counts, 2.763941632545834, 1e-12);
  EXPECT_NEAR(o.mean_counts, 1.5024 * o.mean_stop_index, 1e-12);
}

TEST(Photon, AdaptiveMatchesEnumeration) {
  const PhotonModel m{};
  const auto r = adaptive_reduction_factors(m, 100000, 11, 2);
  const auto o = oracle::adaptive_stop(m.mean_sub(true), m.sub_intervals(), m.threshold);
  EXPECT_NEAR(r.mean_stop_index.mean, o.mean_stop_index, 4 * r.mean_stop_index.std_error);
  EXPECT_NEAR(r.mean_counts.mean, o.mean_counts, 4 * r.mean_counts.std_error);
  EXPECT_NEAR(r.photon_factor.mean, 5.435715365002687, 4 * r.photon_factor.std_error);
  // equal durations per sub-interval make the two factors coincide in expectation
  EXPECT_NEAR(r.duration_factor.mean, 200 / (20 * o.mean_stop_index),
              4 * r.duration_factor.std_error);
}

TEST(Photon, FullIntervalIsPoisson) {
  const PhotonModel m{};
  const int n = 100000;
  std::map<std::int64_t, int> hist;
  for (int i = 0; i < n; ++i) {
    auto rng = RandomStream::for_trial(4, 0, i);
    ++hist[sample_full_interval(true, m, rng).counts];
  }
  // pool the tails so every bin expects at least 5 events
  const double mu = m.mean_full(true);
  double chi2 = 0;
  int bins = 0;
  double exp_lo = 0, obs_lo = 0;
  for (int k = 0; k <= 6; ++k) {
    exp_lo += n * oracle::poisson_pmf(k, mu);
    obs_lo += hist[k];
  }
  chi2 += (obs_lo - exp_lo) * (obs_lo - exp_lo) / exp_lo;
  ++bins;
  double exp_mid_total = exp_lo;
  for (int k = 7; k <= 27; ++k) {
    const double e = n * oracle::poisson_pmf(k, mu);
    chi2 += (hist[k] - e) * (hist[k] - e) / e;
    exp_mid_total += e;
    ++bins;
  }
  double obs_hi = 0;
  for (const auto& [k, c] : hist)
    if (k >= 28) obs_hi += c;
  const double exp_hi = n - exp_mid_total;
  chi2 += (obs_hi - exp_hi) * (obs_hi - exp_hi) / exp_hi;
  ++bins;
  EXPECT_LT(chi2, oracle::chi_square_critical(bins - 1, 0.01));
}

TEST(Photon, AdaptiveModeSitsAtThreshold) {
  const PhotonModel m{};
  std::map<std::int64_t, int> hist;
  for (int i = 0; i < 20000; ++i) {
    auto rng = RandomStream::for_trial(8, 0, i);
    ++hist[sample_adaptive_interval(true, m, rng).counts];
  }
  int mode = 0, best = 0;
  for (const auto& [k, c] : hist)
    if (c > best) {
      best = c;
      mode = static_cast<int>(k);
    }
  EXPECT_EQ(mode, m.threshold);
}

TEST(Photon, DarkAtomRunsFullInterval) {
  const PhotonModel m{};
  const double p_all = 0.9997165667920991;
  const int n = 100000;
  int full = 0;
  for (int i = 0; i < n; ++i) {
    auto rng = RandomStream::for_trial(9, 0, i);
    full += sample_adaptive_interval(false, m, rng).sub_intervals_used == 10;
  }
  EXPECT_NEAR(full / double(n), p_all, 4 * std::sqrt(p_all * (1 - p_all) / n) + 1e-5);
}

TEST(Photon, SingleSubIntervalEqualsFull) {
  PhotonModel m{};
  m.sub_interval_us = m.full_interval_us;
  for (int i = 0; i < 1000; ++i) {
    auto a = RandomStream::for_trial(2, 0, i);
    auto b = RandomStream::for_trial(2, 0, i);
    const auto x = sample_adaptive_interval(true, m, a);
    const auto y = sample_full_interval(true, m, b);
    ASSERT_EQ(x.counts, y.counts);
    ASSERT_EQ(x.duration_us, y.duration_us);
  }
}

TEST(Photon, ThresholdOneStopsAtFirstCount) {
  PhotonModel m{};
  m.threshold = 1;
  for (int i = 0; i < 2000; ++i) {
    auto rng = RandomStream::for_trial(6, 0, i);
    const auto o = sample_adaptive_interval(true, m, rng);
    if (o.sub_intervals_used < m.sub_intervals()) {
      ASSERT_GE(o.counts, 1);
    }
  }
}

TEST(Photon, ReductionNeedsEnoughTrials) {
  EXPECT_THROW(adaptive_reduction_factors({}, 100, 1), ConfigError);
}
