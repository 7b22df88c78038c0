#include <vector>

#include <gtest/gtest.h>

#include "atomreg/search.hpp"

using namespace atomreg;

namespace {

constexpr SearchStrategy kAll[] = {SearchStrategy::DeterministicSequential,
                                   SearchStrategy::GlobalCheckThenSequential,
                                   SearchStrategy::PartitionedBinary};

Register with_bright(std::size_t n, std::vector<std::size_t> bright) {
  Register reg = prepare_uniform(Register(n), HyperfineState::F1);
  for (std::size_t i : bright) reg[i].set_hyperfine(HyperfineState::F2);
  return reg;
}

// Exact expectation over every noiseless single-bright placement.
double enumerate_cost(std::size_t n, double p, SearchStrategy s) {
  RandomStream rng(0);
  double cost = (1 - p) * static_cast<double>(run_search(with_bright(n, {}), s, rng).intervals_used);
  for (std::size_t i = 0; i < n; ++i)
    cost += p / static_cast<double>(n) *
            static_cast<double>(run_search(with_bright(n, {i}), s, rng).intervals_used);
  return cost;
}

}  // namespace

TEST(Search, EnumerationMatchesClosedForm) {
  for (auto s : kAll)
    for (std::size_t n = 1; n <= 40; ++n)
      for (double p : {0.0, 0.1, 0.3, 0.5, 1.0})
        EXPECT_NEAR(enumerate_cost(n, p, s), expected_cost({n, p}, s), 1e-12)
            << to_string(s) << " n=" << n << " p=" << p;
}

TEST(Search, BisectionDepthSpecialCases) {
  EXPECT_EQ(mean_bisection_depth(1), 0.0);
  EXPECT_EQ(mean_bisection_depth(8), 3.0);
  EXPECT_NEAR(mean_bisection_depth(3), 1 + 2.0 / 3, 1e-15);
  EXPECT_NEAR(mean_bisection_depth(10), 3 + 0.4, 1e-15);
}

TEST(Search, FindsEveryBrightAtom) {
  for (std::size_t n = 1; n <= 9; ++n) {
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<std::size_t> truth;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1u) truth.push_back(i);
      const Register reg = with_bright(n, truth);
      for (auto s : kAll) {
        RandomStream rng(0);
        const auto r = run_search(reg, s, Placement::IndependentPerSite, std::nullopt, rng);
        ASSERT_EQ(r.bright_sites, truth) << to_string(s) << " mask=" << mask;
      }
    }
  }
}

TEST(Search, TranscriptIsConsistent) {
  const Register reg = with_bright(10, {6});
  for (auto s : kAll) {
    RandomStream rng(0);
    const auto r = run_search(reg, s, rng);
    EXPECT_EQ(r.transcript.size(), r.intervals_used);
    for (const auto& q : r.transcript) {
      bool any = false;
      for (std::size_t i : q.subset) any = any || i == 6;
      EXPECT_EQ(q.positive, any);
    }
  }
}

TEST(Search, GroupStrategiesNeverWorseThanSequentialOnAverage) {
  for (std::size_t n = 2; n <= 10; ++n)
    for (double p : {0.0, 0.1, 0.3, 0.5}) {
      const double seq = expected_cost({n, p}, SearchStrategy::DeterministicSequential);
      EXPECT_LE(expected_cost({n, p}, SearchStrategy::PartitionedBinary),
                expected_cost({n, p}, SearchStrategy::GlobalCheckThenSequential) + 1e-12);
      EXPECT_LE(expected_cost({n, p}, SearchStrategy::PartitionedBinary), seq);
    }
}

TEST(Search, EmptySubsetIsAnError) {
  RandomStream rng(0);
  const Register reg = with_bright(3, {});
  EXPECT_THROW(group_check(reg, std::span<const std::size_t>{}, std::nullopt, rng), ConfigError);
}

TEST(Search, NoisyCheckFalsePositives) {
  const Register reg = with_bright(4, {});
  const std::vector<std::size_t> all{0, 1, 2, 3};
  int positives = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    auto rng = RandomStream::for_trial(1, 0, i);
    positives += group_check(reg, all, CheckNoise{0.1, 0.0}, rng);
  }
  EXPECT_NEAR(positives / double(n), 0.1, 4 * std::sqrt(0.09 / n));
}
