#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atomreg/error.hpp"
#include "atomreg/random.hpp"
#include "atomreg/register.hpp"

namespace atomreg {

enum class Placement {
  AtMostOneBright,     // with probability p, exactly one uniformly chosen site is bright
  IndependentPerSite,  // each site is bright with probability p
};

struct SearchProblem {
  std::size_t n = 1;
  double p = 0.0;
  Placement placement = Placement::AtMostOneBright;

  void validate() const {
    require(n >= 1, "search problem needs n >= 1");
    require(p >= 0.0 && p <= 1.0, "search probability p must lie in [0, 1]");
  }
};

enum class SearchStrategy { DeterministicSequential, GlobalCheckThenSequential, PartitionedBinary };

inline std::string to_string(SearchStrategy s) {
  switch (s) {
    case SearchStrategy::DeterministicSequential: return "deterministic_sequential";
    case SearchStrategy::GlobalCheckThenSequential: return "global_check_then_sequential";
    case SearchStrategy::PartitionedBinary: return "partitioned_binary";
  }
  return "unknown";
}

/// False-positive / false-negative rates of a group fluorescence check.
struct CheckNoise {
  double false_positive = 0.0;
  double false_negative = 0.0;
};

struct GroupQuery {
  std::vector<std::size_t> subset;
  bool positive = false;
};

struct SearchResult {
  std::vector<std::size_t> bright_sites;  // ascending
  std::uint64_t intervals_used = 0;
  std::vector<GroupQuery> transcript;
};

/// One fluorescence interval over `subset`: true iff any atom in it is bright (before noise).
inline bool group_check(const Register& reg, std::span<const std::size_t> subset,
                        const std::optional<CheckNoise>& noise, RandomStream& rng) {
  require(!subset.empty(), "group_check: subset must be non-empty");
  bool any = false;
  for (std::size_t i : subset) {
    require(i < reg.size(), "group_check: site index out of range");
    any = any || reg[i].is_bright();
  }
  if (noise) {
    if (any && rng.bernoulli(noise->false_negative)) return false;
    if (!any && rng.bernoulli(noise->false_positive)) return true;
  }
  return any;
}

namespace detail {

class Searcher {
 public:
  Searcher(const Register& reg, Placement placement, const std::optional<CheckNoise>& noise,
           RandomStream& rng)
      : reg_(reg), placement_(placement), noise_(noise), rng_(rng) {}

  bool query(std::vector<std::size_t> subset) {
    const bool positive = group_check(reg_, subset, noise_, rng_);
    result.transcript.push_back({std::move(subset), positive});
    ++result.intervals_used;
    return positive;
  }

  // `block` is known (or assumed) to contain at least one bright atom.
  void bisect(std::span<const std::size_t> block) {
    if (block.size() == 1) {
      result.bright_sites.push_back(block.front());
      return;
    }
    const std::size_t half = (block.size() + 1) / 2;
    const auto left = block.first(half);
    const auto right = block.subspan(half);
    if (query({left.begin(), left.end()})) {
      bisect(left);
      if (placement_ == Placement::IndependentPerSite && query({right.begin(), right.end()}))
        bisect(right);
    } else {
      bisect(right);  // parent positive, left negative
    }
  }

  SearchResult result;

 private:
  const Register& reg_;
  Placement placement_;
  const std::optional<CheckNoise>& noise_;
  RandomStream& rng_;
};

}  // namespace detail

/**
 * Locates bright atoms with group checks.
 *
 * PartitionedBinary starts with a global check and bisects positive blocks
 * with near-equal splits, querying only the first child and inferring the
 * sibling by elimination. Elimination assumes at most one bright atom; for
 * IndependentPerSite placements the sibling of a positive child is queried
 * as well.
 */
inline SearchResult run_search(const Register& reg, SearchStrategy strategy,
                               Placement placement, const std::optional<CheckNoise>& noise,
                               RandomStream& rng) {
  detail::Searcher s(reg, placement, noise, rng);
  std::vector<std::size_t> all(reg.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  auto sequential = [&] {
    for (std::size_t i : all)
      if (s.query({i})) s.result.bright_sites.push_back(i);
  };

  switch (strategy) {
    case SearchStrategy::DeterministicSequential:
      sequential();
      break;
    case SearchStrategy::GlobalCheckThenSequential:
      if (s.query(all)) sequential();
      break;
    case SearchStrategy::PartitionedBinary:
      if (s.query(all)) s.bisect(all);
      break;
  }
  return std::move(s.result);
}

inline SearchResult run_search(const Register& reg, SearchStrategy strategy, RandomStream& rng) {
  return run_search(reg, strategy, Placement::AtMostOneBright, std::nullopt, rng);
}

/// Mean number of checks to isolate one bright atom from n sites by near-equal bisection with elimination.
inline double mean_bisection_depth(std::size_t n) {
  require(n >= 1, "mean_bisection_depth: n must be >= 1");
  std::size_t pow2 = 1;
  unsigned floor_log = 0;
  while (pow2 * 2 <= n) {
    pow2 *= 2;
    ++floor_log;
  }
  return floor_log + 2.0 * static_cast<double>(n - pow2) / static_cast<double>(n);
}

/// Closed-form expected number of readout intervals under AtMostOneBright placement.
inline double expected_cost(const SearchProblem& problem, SearchStrategy strategy) {
  problem.validate();
  const auto n = static_cast<double>(problem.n);
  switch (strategy) {
    case SearchStrategy::DeterministicSequential:
      return n;
    case SearchStrategy::GlobalCheckThenSequential:
      require(problem.placement == Placement::AtMostOneBright,
              "expected_cost: closed form only for AtMostOneBright");
      return 1.0 + problem.p * n;
    case SearchStrategy::PartitionedBinary:
      require(problem.placement == Placement::AtMostOneBright,
              "expected_cost: closed form only for AtMostOneBright");
      return 1.0 + problem.p * mean_bisection_depth(problem.n);
  }
  return NAN;
}

/// Draws a register of dark atoms with bright sites placed according to `problem`.
inline Register sample_search_register(const SearchProblem& problem, RandomStream& rng) {
  Register reg = prepare_uniform(Register(problem.n), HyperfineState::F1);
  if (problem.placement == Placement::AtMostOneBright) {
    if (rng.bernoulli(problem.p)) reg[rng.below(problem.n)].set_hyperfine(HyperfineState::F2);
  } else {
    for (auto& s : reg.sites())
      if (rng.bernoulli(problem.p)) s.set_hyperfine(HyperfineState::F2);
  }
  return reg;
}

}  // namespace atomreg
