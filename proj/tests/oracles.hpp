#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the simulator; each function evaluates the quantity by direct enumeration.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace oracle {

inline double poisson_pmf(int k, double mean) {
  return std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
}

struct AdaptiveStop {
  double mean_stop_index = 0.0;
  double mean_counts = 0.0;
};

/// Enumerates the cumulative-count Markov chain of a thresholded, polled Poisson counter.
inline AdaptiveStop adaptive_stop(double lambda_sub, int n_sub, int threshold) {
  std::vector<double> alive(static_cast<std::size_t>(threshold), 0.0);  // P(cumulative = c, not stopped)
  alive[0] = 1.0;
  AdaptiveStop out;
  for (int k = 1; k <= n_sub; ++k) {
    std::vector<double> next(alive.size(), 0.0);
    for (int c = 0; c < threshold; ++c) {
      if (alive[static_cast<std::size_t>(c)] == 0.0) continue;
      for (int x = 0; x < 200; ++x) {
        const double q = alive[static_cast<std::size_t>(c)] * poisson_pmf(x, lambda_sub);
        const int total = c + x;
        if (total >= threshold || k == n_sub) {
          out.mean_stop_index += k * q;
          out.mean_counts += total * q;
        } else {
          next[static_cast<std::size_t>(total)] += q;
        }
      }
    }
    alive = std::move(next);
  }
  return out;
}

/// Majority-vote failure probability for d independent flips, by enumerating all 2^d outcomes.
inline double majority_failure(double p, int d) {
  double fail = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
    const int flips = __builtin_popcount(mask);
    const double prob = std::pow(p, flips) * std::pow(1.0 - p, d - flips);
    if (2 * flips > d) fail += prob;
  }
  return fail;
}

/// Upper critical value of a chi-square distribution.
inline double chi_square_critical(double dof, double alpha) {
  return boost::math::quantile(boost::math::complement(boost::math::chi_squared(dof), alpha));
}

}  // namespace oracle
