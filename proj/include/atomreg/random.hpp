#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace atomreg {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/**
 * Counter-based random stream.
 *
 * The n-th output is mix64(key + n * gamma), so a stream is fully described
 * by its key and position. Streams for distinct (seed, cell, trial) triples
 * are derived by hashing, which keeps Monte-Carlo results independent of how
 * trials are scheduled across threads.
 *
 * Satisfies UniformRandomBitGenerator.
 */
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr RandomStream(std::uint64_t key) noexcept : key_(key) {}

  /// Stream for one trial of one sweep cell of an experiment.
  static constexpr RandomStream for_trial(std::uint64_t master_seed, std::uint64_t cell,
                                          std::uint64_t trial) noexcept {
    std::uint64_t k = mix64(master_seed ^ 0x6a09e667f3bcc909ULL);
    k = mix64(k + mix64(cell + 0x3c6ef372fe94f82bULL));
    k = mix64(k + mix64(trial + 0xa54ff53a5f1d36f1ULL));
    return RandomStream(k);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift with rejection.
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Poisson variate. Inversion for small means, libstdc++ PTRS beyond.
  std::int64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    if (mean < 30.0) {
      const double u = uniform();
      double term = std::exp(-mean);
      double cdf = term;
      std::int64_t k = 0;
      while (u >= cdf) {
        ++k;
        term *= mean / static_cast<double>(k);
        cdf += term;
        if (term < 1e-300 && static_cast<double>(k) > mean) break;
      }
      return k;
    }
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(*this);
  }

  constexpr std::uint64_t position() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace atomreg
