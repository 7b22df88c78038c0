#pragma once

#include <cmath>
#include <cstdint>

#include "atomreg/error.hpp"
#include "atomreg/parallel.hpp"
#include "atomreg/random.hpp"
#include "atomreg/register.hpp"
#include "atomreg/stats.hpp"

namespace atomreg {

/// Atom-cavity rates, all in units of 2*pi*MHz. Finesse and waist are carried as metadata.
struct CavityParams {
  double g0_MHz = 0.55;  // 2 g0 = 1.1
  double kappa_MHz = 0.10;
  double gamma_MHz = 6.0;
  double finesse = 34000.0;
  double waist_um = 45.0;

  void validate() const {
    require(g0_MHz >= 0.0, "g0 must be non-negative");
    require(kappa_MHz > 0.0, "kappa must be positive");
    require(gamma_MHz > 0.0, "gamma must be positive");
  }
};

/// Single-atom cooperativity 4 g0^2 / (kappa Gamma). The 2*pi factors cancel.
inline double cooperativity(const CavityParams& p) {
  p.validate();
  return 4.0 * p.g0_MHz * p.g0_MHz / (p.kappa_MHz * p.gamma_MHz);
}

struct DetectorModel {
  double dark_rate_per_s = 60.0;  // per detector
  int n_detectors = 2;
  double quantum_efficiency = 0.27;

  void validate() const {
    require(dark_rate_per_s >= 0.0, "dark_rate_per_s must be non-negative");
    require(n_detectors >= 1, "n_detectors must be >= 1");
    require(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0,
            "quantum_efficiency must be in (0, 1]");
  }

  /// Mean dark counts from all detectors over `duration_us`.
  double dark_mean(double duration_us) const {
    return n_detectors * dark_rate_per_s * duration_us * 1e-6;
  }
};

/// Photon arrivals are homogeneous Poisson while the probe is on.
struct PhotonModel {
  double bright_mean_full = 15.0;  // detected photons from F=2 per full interval, excluding dark counts
  double full_interval_us = 200.0;
  double sub_interval_us = 20.0;
  int threshold = 2;  // bright iff counts >= threshold
  DetectorModel detector{};

  void validate() const {
    detector.validate();
    require(bright_mean_full > 0.0, "bright_mean_full must be positive");
    require(full_interval_us > 0.0 && sub_interval_us > 0.0, "intervals must be positive");
    require(threshold >= 1, "threshold must be >= 1");
    const double ratio = full_interval_us / sub_interval_us;
    require(std::abs(ratio - std::round(ratio)) < 1e-9 && ratio >= 1.0,
            "full_interval_us must be an integer multiple of sub_interval_us");
  }

  int sub_intervals() const {
    return static_cast<int>(std::lround(full_interval_us / sub_interval_us));
  }

  double mean_full(bool bright) const {
    return (bright ? bright_mean_full : 0.0) + detector.dark_mean(full_interval_us);
  }
  double mean_sub(bool bright) const { return mean_full(bright) / sub_intervals(); }
};

enum class Classification { Dark, Bright };

struct IntervalOutcome {
  std::int64_t counts = 0;
  double duration_us = 0.0;
  Classification classification = Classification::Dark;
  /// Number of sub-intervals probed (1-based stop index).
  int sub_intervals_used = 0;
};

inline Classification classify(std::int64_t counts, const PhotonModel& model) {
  return counts >= model.threshold ? Classification::Bright : Classification::Dark;
}

/// One full probe interval. `bright` is false for dark atoms and vacant sites alike.
inline IntervalOutcome sample_full_interval(bool bright, const PhotonModel& model,
                                            RandomStream& rng) {
  IntervalOutcome out;
  out.counts = rng.poisson(model.mean_full(bright));
  out.duration_us = model.full_interval_us;
  out.sub_intervals_used = model.sub_intervals();
  out.classification = classify(out.counts, model);
  return out;
}

inline IntervalOutcome sample_full_interval(const SiteState& site, const PhotonModel& model,
                                            RandomStream& rng) {
  return sample_full_interval(site.is_bright(), model, rng);
}

/// Polls the cumulative count after every sub-interval and stops once it reaches the threshold.
inline IntervalOutcome sample_adaptive_interval(bool bright, const PhotonModel& model,
                                                RandomStream& rng) {
  const double lambda = model.mean_sub(bright);
  const int n_sub = model.sub_intervals();
  IntervalOutcome out;
  int k = 0;
  while (k < n_sub) {
    out.counts += rng.poisson(lambda);
    ++k;
    if (out.counts >= model.threshold) break;
  }
  out.sub_intervals_used = k;
  out.duration_us = k * model.sub_interval_us;
  out.classification = classify(out.counts, model);
  return out;
}

inline IntervalOutcome sample_adaptive_interval(const SiteState& site, const PhotonModel& model,
                                                RandomStream& rng) {
  return sample_adaptive_interval(site.is_bright(), model, rng);
}

struct AdaptiveReduction {
  Estimate photon_factor;
  Estimate duration_factor;
  Estimate mean_counts;      // adaptive, bright atom
  Estimate mean_stop_index;  // sub-intervals probed, bright atom
  double lambda_sub = 0.0;
};

/**
 * Monte-Carlo estimate of how much adaptive termination shortens a bright-atom
 * measurement: full-interval mean counts over adaptive mean counts, and full
 * interval over adaptive duration. Factor errors use the delta method.
 */
inline AdaptiveReduction adaptive_reduction_factors(const PhotonModel& model,
                                                    std::uint64_t n_trials, std::uint64_t seed,
                                                    unsigned threads = 1) {
  model.validate();
  require(n_trials >= 10000, "adaptive_reduction_factors: need at least 1e4 trials");
  struct Acc {
    RunningStats counts, stop;
    void merge(const Acc& o) {
      counts.merge(o.counts);
      stop.merge(o.stop);
    }
  };
  const Acc acc = run_trials(
      n_trials, threads, Acc{},
      [&](std::uint64_t i, Acc& a) {
        auto rng = RandomStream::for_trial(seed, 0, i);
        const auto o = sample_adaptive_interval(true, model, rng);
        a.counts.add(static_cast<double>(o.counts));
        a.stop.add(o.sub_intervals_used);
      },
      [](Acc& into, const Acc& from) { into.merge(from); });

  AdaptiveReduction r;
  r.mean_counts = acc.counts.estimate();
  r.mean_stop_index = acc.stop.estimate();
  r.lambda_sub = model.mean_sub(true);
  const double full_counts = model.mean_full(true);
  const double mean_duration = r.mean_stop_index.mean * model.sub_interval_us;
  const double duration_se = r.mean_stop_index.std_error * model.sub_interval_us;
  r.photon_factor = {full_counts / r.mean_counts.mean,
                     full_counts * r.mean_counts.std_error / (r.mean_counts.mean * r.mean_counts.mean),
                     n_trials};
  r.duration_factor = {model.full_interval_us / mean_duration,
                       model.full_interval_us * duration_se / (mean_duration * mean_duration),
                       n_trials};
  return r;
}

}  // namespace atomreg
