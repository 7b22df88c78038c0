#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "atomreg/error.hpp"
#include "atomreg/photon.hpp"
#include "atomreg/random.hpp"
#include "atomreg/register.hpp"

namespace atomreg {

/// Operating point of the probe: tweezer depth and probe detunings.
struct ProbeConfig {
  double depth_mK = 0.25;
  double detuning_pa_MHz = -5.0;
  double detuning_pc_MHz = -5.0;

  void validate() const { require(depth_mK > 0.0, "tweezer depth must be positive"); }
};

/// Per-measurement state-detection infidelity and loss (probabilities, not percent).
struct ErrorRates {
  double infidelity_F1 = 0.0;
  double loss_F1 = 0.0;
  double infidelity_F2 = 0.0;
  double loss_F2 = 0.0;

  void validate() const {
    for (double v : {infidelity_F1, loss_F1, infidelity_F2, loss_F2})
      require(v >= 0.0 && v <= 1.0, "measurement error rates must lie in [0, 1]");
  }
};

/// Single-atom readout error rates keyed by (tweezer depth, probe-cavity detuning).
class MeasurementErrorTable {
 public:
  struct Row {
    ProbeConfig probe;
    ErrorRates rates;
  };

  MeasurementErrorTable() = default;
  explicit MeasurementErrorTable(std::vector<Row> rows) : rows_(std::move(rows)) {
    for (const auto& r : rows_) {
      r.probe.validate();
      r.rates.validate();
    }
  }

  /// The four calibrated operating points measured with adaptive readout.
  static MeasurementErrorTable defaults() {
    auto row = [](double depth, double det_pc, double i1, double l1, double i2, double l2) {
      return Row{{depth, -5.0, det_pc}, {i1 / 100, l1 / 100, i2 / 100, l2 / 100}};
    };
    return MeasurementErrorTable({
        row(0.20, -3.0, 0.17, 3.0, 0.3, 3.8),
        row(0.25, -5.0, 0.39, 2.1, 0.8, 3.0),
        row(0.25, -11.0, 0.30, 0.7, 2.6, 1.1),
        row(0.25, -17.0, 0.36, 0.3, 3.9, 0.6),
    });
  }

  const ErrorRates& lookup(const ProbeConfig& probe) const {
    for (const auto& r : rows_) {
      if (std::abs(r.probe.depth_mK - probe.depth_mK) < 1e-9 &&
          std::abs(r.probe.detuning_pc_MHz - probe.detuning_pc_MHz) < 1e-9)
        return r.rates;
    }
    throw ConfigError("no measurement error table row for depth " +
                      std::to_string(probe.depth_mK) + " mK, probe-cavity detuning " +
                      std::to_string(probe.detuning_pc_MHz) + " MHz");
  }

  std::span<const Row> rows() const noexcept { return rows_; }

 private:
  std::vector<Row> rows_;
};

/// Local excited-state light shift ("hiding") that protects non-target atoms from the probe.
struct HidingModel {
  double depump_per_interval_unhidden = 0.044;
  /// (power mW, suppression factor), sorted by power.
  std::vector<std::pair<double, double>> suppression_points{{0.0, 1.0}, {0.4, 5.2}};
  double background_floor = 0.0008;
  double beam_waist_um = 4.0;
  double shift_slope_MHz_per_uW = 1.0;
  double residual_at_10um = 0.01;

  void validate() const {
    require(depump_per_interval_unhidden >= 0.0 && depump_per_interval_unhidden <= 1.0,
            "unhidden depump probability must lie in [0, 1]");
    require(background_floor >= 0.0 && background_floor <= depump_per_interval_unhidden,
            "background floor must lie in [0, unhidden depump probability]");
    require(!suppression_points.empty(), "need at least one suppression point");
    for (std::size_t i = 0; i < suppression_points.size(); ++i) {
      require(suppression_points[i].first >= 0.0, "suppression point power must be >= 0");
      require(suppression_points[i].second >= 1.0, "suppression factor must be >= 1");
      if (i > 0) {
        require(suppression_points[i].first > suppression_points[i - 1].first,
                "suppression points must have strictly increasing power");
        require(suppression_points[i].second >= suppression_points[i - 1].second,
                "suppression factor must be non-decreasing in power");
      }
    }
    require(beam_waist_um > 0.0, "hiding beam waist must be positive");
    require(shift_slope_MHz_per_uW >= 0.0, "light-shift slope must be non-negative");
    require(residual_at_10um >= 0.0 && residual_at_10um < 1.0,
            "residual light shift must lie in [0, 1)");
  }

  /// Suppression factor at `power_mW`, log-linear between calibration points and beyond them.
  double suppression(double power_mW) const {
    const auto& pts = suppression_points;
    if (pts.size() == 1) return pts.front().second;
    std::size_t seg = 0;
    while (seg + 2 < pts.size() && power_mW > pts[seg + 1].first) ++seg;
    const auto [p0, s0] = pts[seg];
    const auto [p1, s1] = pts[seg + 1];
    const double slope = (std::log(s1) - std::log(s0)) / (p1 - p0);
    return std::max(1.0, std::exp(std::log(s0) + slope * (power_mW - p0)));
  }
};

/// Per-interval depump probability of a hidden bright atom.
inline double hidden_depump_probability(const HidingModel& model, double power_mW) {
  require(power_mW >= 0.0, "hiding power must be non-negative");
  model.validate();
  return std::max(model.background_floor,
                  model.depump_per_interval_unhidden / model.suppression(power_mW));
}

/**
 * Excited-state light shift at distance `r_um` from a hiding beam of
 * `power_uW`: a Gaussian intensity profile on a flat aberration pedestal,
 * normalized so the center value is power * slope and the value at 10 um is
 * the configured residual fraction of it.
 */
inline double light_shift_profile(const HidingModel& model, double power_uW, double r_um) {
  require(power_uW >= 0.0 && r_um >= 0.0, "light_shift_profile: power and r must be >= 0");
  model.validate();
  const double w2 = model.beam_waist_um * model.beam_waist_um;
  const double g10 = std::exp(-2.0 * 100.0 / w2);
  const double pedestal =
      std::max(0.0, (model.residual_at_10um - g10) / (1.0 - model.residual_at_10um));
  const double shape = (std::exp(-2.0 * r_um * r_um / w2) + pedestal) / (1.0 + pedestal);
  return power_uW * model.shift_slope_MHz_per_uW * shape;
}

enum class InferredState { Vacant, F1, F2 };

/// Hyperfine interval followed by an occupation interval (repumper on).
struct SiteMeasurement {
  IntervalOutcome hyperfine;
  IntervalOutcome occupation;
  InferredState inferred = InferredState::Vacant;
};

struct ReadoutOptions {
  bool adaptive = true;
  /// Bright-state loss multiplier when adaptive termination is off.
  double full_interval_loss_factor = 4.5;
};

inline InferredState infer(const IntervalOutcome& hyperfine, const IntervalOutcome& occupation) {
  if (occupation.classification == Classification::Dark) return InferredState::Vacant;
  return hyperfine.classification == Classification::Bright ? InferredState::F2
                                                            : InferredState::F1;
}

/**
 * Measures one site. The table infidelity flips the emitter seen during the
 * hyperfine interval; the occupation interval sees any present atom as bright.
 * Loss is applied once, after both intervals. Returns the record and the
 * post-measurement site (hyperfine state unchanged unless lost).
 */
inline std::pair<SiteMeasurement, SiteState> measure_site(SiteState site, const ProbeConfig& probe,
                                                          const MeasurementErrorTable& table,
                                                          const PhotonModel& photon,
                                                          const ReadoutOptions& options,
                                                          RandomStream& rng) {
  const ErrorRates& rates = table.lookup(probe);
  auto sample = [&](bool bright) {
    return options.adaptive ? sample_adaptive_interval(bright, photon, rng)
                            : sample_full_interval(bright, photon, rng);
  };

  SiteMeasurement m;
  if (site.is_vacant()) {
    m.hyperfine = sample(false);
    m.occupation = sample(false);
    m.inferred = infer(m.hyperfine, m.occupation);
    return {m, site};
  }

  const HyperfineState s = site.hyperfine();
  const bool is_f2 = s == HyperfineState::F2;
  HyperfineState seen = s;
  if (rng.bernoulli(is_f2 ? rates.infidelity_F2 : rates.infidelity_F1)) seen = flipped(seen);
  m.hyperfine = sample(seen == HyperfineState::F2);
  m.occupation = sample(true);
  m.inferred = infer(m.hyperfine, m.occupation);

  double p_loss = is_f2 ? rates.loss_F2 : rates.loss_F1;
  if (is_f2 && !options.adaptive) p_loss = std::min(1.0, p_loss * options.full_interval_loss_factor);
  if (rng.bernoulli(p_loss)) site.lose();
  return {m, site};
}

/// Everything a sequential array readout depends on besides the register.
struct ArrayReadoutConfig {
  ProbeConfig probe{};
  MeasurementErrorTable table = MeasurementErrorTable::defaults();
  PhotonModel photon{};
  HidingModel hiding{};
  ReadoutOptions options{};
  double hiding_power_mW = 2.0;
  bool adaptive_rounds = false;
  /// Unprobed intervals appended to the readout; bright atoms depump at the background floor.
  int idle_intervals = 0;
};

struct ArrayReadout {
  /// Measured sites in measurement order.
  std::vector<std::pair<std::size_t, SiteMeasurement>> measurements;
  Register reg;
};

/**
 * Reads out `order` one site at a time. While a target is probed, every other
 * bright atom is hidden and depumps to F1 with the hidden per-interval
 * probability. With adaptive rounds, sites flagged in `previous_vacant` are
 * skipped and cost no interval.
 */
inline ArrayReadout sequential_array_readout(Register reg, std::span<const std::size_t> order,
                                             const ArrayReadoutConfig& cfg,
                                             const std::vector<bool>& previous_vacant,
                                             RandomStream& rng) {
  std::vector<bool> seen(reg.size(), false);
  for (std::size_t idx : order) {
    require(idx < reg.size(), "readout order has out-of-range site " + std::to_string(idx));
    require(!seen[idx], "readout order repeats site " + std::to_string(idx));
    seen[idx] = true;
  }
  require(previous_vacant.empty() || previous_vacant.size() == reg.size(),
          "previous_vacant must be empty or match the register size");
  require(cfg.idle_intervals >= 0, "idle_intervals must be non-negative");
  const double p_hidden = hidden_depump_probability(cfg.hiding, cfg.hiding_power_mW);

  ArrayReadout out{{}, std::move(reg)};
  for (std::size_t target : order) {
    if (cfg.adaptive_rounds && !previous_vacant.empty() && previous_vacant[target]) continue;
    for (std::size_t j = 0; j < out.reg.size(); ++j) {
      if (j == target || !out.reg[j].is_bright()) continue;
      if (rng.bernoulli(p_hidden)) out.reg[j].set_hyperfine(HyperfineState::F1);
    }
    auto [m, after] = measure_site(out.reg[target], cfg.probe, cfg.table, cfg.photon,
                                   cfg.options, rng);
    out.reg[target] = after;
    out.measurements.emplace_back(target, m);
  }
  for (int k = 0; k < cfg.idle_intervals; ++k) {
    for (auto& s : out.reg.sites())
      if (s.is_bright() && rng.bernoulli(cfg.hiding.background_floor))
        s.set_hyperfine(HyperfineState::F1);
  }
  return out;
}

}  // namespace atomreg
