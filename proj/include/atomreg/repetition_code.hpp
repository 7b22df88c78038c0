#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atomreg/error.hpp"
#include "atomreg/parallel.hpp"
#include "atomreg/random.hpp"
#include "atomreg/readout.hpp"
#include "atomreg/register.hpp"
#include "atomreg/stats.hpp"

namespace atomreg {

enum class SimulationMode {
  Abstract,     // per-round flip and loss probabilities, perfect readout
  FullPhysics,  // idling errors plus sequential cavity readout
};

struct CodeConfig {
  int distance = 3;
  int rounds = 17;
  double idle_ms = 20.0;
  double per_round_flip = 0.09;
  double per_round_loss = 0.037;
  /// Wall-clock cost of reading out one present atom (two 200 us intervals).
  double measurement_ms_per_site = 0.4;
  SimulationMode mode = SimulationMode::Abstract;

  void validate() const {
    require(distance >= 1 && distance % 2 == 1, "code distance must be odd and >= 1");
    require(rounds >= 1, "rounds must be >= 1");
    require(idle_ms >= 0.0, "idle_ms must be non-negative");
    require(per_round_flip >= 0.0 && per_round_flip <= 1.0, "per_round_flip must lie in [0, 1]");
    require(per_round_loss >= 0.0 && per_round_loss <= 1.0, "per_round_loss must lie in [0, 1]");
    require(measurement_ms_per_site >= 0.0, "measurement_ms_per_site must be non-negative");
  }
};

/// Models used only by SimulationMode::FullPhysics.
struct PhysicsDeps {
  IdleErrorModel idle{};
  ArrayReadoutConfig readout{};
};

enum class CodeVote { F1, F2, Lost };
enum class VoteOutcome { Zero, One, CoinToss };

struct RoundRecord {
  int round_index = 0;
  std::vector<CodeVote> votes;
  int survivors = 0;
  VoteOutcome vote_outcome = VoteOutcome::CoinToss;
  int logical_before = 0;
  int logical_after = 0;
  /// Wall-clock time at the end of the round, from encoding.
  double time_ms = 0.0;

  bool round_error() const { return logical_after != logical_before; }
};

/// A logical bit held in `code_sites` of a register.
struct CodeBlock {
  Register reg;
  std::vector<std::size_t> code_sites;
  int encoded_bit = 0;
  int logical = 0;
  double time_ms = 0.0;
  int rounds_done = 0;
};

inline HyperfineState state_for_bit(int bit) {
  return bit ? HyperfineState::F2 : HyperfineState::F1;
}

/// Prepares the first `d` occupied sites in F1 (bit 0) or F2 (bit 1). Returns nullopt on a load failure.
inline std::optional<CodeBlock> encode(Register reg, int bit, int d) {
  require(bit == 0 || bit == 1, "encode: bit must be 0 or 1");
  require(d >= 1, "encode: distance must be >= 1");
  const auto occupied = reg.occupied_indices();
  if (occupied.size() < static_cast<std::size_t>(d)) return std::nullopt;
  CodeBlock block{std::move(reg), {occupied.begin(), occupied.begin() + d}, bit, bit, 0.0, 0};
  for (std::size_t i : block.code_sites) block.reg[i].set_hyperfine(state_for_bit(bit));
  return block;
}

inline VoteOutcome majority(std::span<const CodeVote> votes, int& logical_out, RandomStream& rng) {
  int ones = 0, zeros = 0;
  for (auto v : votes) {
    ones += v == CodeVote::F2;
    zeros += v == CodeVote::F1;
  }
  if (ones > zeros) {
    logical_out = 1;
    return VoteOutcome::One;
  }
  if (zeros > ones) {
    logical_out = 0;
    return VoteOutcome::Zero;
  }
  logical_out = rng.bernoulli(0.5) ? 1 : 0;
  return VoteOutcome::CoinToss;
}

/**
 * One error-correction round: idle errors, sequential readout of the code
 * atoms, majority vote over survivors (coin toss on a tie or an empty
 * register), then re-initialization of every surviving atom to the vote.
 */
inline RoundRecord run_round(CodeBlock& block, const CodeConfig& config, const PhysicsDeps& deps,
                             RandomStream& rng) {
  RoundRecord rec;
  rec.round_index = block.rounds_done;
  rec.logical_before = block.logical;

  int present_at_start = 0;
  for (std::size_t i : block.code_sites) present_at_start += block.reg[i].is_occupied();

  rec.votes.reserve(block.code_sites.size());
  if (config.mode == SimulationMode::Abstract) {
    for (std::size_t i : block.code_sites) {
      SiteState& s = block.reg[i];
      if (s.is_occupied()) {
        if (rng.bernoulli(config.per_round_flip)) s.set_hyperfine(flipped(s.hyperfine()));
        if (rng.bernoulli(config.per_round_loss)) s.lose();
      }
      rec.votes.push_back(s.is_vacant() ? CodeVote::Lost
                          : s.hyperfine() == HyperfineState::F2 ? CodeVote::F2
                                                                 : CodeVote::F1);
    }
  } else {
    block.reg = idle(std::move(block.reg), config.idle_ms, deps.idle, rng);
    auto readout = sequential_array_readout(std::move(block.reg), block.code_sites, deps.readout,
                                            {}, rng);
    block.reg = std::move(readout.reg);
    for (const auto& [site, m] : readout.measurements) {
      rec.votes.push_back(m.inferred == InferredState::Vacant ? CodeVote::Lost
                          : m.inferred == InferredState::F2   ? CodeVote::F2
                                                              : CodeVote::F1);
    }
  }
  rec.survivors = static_cast<int>(
      std::count_if(rec.votes.begin(), rec.votes.end(), [](CodeVote v) { return v != CodeVote::Lost; }));

  int logical = 0;
  rec.vote_outcome = majority(rec.votes, logical, rng);
  rec.logical_after = logical;
  block.logical = logical;
  for (std::size_t i : block.code_sites) block.reg[i].set_hyperfine(state_for_bit(logical));

  block.time_ms += config.idle_ms + present_at_start * config.measurement_ms_per_site;
  rec.time_ms = block.time_ms;
  ++block.rounds_done;
  return rec;
}

/// Per-round history of one trial.
struct LogicalTrace {
  std::vector<bool> logical_error;  // vote differs from the encoded bit
  std::vector<int> survivors;
  std::vector<double> time_ms;
};

/// Encodes a random bit on a fully loaded register of `distance` sites and runs every round.
inline std::pair<LogicalTrace, std::vector<RoundRecord>> run_code_trial(const CodeConfig& config,
                                                                        const PhysicsDeps& deps,
                                                                        RandomStream& rng) {
  const int bit = rng.bernoulli(0.5) ? 1 : 0;
  auto block = encode(prepare_uniform(Register(static_cast<std::size_t>(config.distance)),
                                      HyperfineState::F1),
                      bit, config.distance);
  LogicalTrace trace;
  std::vector<RoundRecord> records;
  records.reserve(static_cast<std::size_t>(config.rounds));
  for (int r = 0; r < config.rounds; ++r) {
    auto rec = run_round(*block, config, deps, rng);
    trace.logical_error.push_back(rec.logical_after != bit);
    trace.survivors.push_back(rec.survivors);
    trace.time_ms.push_back(rec.time_ms);
    records.push_back(std::move(rec));
  }
  return {std::move(trace), std::move(records)};
}

enum class PostSelect {
  PerRound,  // keep rounds whose survivor count equals the distance
  None,      // keep every round
};

struct LogicalErrorRow {
  double p_phys = 0.0;
  int distance = 1;
  int survivors = -1;  // -1 when not post-selected
  Estimate p_logical;
  /// Estimate too noisy (relative error >= 10%) or no error events observed.
  bool flagged = false;
};

/**
 * Per-round logical error probability (vote differs from the logical state
 * entering the round) against the configured physical flip probability.
 */
inline std::vector<LogicalErrorRow> logical_error_curve(const CodeConfig& base,
                                                        std::span<const double> flips,
                                                        std::span<const int> distances,
                                                        PostSelect post_select,
                                                        std::uint64_t n_trials, std::uint64_t seed,
                                                        unsigned threads = 1,
                                                        const PhysicsDeps& deps = {}) {
  require(n_trials >= 2, "logical_error_curve: need at least 2 trials");
  std::vector<LogicalErrorRow> rows;
  std::uint64_t cell = 0;
  for (int d : distances) {
    for (double p : flips) {
      CodeConfig cfg = base;
      cfg.distance = d;
      cfg.per_round_flip = p;
      cfg.validate();
      const Proportion acc = run_trials(
          n_trials, threads, Proportion{},
          [&](std::uint64_t i, Proportion& a) {
            auto rng = RandomStream::for_trial(seed, cell, i);
            const auto [trace, records] = run_code_trial(cfg, deps, rng);
            for (const auto& rec : records) {
              if (post_select == PostSelect::PerRound && rec.survivors != d) continue;
              a.add(rec.round_error());
            }
          },
          [](Proportion& into, const Proportion& from) { into.merge(from); });
      LogicalErrorRow row;
      row.p_phys = p;
      row.distance = d;
      row.survivors = post_select == PostSelect::PerRound ? d : -1;
      row.p_logical = acc.estimate();
      row.flagged = acc.successes == 0 || !(row.p_logical.relative_error() < 0.10);
      rows.push_back(row);
      ++cell;
    }
  }
  return rows;
}

/// Power-law exponent of p_logical against p_phys. Needs >= 4 points spanning a decade.
inline LinearFit fit_error_exponent(std::span<const LogicalErrorRow> rows) {
  require(rows.size() >= 4, "fit_error_exponent: need at least 4 sweep points");
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    xs.push_back(r.p_phys);
    ys.push_back(r.p_logical.mean);
  }
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  require(*lo > 0.0 && *hi / *lo >= 10.0 - 1e-9,
          "fit_error_exponent: sweep must span at least a decade in p_phys");
  return fit_power_law(xs, ys);
}

/// Error probability against time, averaged over trials.
struct ErrorTimeCurve {
  std::vector<double> t_ms;
  std::vector<Estimate> p_err;
  std::vector<double> survivor_mean;
};

/**
 * Logical error probability after each round relative to the encoded bit.
 * The first point is t = 0 with no error. Rounds use the mean wall-clock
 * time across trials.
 */
inline ErrorTimeCurve logical_error_vs_time(const CodeConfig& config, std::uint64_t n_trials,
                                            std::uint64_t seed, std::uint64_t cell,
                                            unsigned threads = 1, const PhysicsDeps& deps = {}) {
  config.validate();
  require(n_trials >= 2, "logical_error_vs_time: need at least 2 trials");
  const auto R = static_cast<std::size_t>(config.rounds);
  struct Acc {
    std::vector<Proportion> err;
    std::vector<RunningStats> survivors, time;
  };
  Acc init{std::vector<Proportion>(R), std::vector<RunningStats>(R), std::vector<RunningStats>(R)};
  const Acc acc = run_trials(
      n_trials, threads, init,
      [&](std::uint64_t i, Acc& a) {
        auto rng = RandomStream::for_trial(seed, cell, i);
        const auto [trace, records] = run_code_trial(config, deps, rng);
        for (std::size_t r = 0; r < R; ++r) {
          a.err[r].add(trace.logical_error[r]);
          a.survivors[r].add(trace.survivors[r]);
          a.time[r].add(trace.time_ms[r]);
        }
      },
      [R](Acc& into, const Acc& from) {
        for (std::size_t r = 0; r < R; ++r) {
          into.err[r].merge(from.err[r]);
          into.survivors[r].merge(from.survivors[r]);
          into.time[r].merge(from.time[r]);
        }
      });

  ErrorTimeCurve curve;
  curve.t_ms.push_back(0.0);
  curve.p_err.push_back({0.0, 0.0, n_trials});
  curve.survivor_mean.push_back(config.distance);
  for (std::size_t r = 0; r < R; ++r) {
    curve.t_ms.push_back(acc.time[r].estimate().mean);
    curve.p_err.push_back(acc.err[r].estimate());
    curve.survivor_mean.push_back(acc.survivors[r].estimate().mean);
  }
  return curve;
}

/// An idling physical bit read out at `times_ms`; a lost atom reads as a coin toss.
inline ErrorTimeCurve physical_idle_error_vs_time(const IdleErrorModel& model,
                                                  std::span<const double> times_ms,
                                                  std::uint64_t n_trials, std::uint64_t seed,
                                                  std::uint64_t cell, unsigned threads = 1) {
  model.validate();
  require(n_trials >= 2, "physical_idle_error_vs_time: need at least 2 trials");
  require(std::is_sorted(times_ms.begin(), times_ms.end()) &&
              (times_ms.empty() || times_ms.front() >= 0.0),
          "physical_idle_error_vs_time: times must be sorted and non-negative");
  const std::size_t T = times_ms.size();
  const Proportion zero{};
  const auto acc = run_trials(
      n_trials, threads, std::vector<Proportion>(T, zero),
      [&](std::uint64_t i, std::vector<Proportion>& a) {
        auto rng = RandomStream::for_trial(seed, cell, i);
        const int bit = rng.bernoulli(0.5) ? 1 : 0;
        Register reg = prepare_uniform(Register(1), state_for_bit(bit));
        double now = 0.0;
        for (std::size_t k = 0; k < T; ++k) {
          reg = idle(std::move(reg), times_ms[k] - now, model, rng);
          now = times_ms[k];
          const int read = reg[0].is_occupied() ? (reg[0].is_bright() ? 1 : 0)
                                                : (rng.bernoulli(0.5) ? 1 : 0);
          a[k].add(read != bit);
        }
      },
      [T](std::vector<Proportion>& into, const std::vector<Proportion>& from) {
        for (std::size_t k = 0; k < T; ++k) into[k].merge(from[k]);
      });
  ErrorTimeCurve curve;
  for (std::size_t k = 0; k < T; ++k) {
    curve.t_ms.push_back(times_ms[k]);
    curve.p_err.push_back(acc[k].estimate());
    curve.survivor_mean.push_back(NAN);
  }
  return curve;
}

enum class LifetimeDefinition {
  FittedTau,              // tau of p_inf * (1 - exp(-t / tau))
  CrossingOneMinusInvE,   // first time p_err reaches p_inf * (1 - 1/e)
  CrossingInvE,           // first time p_err reaches p_inf / e
};

struct LifetimeEstimate {
  double tau_ms = NAN;
  double tau_std_error = NAN;
  double p_inf = NAN;
  double crossing_one_minus_inv_e_ms = NAN;
  double crossing_inv_e_ms = NAN;
  /// The free plateau was unidentifiable and p_inf was pinned to the asymptote.
  bool plateau_pinned = false;
  bool low_confidence = false;
  std::string diagnostic;

  double value(LifetimeDefinition def) const {
    switch (def) {
      case LifetimeDefinition::FittedTau: return tau_ms;
      case LifetimeDefinition::CrossingOneMinusInvE: return crossing_one_minus_inv_e_ms;
      case LifetimeDefinition::CrossingInvE: return crossing_inv_e_ms;
    }
    return NAN;
  }
};

namespace detail {

inline double first_crossing(std::span<const double> ts, std::span<const double> ps, double level) {
  for (std::size_t i = 1; i < ts.size(); ++i) {
    if (ps[i] >= level && ps[i - 1] < level)
      return ts[i - 1] + (level - ps[i - 1]) * (ts[i] - ts[i - 1]) / (ps[i] - ps[i - 1]);
  }
  return NAN;
}

}  // namespace detail

/**
 * Lifetime of a bit from its error-vs-time curve. The plateau is fitted
 * freely; if the data show no plateau the fit is repeated with the plateau
 * pinned to `asymptote` (1/2 for a bit that ends in a coin toss) and the
 * estimate is marked low-confidence. Both crossing-time readings of the
 * "1/e" definition are reported.
 */
inline LifetimeEstimate logical_lifetime(std::span<const double> ts, std::span<const double> ps,
                                         double asymptote = 0.5) {
  LifetimeEstimate est;
  SaturatingFit fit = fit_saturating_exponential(ts, ps);
  if (!fit.converged) {
    est.diagnostic = fit.diagnostic;
    est.low_confidence = true;
    const double max_p = *std::max_element(ps.begin(), ps.end());
    if (max_p > 0.0) {
      fit = fit_saturating_exponential(ts, ps, asymptote);
      est.plateau_pinned = true;
      if (!fit.converged) est.diagnostic += "; pinned fit also failed: " + fit.diagnostic;
    }
  }
  est.tau_ms = fit.tau;
  est.tau_std_error = fit.tau_std_error;
  est.p_inf = fit.p_inf;
  if (std::isfinite(est.p_inf) && est.p_inf > 0.0) {
    est.crossing_one_minus_inv_e_ms =
        detail::first_crossing(ts, ps, est.p_inf * (1.0 - std::exp(-1.0)));
    est.crossing_inv_e_ms = detail::first_crossing(ts, ps, est.p_inf * std::exp(-1.0));
  }
  return est;
}

inline LifetimeEstimate logical_lifetime(const ErrorTimeCurve& curve, double asymptote = 0.5) {
  std::vector<double> ps;
  for (const auto& e : curve.p_err) ps.push_back(e.mean);
  return logical_lifetime(curve.t_ms, ps, asymptote);
}

}  // namespace atomreg
