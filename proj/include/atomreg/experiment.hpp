#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "atomreg/csv.hpp"
#include "atomreg/error.hpp"
#include "atomreg/parallel.hpp"
#include "atomreg/photon.hpp"
#include "atomreg/readout.hpp"
#include "atomreg/register.hpp"
#include "atomreg/repetition_code.hpp"
#include "atomreg/search.hpp"
#include "atomreg/stats.hpp"

namespace atomreg {

enum class ExperimentKind { Histogram, DepumpScaling, SearchCost, ErrorScaling, LogicalLifetime };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Histogram: return "histogram";
    case ExperimentKind::DepumpScaling: return "depump-scaling";
    case ExperimentKind::SearchCost: return "search-cost";
    case ExperimentKind::ErrorScaling: return "error-scaling";
    case ExperimentKind::LogicalLifetime: return "lifetime";
  }
  return "unknown";
}

inline ExperimentKind parse_experiment(const std::string& name) {
  for (auto k : {ExperimentKind::Histogram, ExperimentKind::DepumpScaling, ExperimentKind::SearchCost,
                 ExperimentKind::ErrorScaling, ExperimentKind::LogicalLifetime})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown experiment '" + name + "'");
}

struct HistogramParams {
  std::uint64_t trials = 100000;
};

struct DepumpScalingParams {
  std::uint64_t trials = 20000;
  std::vector<int> n_sites{10};
  std::vector<double> hiding_power_mW{0.0, 0.4, 2.0};
  bool adaptive_rounds = true;
  int rounds_per_trial = 1;
};

struct SearchCostParams {
  std::uint64_t trials = 10000;
  std::vector<int> n_values{2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> p_values{0.0, 0.1, 0.3, 0.5, 1.0};
  std::vector<SearchStrategy> strategies{SearchStrategy::DeterministicSequential,
                                         SearchStrategy::GlobalCheckThenSequential,
                                         SearchStrategy::PartitionedBinary};
  Placement placement = Placement::AtMostOneBright;
  CheckNoise noise{};
};

struct ErrorScalingParams {
  std::uint64_t trials = 1000000;
  std::vector<double> flip_values{0.015, 0.0219, 0.0322, 0.0472, 0.0693, 0.1018, 0.15};
  std::vector<int> distances{1, 3, 5};
  PostSelect post_select = PostSelect::PerRound;
  CodeConfig code{};
  double hiding_power_mW = 2.0;  // full-physics mode only
};

struct LifetimeParams {
  std::uint64_t trials = 100000;
  std::vector<int> distances{1, 3, 5};
  CodeConfig code{};
  double hiding_power_mW = 2.0;  // full-physics mode only
};

/// Every tunable of the simulator, with the calibrated defaults.
struct Config {
  double spacing_um = Register::kDefaultSpacingUm;
  IdleErrorModel idle{};
  CavityParams cavity{};
  PhotonModel photon{};
  ProbeConfig probe{};
  MeasurementErrorTable table = MeasurementErrorTable::defaults();
  HidingModel hiding{};
  ReadoutOptions readout{};
  int idle_intervals = 0;

  HistogramParams histogram{};
  DepumpScalingParams depump{};
  SearchCostParams search{};
  ErrorScalingParams error_scaling{};
  LifetimeParams lifetime{};

  void validate() const {
    require(spacing_um > 0.0, "spacing_um must be positive");
    idle.validate();
    cavity.validate();
    photon.validate();
    probe.validate();
    hiding.validate();
    table.lookup(probe);
    error_scaling.code.validate();
    lifetime.code.validate();
  }

  ArrayReadoutConfig array_readout(double hiding_power_mW, bool adaptive_rounds) const {
    ArrayReadoutConfig c;
    c.probe = probe;
    c.table = table;
    c.photon = photon;
    c.hiding = hiding;
    c.options = readout;
    c.hiding_power_mW = hiding_power_mW;
    c.adaptive_rounds = adaptive_rounds;
    c.idle_intervals = idle_intervals;
    return c;
  }

  PhysicsDeps physics(double hiding_power_mW) const {
    return {idle, array_readout(hiding_power_mW, true)};
  }
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Histogram;
  Config config{};
  std::uint64_t trials = 0;  // 0: use the experiment's configured trial count
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
};

struct ExperimentResult {
  Table table;
  nlohmann::ordered_json summary;
};

namespace detail {

inline std::uint64_t trials_for(const ExperimentSpec& spec, std::uint64_t configured) {
  const std::uint64_t n = spec.trials ? spec.trials : configured;
  require(n >= 1, "trials must be >= 1");
  return n;
}

inline nlohmann::ordered_json to_json(const Estimate& e) {
  return {{"mean", e.mean}, {"stderr", e.std_error}, {"n", e.n}};
}

inline ExperimentResult run_histogram(const ExperimentSpec& spec) {
  const Config& cfg = spec.config;
  const std::uint64_t n = trials_for(spec, cfg.histogram.trials);
  struct Condition {
    const char* name;
    bool bright;
    bool adaptive;
  };
  const Condition conditions[] = {
      {"bright_full", true, false}, {"bright_adaptive", true, true}, {"dark_full", false, false}};

  ExperimentResult res;
  res.table.columns = {"counts", "frequency", "condition"};
  std::uint64_t cell = 0;
  for (const auto& c : conditions) {
    using Hist = std::map<std::int64_t, std::uint64_t>;
    struct Acc {
      Hist hist;
      RunningStats counts, duration;
    };
    const Acc acc = run_trials(
        n, spec.threads, Acc{},
        [&](std::uint64_t i, Acc& a) {
          auto rng = RandomStream::for_trial(spec.master_seed, cell, i);
          const auto o = c.adaptive ? sample_adaptive_interval(c.bright, cfg.photon, rng)
                                    : sample_full_interval(c.bright, cfg.photon, rng);
          ++a.hist[o.counts];
          a.counts.add(static_cast<double>(o.counts));
          a.duration.add(o.duration_us);
        },
        [](Acc& into, const Acc& from) {
          for (const auto& [k, v] : from.hist) into.hist[k] += v;
          into.counts.merge(from.counts);
          into.duration.merge(from.duration);
        });
    const std::int64_t max_k = acc.hist.empty() ? 0 : acc.hist.rbegin()->first;
    std::int64_t mode = 0;
    std::uint64_t mode_n = 0;
    for (std::int64_t k = 0; k <= max_k; ++k) {
      const auto it = acc.hist.find(k);
      const std::uint64_t hits = it == acc.hist.end() ? 0 : it->second;
      if (hits > mode_n) {
        mode_n = hits;
        mode = k;
      }
      res.table.add_row(k, static_cast<double>(hits) / static_cast<double>(n), std::string(c.name));
    }
    res.summary[c.name] = {{"mean_counts", to_json(acc.counts.estimate())},
                           {"mean_duration_us", to_json(acc.duration.estimate())},
                           {"mode", mode}};
    ++cell;
  }
  res.summary["threshold"] = cfg.photon.threshold;
  res.summary["photon_reduction_factor"] =
      res.summary["bright_full"]["mean_counts"]["mean"].get<double>() /
      res.summary["bright_adaptive"]["mean_counts"]["mean"].get<double>();
  return res;
}

inline ExperimentResult run_depump_scaling(const ExperimentSpec& spec) {
  const Config& cfg = spec.config;
  const DepumpScalingParams& p = cfg.depump;
  const std::uint64_t n_trials = trials_for(spec, p.trials);
  require(p.rounds_per_trial >= 1, "rounds_per_trial must be >= 1");

  ExperimentResult res;
  res.table.columns = {"n_sites",    "site_index",      "error_rate",
                       "stderr",     "hiding_power_mW", "adaptive_rounds"};
  res.summary["fits"] = nlohmann::ordered_json::array();
  std::uint64_t cell = 0;
  for (double power : p.hiding_power_mW) {
    for (int n_sites : p.n_sites) {
      require(n_sites >= 1, "n_sites must be >= 1");
      const auto N = static_cast<std::size_t>(n_sites);
      const ArrayReadoutConfig rc = cfg.array_readout(power, p.adaptive_rounds);
      std::vector<std::size_t> order(N);
      for (std::size_t i = 0; i < N; ++i) order[i] = i;

      const auto acc = run_trials(
          n_trials, spec.threads, std::vector<Proportion>(N),
          [&](std::uint64_t i, std::vector<Proportion>& a) {
            auto rng = RandomStream::for_trial(spec.master_seed, cell, i);
            Register reg = prepare_uniform(Register(N, cfg.spacing_um), HyperfineState::F2);
            std::vector<bool> prev_vacant;
            for (int r = 0; r < p.rounds_per_trial; ++r) {
              for (auto& s : reg.sites()) s.set_hyperfine(HyperfineState::F2);
              auto out = sequential_array_readout(std::move(reg), order, rc, prev_vacant, rng);
              reg = std::move(out.reg);
              std::vector<bool> vacant = prev_vacant.empty() ? std::vector<bool>(N, false) : prev_vacant;
              for (const auto& [site, m] : out.measurements) {
                vacant[site] = m.inferred == InferredState::Vacant;
                if (m.inferred == InferredState::Vacant) continue;
                a[site].add(m.inferred == InferredState::F1);
              }
              prev_vacant = std::move(vacant);
            }
          },
          [N](std::vector<Proportion>& into, const std::vector<Proportion>& from) {
            for (std::size_t k = 0; k < N; ++k) into[k].merge(from[k]);
          });

      std::vector<double> xs, ys;
      for (std::size_t k = 0; k < N; ++k) {
        const Estimate e = acc[k].estimate();
        res.table.add_row(n_sites, static_cast<int>(k), e.mean, e.std_error, power,
                          p.adaptive_rounds);
        if (std::isfinite(e.mean)) {
          xs.push_back(static_cast<double>(k + 1));
          ys.push_back(e.mean);
        }
      }
      nlohmann::ordered_json fit_json = {{"n_sites", n_sites},
                                         {"hiding_power_mW", power},
                                         {"configured_rate_per_site",
                                          hidden_depump_probability(cfg.hiding, power)}};
      if (xs.size() >= 3) {
        const LinearFit f = fit_linear(xs, ys);
        fit_json["intercept"] = f.intercept;
        fit_json["intercept_stderr"] = f.intercept_std_error;
        fit_json["slope_per_site"] = f.slope;
        fit_json["slope_stderr"] = f.slope_std_error;
      }
      res.summary["fits"].push_back(fit_json);
      ++cell;
    }
  }
  return res;
}

inline ExperimentResult run_search_cost(const ExperimentSpec& spec) {
  const SearchCostParams& p = spec.config.search;
  const std::uint64_t n_trials = trials_for(spec, p.trials);
  const std::optional<CheckNoise> noise =
      (p.noise.false_positive > 0 || p.noise.false_negative > 0) ? std::optional(p.noise)
                                                                 : std::nullopt;
  ExperimentResult res;
  res.table.columns = {"n", "p", "strategy", "mean_intervals", "stderr", "analytic"};
  std::uint64_t incorrect = 0;
  std::uint64_t cell = 0;
  for (auto strategy : p.strategies) {
    for (int n : p.n_values) {
      for (double prob : p.p_values) {
        const SearchProblem problem{static_cast<std::size_t>(n), prob, p.placement};
        problem.validate();
        struct Acc {
          RunningStats intervals;
          std::uint64_t wrong = 0;
        };
        const Acc acc = run_trials(
            n_trials, spec.threads, Acc{},
            [&](std::uint64_t i, Acc& a) {
              auto rng = RandomStream::for_trial(spec.master_seed, cell, i);
              const Register reg = sample_search_register(problem, rng);
              const SearchResult r = run_search(reg, strategy, p.placement, noise, rng);
              a.intervals.add(static_cast<double>(r.intervals_used));
              std::vector<std::size_t> truth;
              for (std::size_t k = 0; k < reg.size(); ++k)
                if (reg[k].is_bright()) truth.push_back(k);
              a.wrong += truth != r.bright_sites;
            },
            [](Acc& into, const Acc& from) {
              into.intervals.merge(from.intervals);
              into.wrong += from.wrong;
            });
        const Estimate e = acc.intervals.estimate();
        const bool closed_form = strategy == SearchStrategy::DeterministicSequential ||
                                 p.placement == Placement::AtMostOneBright;
        res.table.add_row(n, prob, to_string(strategy), e.mean,
                          n_trials >= 2 ? e.std_error : NAN,
                          closed_form ? format_number(expected_cost(problem, strategy)) : "");
        incorrect += acc.wrong;
        ++cell;
      }
    }
  }
  res.summary["incorrect_searches"] = incorrect;
  return res;
}

inline ExperimentResult run_error_scaling(const ExperimentSpec& spec) {
  const Config& cfg = spec.config;
  const ErrorScalingParams& p = cfg.error_scaling;
  const std::uint64_t n_trials = trials_for(spec, p.trials);
  const auto rows = logical_error_curve(p.code, p.flip_values, p.distances, p.post_select,
                                        n_trials, spec.master_seed, spec.threads,
                                        cfg.physics(p.hiding_power_mW));
  ExperimentResult res;
  res.table.columns = {"p_phys", "d", "survivors", "p_logical", "stderr"};
  res.summary["flagged"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    res.table.add_row(r.p_phys, r.distance,
                      r.survivors >= 0 ? format_number(r.survivors) : std::string("all"),
                      r.p_logical.mean, r.p_logical.std_error);
    if (r.flagged)
      res.summary["flagged"].push_back({{"p_phys", r.p_phys}, {"d", r.distance}});
  }
  res.summary["exponents"] = nlohmann::ordered_json::array();
  for (int d : p.distances) {
    std::vector<LogicalErrorRow> usable;
    for (const auto& r : rows)
      if (r.distance == d && !r.flagged) usable.push_back(r);
    nlohmann::ordered_json e = {{"d", d}, {"theory", (d + 1) / 2.0}, {"points", usable.size()}};
    try {
      const LinearFit f = fit_error_exponent(usable);
      e["exponent"] = f.slope;
      e["exponent_stderr"] = f.slope_std_error;
    } catch (const ConfigError& err) {
      e["error"] = err.what();
    }
    res.summary["exponents"].push_back(e);
  }
  return res;
}

inline ExperimentResult run_lifetime(const ExperimentSpec& spec) {
  const Config& cfg = spec.config;
  const LifetimeParams& p = cfg.lifetime;
  const std::uint64_t n_trials = trials_for(spec, p.trials);
  const PhysicsDeps deps = cfg.physics(p.hiding_power_mW);
  ExperimentResult res;
  res.table.columns = {"t_ms", "d", "p_err", "stderr", "survivor_mean"};

  auto emit = [&](int d, const ErrorTimeCurve& c) {
    for (std::size_t k = 0; k < c.t_ms.size(); ++k)
      res.table.add_row(c.t_ms[k], d, c.p_err[k].mean, c.p_err[k].std_error,
                        std::isfinite(c.survivor_mean[k]) ? format_number(c.survivor_mean[k])
                                                          : std::string(""));
  };
  auto lifetime_json = [](const LifetimeEstimate& l) {
    return nlohmann::ordered_json{{"tau_ms", l.tau_ms},
                                  {"tau_stderr", l.tau_std_error},
                                  {"p_inf", l.p_inf},
                                  {"crossing_one_minus_inv_e_ms", l.crossing_one_minus_inv_e_ms},
                                  {"crossing_inv_e_ms", l.crossing_inv_e_ms},
                                  {"plateau_pinned", l.plateau_pinned},
                                  {"low_confidence", l.low_confidence},
                                  {"diagnostic", l.diagnostic}};
  };

  // Physical idling bit on the same round grid, reported as d = 0.
  std::vector<double> times;
  for (int r = 0; r <= p.code.rounds; ++r) times.push_back(r * p.code.idle_ms);
  const ErrorTimeCurve phys =
      physical_idle_error_vs_time(cfg.idle, times, n_trials, spec.master_seed, 0, spec.threads);
  emit(0, phys);
  const LifetimeEstimate phys_life = logical_lifetime(phys);
  res.summary["combined_idle_lifetime_ms"] = combined_idle_lifetime(cfg.idle);
  res.summary["physical"] = lifetime_json(phys_life);
  res.summary["logical"] = nlohmann::ordered_json::array();

  std::uint64_t cell = 1;
  for (int d : p.distances) {
    CodeConfig code = p.code;
    code.distance = d;
    const ErrorTimeCurve c =
        logical_error_vs_time(code, n_trials, spec.master_seed, cell++, spec.threads, deps);
    emit(d, c);
    const LifetimeEstimate life = logical_lifetime(c);
    auto j = lifetime_json(life);
    j["d"] = d;
    j["extension_factor"] = life.tau_ms / phys_life.tau_ms;
    res.summary["logical"].push_back(j);
  }
  return res;
}

}  // namespace detail

/// Runs one experiment. Output depends only on (spec.config, spec.trials, spec.master_seed).
inline ExperimentResult run(const ExperimentSpec& spec) {
  spec.config.validate();
  switch (spec.kind) {
    case ExperimentKind::Histogram: return detail::run_histogram(spec);
    case ExperimentKind::DepumpScaling: return detail::run_depump_scaling(spec);
    case ExperimentKind::SearchCost: return detail::run_search_cost(spec);
    case ExperimentKind::ErrorScaling: return detail::run_error_scaling(spec);
    case ExperimentKind::LogicalLifetime: return detail::run_lifetime(spec);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace atomreg
