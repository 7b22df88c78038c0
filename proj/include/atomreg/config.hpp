#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "atomreg/csv.hpp"
#include "atomreg/error.hpp"
#include "atomreg/experiment.hpp"

namespace atomreg {

/**
 * Flat `key = value` document with `[section]` headers and `#` comments.
 *
 * Parsing is fail-closed: every key must be known and, when a file is
 * loaded, every known key must be present. Diagnostics carry the line
 * number and the offending key.
 */
struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

namespace config_detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string where(const ConfigEntry& e) {
  return "line " + std::to_string(e.line) + ": [" + e.section + "] " + e.key;
}

inline double to_double(const ConfigEntry& e, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(where(e) + ": expected a number, got '" + std::string(text) + "'");
  return v;
}

inline double to_double(const ConfigEntry& e) { return to_double(e, e.value); }

inline long long to_integer(const ConfigEntry& e, std::string_view text) {
  text = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(where(e) + ": expected an integer, got '" + std::string(text) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline void check(const ConfigEntry& e, bool ok, const std::string& what) {
  if (!ok) throw ConfigError(where(e) + ": " + what);
}

inline double number(const ConfigEntry& e, double lo, double hi, bool lo_open = false) {
  const double v = to_double(e);
  const bool above = lo_open ? v > lo : v >= lo;
  check(e, above && v <= hi,
        "value " + format_number(v) + " outside " + (lo_open ? "(" : "[") + format_number(lo) +
            ", " + format_number(hi) + "]");
  return v;
}

inline double positive(const ConfigEntry& e) { return number(e, 0.0, INFINITY, true); }
inline double non_negative(const ConfigEntry& e) { return number(e, 0.0, INFINITY); }
inline double probability(const ConfigEntry& e) { return number(e, 0.0, 1.0); }

inline long long integer(const ConfigEntry& e, long long lo, long long hi) {
  const long long v = to_integer(e, e.value);
  check(e, v >= lo && v <= hi,
        "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
            std::to_string(hi) + "]");
  return v;
}

inline bool boolean(const ConfigEntry& e) {
  const auto v = trim(e.value);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(where(e) + ": expected true or false, got '" + std::string(v) + "'");
}

inline std::vector<double> number_list(const ConfigEntry& e, double lo, double hi) {
  std::vector<double> out;
  for (auto item : split(e.value, ',')) {
    const double v = to_double(e, item);
    check(e, v >= lo && v <= hi, "list entry " + format_number(v) + " out of range");
    out.push_back(v);
  }
  check(e, !out.empty(), "list must not be empty");
  return out;
}

inline std::vector<int> int_list(const ConfigEntry& e, long long lo, long long hi) {
  std::vector<int> out;
  for (auto item : split(e.value, ',')) {
    const long long v = to_integer(e, item);
    check(e, v >= lo && v <= hi, "list entry " + std::to_string(v) + " out of range");
    out.push_back(static_cast<int>(v));
  }
  check(e, !out.empty(), "list must not be empty");
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_same_v<T, std::string>)
      out += xs[i];
    else
      out += format_number(xs[i]);
  }
  return out;
}

inline std::string format_bool(bool b) { return b ? "true" : "false"; }

inline SearchStrategy parse_strategy(const ConfigEntry& e, std::string_view s) {
  for (auto k : {SearchStrategy::DeterministicSequential, SearchStrategy::GlobalCheckThenSequential,
                 SearchStrategy::PartitionedBinary})
    if (to_string(k) == s) return k;
  throw ConfigError(where(e) + ": unknown strategy '" + std::string(s) + "'");
}

inline std::string placement_name(Placement p) {
  return p == Placement::AtMostOneBright ? "at_most_one_bright" : "independent_per_site";
}

inline std::string mode_name(SimulationMode m) {
  return m == SimulationMode::Abstract ? "abstract" : "full_physics";
}

inline SimulationMode parse_mode(const ConfigEntry& e) {
  const auto v = trim(e.value);
  if (v == "abstract") return SimulationMode::Abstract;
  if (v == "full_physics") return SimulationMode::FullPhysics;
  throw ConfigError(where(e) + ": expected abstract or full_physics");
}

}  // namespace config_detail

/// One documented key of the configuration file.
struct ConfigKey {
  std::string section;
  std::string key;
  std::string help;
  std::function<void(Config&, const ConfigEntry&)> set;
  std::function<std::string(const Config&)> get;
};

/// The complete key schema, in file order.
inline const std::vector<ConfigKey>& config_schema() {
  using namespace config_detail;
  using E = const ConfigEntry&;
  static const std::vector<ConfigKey> schema = {
      {"register", "spacing_um", "tweezer spacing (um)",
       [](Config& c, E e) { c.spacing_um = positive(e); },
       [](const Config& c) { return format_number(c.spacing_um); }},
      {"register", "tau_depump_ms", "idle depump/repump relaxation time (ms)",
       [](Config& c, E e) { c.idle.tau_depump_ms = positive(e); },
       [](const Config& c) { return format_number(c.idle.tau_depump_ms); }},
      {"register", "tau_vacuum_ms", "vacuum-limited trap lifetime (ms)",
       [](Config& c, E e) { c.idle.tau_vacuum_ms = positive(e); },
       [](const Config& c) { return format_number(c.idle.tau_vacuum_ms); }},

      {"cavity", "g0_MHz", "single-photon coupling g0 / 2pi (MHz); 2 g0 = 1.1",
       [](Config& c, E e) { c.cavity.g0_MHz = non_negative(e); },
       [](const Config& c) { return format_number(c.cavity.g0_MHz); }},
      {"cavity", "kappa_MHz", "cavity linewidth kappa / 2pi (MHz)",
       [](Config& c, E e) { c.cavity.kappa_MHz = positive(e); },
       [](const Config& c) { return format_number(c.cavity.kappa_MHz); }},
      {"cavity", "gamma_MHz", "atomic linewidth Gamma / 2pi (MHz)",
       [](Config& c, E e) { c.cavity.gamma_MHz = positive(e); },
       [](const Config& c) { return format_number(c.cavity.gamma_MHz); }},
      {"cavity", "finesse", "cavity finesse (metadata)",
       [](Config& c, E e) { c.cavity.finesse = positive(e); },
       [](const Config& c) { return format_number(c.cavity.finesse); }},
      {"cavity", "waist_um", "cavity mode waist (um, metadata)",
       [](Config& c, E e) { c.cavity.waist_um = positive(e); },
       [](const Config& c) { return format_number(c.cavity.waist_um); }},

      {"detector", "dark_rate_per_s", "dark count rate per detector (1/s)",
       [](Config& c, E e) { c.photon.detector.dark_rate_per_s = non_negative(e); },
       [](const Config& c) { return format_number(c.photon.detector.dark_rate_per_s); }},
      {"detector", "n_detectors", "number of single-photon detectors summed",
       [](Config& c, E e) { c.photon.detector.n_detectors = static_cast<int>(integer(e, 1, 64)); },
       [](const Config& c) { return format_number(c.photon.detector.n_detectors); }},
      {"detector", "quantum_efficiency", "total detection efficiency, (0, 1]",
       [](Config& c, E e) { c.photon.detector.quantum_efficiency = number(e, 0.0, 1.0, true); },
       [](const Config& c) { return format_number(c.photon.detector.quantum_efficiency); }},

      {"photon", "bright_mean_full_photons", "mean detected photons from F=2 per full interval",
       [](Config& c, E e) { c.photon.bright_mean_full = positive(e); },
       [](const Config& c) { return format_number(c.photon.bright_mean_full); }},
      {"photon", "full_interval_us", "full probe interval (us)",
       [](Config& c, E e) { c.photon.full_interval_us = positive(e); },
       [](const Config& c) { return format_number(c.photon.full_interval_us); }},
      {"photon", "sub_interval_us", "adaptive polling period (us); divides full_interval_us",
       [](Config& c, E e) { c.photon.sub_interval_us = positive(e); },
       [](const Config& c) { return format_number(c.photon.sub_interval_us); }},
      {"photon", "threshold_counts", "bright iff counts >= threshold",
       [](Config& c, E e) { c.photon.threshold = static_cast<int>(integer(e, 1, 1000000)); },
       [](const Config& c) { return format_number(c.photon.threshold); }},

      {"probe", "depth_mK", "tweezer depth U/kB (mK); selects the error-table row",
       [](Config& c, E e) { c.probe.depth_mK = positive(e); },
       [](const Config& c) { return format_number(c.probe.depth_mK); }},
      {"probe", "detuning_pa_MHz", "probe-atom detuning (MHz)",
       [](Config& c, E e) { c.probe.detuning_pa_MHz = to_double(e); },
       [](const Config& c) { return format_number(c.probe.detuning_pa_MHz); }},
      {"probe", "detuning_pc_MHz", "probe-cavity detuning (MHz); selects the error-table row",
       [](Config& c, E e) { c.probe.detuning_pc_MHz = to_double(e); },
       [](const Config& c) { return format_number(c.probe.detuning_pc_MHz); }},
      {"probe", "adaptive", "adaptive termination of probe intervals (true/false)",
       [](Config& c, E e) { c.readout.adaptive = boolean(e); },
       [](const Config& c) { return format_bool(c.readout.adaptive); }},
      {"probe", "full_interval_loss_factor", "bright-state loss multiplier without adaptive termination",
       [](Config& c, E e) { c.readout.full_interval_loss_factor = number(e, 1.0, INFINITY); },
       [](const Config& c) { return format_number(c.readout.full_interval_loss_factor); }},
      {"probe", "idle_intervals", "unprobed intervals appended to each array readout",
       [](Config& c, E e) { c.idle_intervals = static_cast<int>(integer(e, 0, 1000000)); },
       [](const Config& c) { return format_number(c.idle_intervals); }},

      {"hiding", "depump_per_interval_unhidden", "probe-induced depump probability per interval, no hiding",
       [](Config& c, E e) { c.hiding.depump_per_interval_unhidden = probability(e); },
       [](const Config& c) { return format_number(c.hiding.depump_per_interval_unhidden); }},
      {"hiding", "suppression_points_mW_factor", "power:factor calibration pairs, comma separated",
       [](Config& c, E e) {
         c.hiding.suppression_points.clear();
         for (auto item : split(e.value, ',')) {
           const auto pair = split(item, ':');
           check(e, pair.size() == 2, "expected power:factor pairs");
           const double power = to_double(e, pair[0]);
           const double factor = to_double(e, pair[1]);
           check(e, power >= 0.0 && factor >= 1.0, "need power >= 0 and factor >= 1");
           if (!c.hiding.suppression_points.empty())
             check(e, power > c.hiding.suppression_points.back().first &&
                          factor >= c.hiding.suppression_points.back().second,
                   "powers must increase and factors must not decrease");
           c.hiding.suppression_points.emplace_back(power, factor);
         }
       },
       [](const Config& c) {
         std::string s;
         for (const auto& [p, f] : c.hiding.suppression_points) {
           if (!s.empty()) s += ", ";
           s += format_number(p) + ":" + format_number(f);
         }
         return s;
       }},
      {"hiding", "background_floor_per_interval", "tweezer-induced depump probability per interval",
       [](Config& c, E e) { c.hiding.background_floor = probability(e); },
       [](const Config& c) { return format_number(c.hiding.background_floor); }},
      {"hiding", "beam_waist_um", "hiding beam waist (um)",
       [](Config& c, E e) { c.hiding.beam_waist_um = positive(e); },
       [](const Config& c) { return format_number(c.hiding.beam_waist_um); }},
      {"hiding", "shift_slope_MHz_per_uW", "excited-state light shift at beam center (MHz/uW)",
       [](Config& c, E e) { c.hiding.shift_slope_MHz_per_uW = non_negative(e); },
       [](const Config& c) { return format_number(c.hiding.shift_slope_MHz_per_uW); }},
      {"hiding", "residual_at_10um", "light shift at 10 um as a fraction of the center value",
       [](Config& c, E e) { c.hiding.residual_at_10um = number(e, 0.0, 1.0); },
       [](const Config& c) { return format_number(c.hiding.residual_at_10um); }},

      {"histogram", "trials", "samples per condition",
       [](Config& c, E e) { c.histogram.trials = static_cast<std::uint64_t>(integer(e, 1, 1LL << 40)); },
       [](const Config& c) { return format_number(c.histogram.trials); }},

      {"depump_scaling", "trials", "readout trials per (power, array size) cell",
       [](Config& c, E e) { c.depump.trials = static_cast<std::uint64_t>(integer(e, 1, 1LL << 40)); },
       [](const Config& c) { return format_number(c.depump.trials); }},
      {"depump_scaling", "n_sites", "array sizes, comma separated",
       [](Config& c, E e) { c.depump.n_sites = int_list(e, 1, 10000); },
       [](const Config& c) { return join(c.depump.n_sites); }},
      {"depump_scaling", "hiding_power_mW", "hiding powers per atom (mW), comma separated",
       [](Config& c, E e) { c.depump.hiding_power_mW = number_list(e, 0.0, INFINITY); },
       [](const Config& c) { return join(c.depump.hiding_power_mW); }},
      {"depump_scaling", "adaptive_rounds", "skip sites found vacant in the previous round",
       [](Config& c, E e) { c.depump.adaptive_rounds = boolean(e); },
       [](const Config& c) { return format_bool(c.depump.adaptive_rounds); }},
      {"depump_scaling", "rounds_per_trial", "sequential readout rounds per trial",
       [](Config& c, E e) { c.depump.rounds_per_trial = static_cast<int>(integer(e, 1, 100000)); },
       [](const Config& c) { return format_number(c.depump.rounds_per_trial); }},

      {"search_cost", "trials", "searches per (strategy, n, p) cell",
       [](Config& c, E e) { c.search.trials = static_cast<std::uint64_t>(integer(e, 1, 1LL << 40)); },
       [](const Config& c) { return format_number(c.search.trials); }},
      {"search_cost", "n_values", "register sizes, comma separated",
       [](Config& c, E e) { c.search.n_values = int_list(e, 1, 1000000); },
       [](const Config& c) { return join(c.search.n_values); }},
      {"search_cost", "p_values", "bright-atom probabilities, comma separated",
       [](Config& c, E e) { c.search.p_values = number_list(e, 0.0, 1.0); },
       [](const Config& c) { return join(c.search.p_values); }},
      {"search_cost", "strategies",
       "deterministic_sequential, global_check_then_sequential, partitioned_binary",
       [](Config& c, E e) {
         c.search.strategies.clear();
         for (auto s : split(e.value, ',')) c.search.strategies.push_back(parse_strategy(e, s));
       },
       [](const Config& c) {
         std::vector<std::string> names;
         for (auto s : c.search.strategies) names.push_back(to_string(s));
         return join(names);
       }},
      {"search_cost", "placement", "at_most_one_bright or independent_per_site",
       [](Config& c, E e) {
         const auto v = trim(e.value);
         if (v == "at_most_one_bright")
           c.search.placement = Placement::AtMostOneBright;
         else if (v == "independent_per_site")
           c.search.placement = Placement::IndependentPerSite;
         else
           throw ConfigError(where(e) + ": expected at_most_one_bright or independent_per_site");
       },
       [](const Config& c) { return placement_name(c.search.placement); }},
      {"search_cost", "false_positive", "group-check false-positive probability",
       [](Config& c, E e) { c.search.noise.false_positive = probability(e); },
       [](const Config& c) { return format_number(c.search.noise.false_positive); }},
      {"search_cost", "false_negative", "group-check false-negative probability",
       [](Config& c, E e) { c.search.noise.false_negative = probability(e); },
       [](const Config& c) { return format_number(c.search.noise.false_negative); }},

      {"error_scaling", "trials", "code trials per (p_phys, d) cell",
       [](Config& c, E e) { c.error_scaling.trials = static_cast<std::uint64_t>(integer(e, 1, 1LL << 40)); },
       [](const Config& c) { return format_number(c.error_scaling.trials); }},
      {"error_scaling", "flip_values", "per-round physical flip probabilities, comma separated",
       [](Config& c, E e) { c.error_scaling.flip_values = number_list(e, 0.0, 1.0); },
       [](const Config& c) { return join(c.error_scaling.flip_values); }},
      {"error_scaling", "distances", "odd code distances, comma separated",
       [](Config& c, E e) {
         c.error_scaling.distances = int_list(e, 1, 1001);
         for (int d : c.error_scaling.distances) check(e, d % 2 == 1, "distances must be odd");
       },
       [](const Config& c) { return join(c.error_scaling.distances); }},
      {"error_scaling", "per_round_loss", "per-round atom loss probability",
       [](Config& c, E e) { c.error_scaling.code.per_round_loss = probability(e); },
       [](const Config& c) { return format_number(c.error_scaling.code.per_round_loss); }},
      {"error_scaling", "rounds", "error-correction rounds per trial",
       [](Config& c, E e) { c.error_scaling.code.rounds = static_cast<int>(integer(e, 1, 100000)); },
       [](const Config& c) { return format_number(c.error_scaling.code.rounds); }},
      {"error_scaling", "idle_ms", "idling time per round (ms); full_physics mode",
       [](Config& c, E e) { c.error_scaling.code.idle_ms = non_negative(e); },
       [](const Config& c) { return format_number(c.error_scaling.code.idle_ms); }},
      {"error_scaling", "post_select", "per_round (survivors == d) or none",
       [](Config& c, E e) {
         const auto v = trim(e.value);
         if (v == "per_round")
           c.error_scaling.post_select = PostSelect::PerRound;
         else if (v == "none")
           c.error_scaling.post_select = PostSelect::None;
         else
           throw ConfigError(where(e) + ": expected per_round or none");
       },
       [](const Config& c) {
         return std::string(c.error_scaling.post_select == PostSelect::PerRound ? "per_round" : "none");
       }},
      {"error_scaling", "mode", "abstract or full_physics",
       [](Config& c, E e) { c.error_scaling.code.mode = parse_mode(e); },
       [](const Config& c) { return mode_name(c.error_scaling.code.mode); }},
      {"error_scaling", "hiding_power_mW", "hiding power per atom in full_physics mode (mW)",
       [](Config& c, E e) { c.error_scaling.hiding_power_mW = non_negative(e); },
       [](const Config& c) { return format_number(c.error_scaling.hiding_power_mW); }},

      {"lifetime", "trials", "code trials per distance",
       [](Config& c, E e) { c.lifetime.trials = static_cast<std::uint64_t>(integer(e, 2, 1LL << 40)); },
       [](const Config& c) { return format_number(c.lifetime.trials); }},
      {"lifetime", "distances", "odd code distances, comma separated",
       [](Config& c, E e) {
         c.lifetime.distances = int_list(e, 1, 1001);
         for (int d : c.lifetime.distances) check(e, d % 2 == 1, "distances must be odd");
       },
       [](const Config& c) { return join(c.lifetime.distances); }},
      {"lifetime", "rounds", "error-correction rounds per trial",
       [](Config& c, E e) { c.lifetime.code.rounds = static_cast<int>(integer(e, 4, 100000)); },
       [](const Config& c) { return format_number(c.lifetime.code.rounds); }},
      {"lifetime", "idle_ms", "idling time per round (ms)",
       [](Config& c, E e) { c.lifetime.code.idle_ms = positive(e); },
       [](const Config& c) { return format_number(c.lifetime.code.idle_ms); }},
      {"lifetime", "per_round_flip", "per-round physical flip probability (abstract mode)",
       [](Config& c, E e) { c.lifetime.code.per_round_flip = probability(e); },
       [](const Config& c) { return format_number(c.lifetime.code.per_round_flip); }},
      {"lifetime", "per_round_loss", "per-round atom loss probability (abstract mode)",
       [](Config& c, E e) { c.lifetime.code.per_round_loss = probability(e); },
       [](const Config& c) { return format_number(c.lifetime.code.per_round_loss); }},
      {"lifetime", "measurement_ms_per_site", "wall-clock readout time per present atom (ms)",
       [](Config& c, E e) { c.lifetime.code.measurement_ms_per_site = non_negative(e); },
       [](const Config& c) { return format_number(c.lifetime.code.measurement_ms_per_site); }},
      {"lifetime", "mode", "abstract or full_physics",
       [](Config& c, E e) { c.lifetime.code.mode = parse_mode(e); },
       [](const Config& c) { return mode_name(c.lifetime.code.mode); }},
      {"lifetime", "hiding_power_mW", "hiding power per atom in full_physics mode (mW)",
       [](Config& c, E e) { c.lifetime.hiding_power_mW = non_negative(e); },
       [](const Config& c) { return format_number(c.lifetime.hiding_power_mW); }},
  };
  return schema;
}

/// Column layout of `[error_table]` rows.
inline constexpr std::string_view kErrorTableColumns =
    "depth_mK, detuning_pc_MHz, infidelity_F1_pct, loss_F1_pct, infidelity_F2_pct, loss_F2_pct";

/// Splits a document into entries. Rejects malformed lines and duplicate keys.
inline std::vector<ConfigEntry> parse_config_entries(std::string_view text) {
  using config_detail::trim;
  std::vector<ConfigEntry> entries;
  std::set<std::pair<std::string, std::string>> seen;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError(where + ": malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    ConfigEntry e{section, std::string(trim(line.substr(0, eq))),
                  std::string(trim(line.substr(eq + 1))), line_no};
    if (e.key.empty()) throw ConfigError(where + ": empty key");
    if (e.section.empty()) throw ConfigError(where + ": key '" + e.key + "' outside any section");
    if (!seen.insert({e.section, e.key}).second)
      throw ConfigError(where + ": duplicate key [" + e.section + "] " + e.key);
    entries.push_back(std::move(e));
  }
  return entries;
}

/// Builds a fully validated Config from a document that lists every key.
inline Config parse_config(std::string_view text) {
  using namespace config_detail;
  const auto entries = parse_config_entries(text);
  const auto& schema = config_schema();
  Config cfg;
  std::set<std::pair<std::string, std::string>> assigned;
  std::vector<MeasurementErrorTable::Row> table_rows;
  int last_line = 0;

  for (const auto& e : entries) {
    last_line = std::max(last_line, e.line);
    if (e.section == "error_table") {
      if (e.key.rfind("row_", 0) != 0 || e.key.size() == 4 ||
          e.key.find_first_not_of("0123456789", 4) != std::string::npos)
        throw ConfigError(where(e) + ": unknown key (expected row_<n>)");
      const auto cols = split(e.value, ',');
      check(e, cols.size() == 6, "expected 6 columns: " + std::string(kErrorTableColumns));
      double v[6];
      for (int i = 0; i < 6; ++i) v[i] = to_double(e, cols[static_cast<std::size_t>(i)]);
      check(e, v[0] > 0.0, "depth must be positive");
      for (int i = 2; i < 6; ++i) check(e, v[i] >= 0.0 && v[i] <= 100.0, "percentages must lie in [0, 100]");
      table_rows.push_back({{v[0], cfg.probe.detuning_pa_MHz, v[1]},
                            {v[2] / 100, v[3] / 100, v[4] / 100, v[5] / 100}});
      continue;
    }
    const auto it = std::find_if(schema.begin(), schema.end(), [&](const ConfigKey& k) {
      return k.section == e.section && k.key == e.key;
    });
    if (it == schema.end()) throw ConfigError(where(e) + ": unknown key");
    it->set(cfg, e);
    assigned.insert({e.section, e.key});
  }

  for (const auto& k : schema) {
    if (!assigned.count({k.section, k.key}))
      throw ConfigError("line " + std::to_string(last_line + 1) + ": missing key [" + k.section +
                        "] " + k.key);
  }
  if (table_rows.empty())
    throw ConfigError("line " + std::to_string(last_line + 1) +
                      ": missing key [error_table] row_<n> (need at least one row)");
  for (auto& r : table_rows) r.probe.detuning_pa_MHz = cfg.probe.detuning_pa_MHz;
  cfg.table = MeasurementErrorTable(std::move(table_rows));

  try {
    cfg.validate();
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("configuration: ") + err.what());
  }
  return cfg;
}

/// Serializes `cfg` as a complete document (round-trips through parse_config).
inline std::string write_config(const Config& cfg) {
  std::ostringstream os;
  std::string section;
  auto open = [&](const std::string& s) {
    if (s == section) return;
    if (!section.empty()) os << '\n';
    os << '[' << s << "]\n";
    section = s;
  };
  const auto& schema = config_schema();
  for (const auto& k : schema) {
    if (k.section == "histogram") {
      open("error_table");
      os << "# " << kErrorTableColumns << '\n';
      int i = 1;
      for (const auto& r : cfg.table.rows())
        os << "row_" << i++ << " = " << format_number(r.probe.depth_mK) << ", "
           << format_number(r.probe.detuning_pc_MHz) << ", "
           << format_number(r.rates.infidelity_F1 * 100) << ", "
           << format_number(r.rates.loss_F1 * 100) << ", "
           << format_number(r.rates.infidelity_F2 * 100) << ", "
           << format_number(r.rates.loss_F2 * 100) << '\n';
    }
    open(k.section);
    os << k.key << " = " << k.get(cfg) << '\n';
  }
  return os.str();
}

/// Human-readable key reference for --help.
inline std::string config_reference() {
  std::ostringstream os;
  const Config defaults;
  std::string section;
  for (const auto& k : config_schema()) {
    if (k.section == "histogram" && section != "error_table") {
      os << "[error_table]\n  row_<n> = " << kErrorTableColumns << "\n";
      section = "error_table";
    }
    if (k.section != section) {
      os << '[' << k.section << "]\n";
      section = k.section;
    }
    os << "  " << k.key << " = " << k.get(defaults) << "\n      " << k.help << '\n';
  }
  return os.str();
}

}  // namespace atomreg
