// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "atomreg/atomreg.hpp"
#include "oracles.hpp"

using namespace atomreg;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string num(double v) { return format_number(std::round(v * 1e6) / 1e6); }

Verdict cooperativity_check() {
  const double c = cooperativity({});
  return {std::abs(c - 2.02) <= 0.01, "eta0 = " + num(c)};
}

Verdict idle_lifetime_check() {
  const double t = combined_idle_lifetime({150, 800});
  return {std::abs(t - 126.3) < 0.05 && std::abs(t - 125.0) / 125.0 <= 0.02,
          "tau = " + num(t) + " ms"};
}

Verdict adaptive_check() {
  const PhotonModel m{};
  const std::uint64_t n = 100000;
  const auto r = adaptive_reduction_factors(m, n, 2024, 0);
  // Wald identity on a per-trial basis: E[counts - lambda * stop] = 0
  const double lambda = m.mean_sub(true);
  const RunningStats diff = run_trials(
      n, 0, RunningStats{},
      [&](std::uint64_t i, RunningStats& s) {
        auto rng = RandomStream::for_trial(2025, 0, i);
        const auto o = sample_adaptive_interval(true, m, rng);
        s.add(static_cast<double>(o.counts) - lambda * o.sub_intervals_used);
      },
      [](RunningStats& a, const RunningStats& b) { a.merge(b); });
  const Estimate d = diff.estimate();
  const auto o = oracle::adaptive_stop(lambda, m.sub_intervals(), m.threshold);
  const double f = r.photon_factor.mean;
  const bool in_range = f >= 5.0 && f <= 5.9;
  const bool wald = std::abs(d.mean) <= 3 * d.std_error;
  return {in_range && wald, "photon factor " + num(f) + " +/- " + num(r.photon_factor.std_error) +
                                " (enumeration " + num(m.mean_full(true) / o.mean_counts) +
                                "), Wald residual " + num(d.mean) + " +/- " + num(d.std_error)};
}

Verdict search_check() {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::SearchCost;
  spec.config.search.strategies = {SearchStrategy::GlobalCheckThenSequential};
  spec.trials = 10000;
  spec.master_seed = 7;
  spec.threads = 0;
  const auto res = run(spec);
  int bad = 0;
  double worst = 0;
  for (const auto& row : res.table.rows) {
    const double n = std::stod(row[0]), p = std::stod(row[1]);
    const double mean = std::stod(row[3]), se = std::stod(row[4]);
    const double z = se > 0 ? std::abs(mean - (1 + p * n)) / se : (mean == 1 + p * n ? 0 : INFINITY);
    worst = std::max(worst, z);
    bad += z > 3;
  }
  // exact enumeration over every noiseless single-bright placement
  double max_err = 0;
  for (std::size_t n = 2; n <= 10; ++n) {
    for (double p : {0.0, 0.1, 0.3, 0.5, 1.0}) {
      RandomStream rng(0);
      Register reg = prepare_uniform(Register(n), HyperfineState::F1);
      double cost = (1 - p) * static_cast<double>(
                                  run_search(reg, SearchStrategy::GlobalCheckThenSequential, rng)
                                      .intervals_used);
      for (std::size_t i = 0; i < n; ++i) {
        Register one = reg;
        one[i].set_hyperfine(HyperfineState::F2);
        cost += p / static_cast<double>(n) *
                static_cast<double>(
                    run_search(one, SearchStrategy::GlobalCheckThenSequential, rng).intervals_used);
      }
      max_err = std::max(max_err, std::abs(cost - (1 + p * static_cast<double>(n))));
    }
  }
  return {bad == 0 && max_err < 1e-12,
          "worst |z| = " + num(worst) + " over " + std::to_string(res.table.rows.size()) +
              " cells, enumeration max error " + format_number(max_err)};
}

Verdict majority_check() {
  CodeConfig base;
  base.per_round_loss = 0.0;
  std::string detail;
  bool ok = true;
  for (auto [d, p] : {std::pair{3, 0.09}, std::pair{5, 0.09}, std::pair{5, 0.1}}) {
    const std::vector<double> flips{p};
    const std::vector<int> ds{d};
    const auto rows = logical_error_curve(base, flips, ds, PostSelect::None, 100000, 31, 0);
    const double want = oracle::majority_failure(p, d);
    const auto& e = rows.front().p_logical;
    ok = ok && std::abs(e.mean - want) <= 3 * e.std_error;
    detail += "d=" + std::to_string(d) + " p=" + num(p) + ": " + num(e.mean) + " vs " + num(want) + "; ";
  }
  return {ok, detail};
}

Verdict exponent_check() {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::ErrorScaling;
  spec.config.error_scaling.distances = {3, 5};
  spec.trials = 1000000;
  spec.master_seed = 11;
  spec.threads = 0;
  const auto res = run(spec);
  double e3 = NAN, e5 = NAN;
  for (const auto& e : res.summary["exponents"]) {
    if (!e.contains("exponent")) continue;
    (e["d"] == 3 ? e3 : e5) = e["exponent"].get<double>();
  }
  return {std::abs(e3 - 2.0) <= 0.3 && e5 >= 2.8 && e5 <= 3.7,
          "d=3 slope " + num(e3) + ", d=5 slope " + num(e5)};
}

Verdict lifetime_check() {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::LogicalLifetime;
  spec.config.lifetime.distances = {3, 5};
  spec.trials = 100000;
  spec.master_seed = 5;
  spec.threads = 0;
  const auto res = run(spec);
  double f3 = NAN, f5 = NAN;
  for (const auto& l : res.summary["logical"])
    (l["d"] == 3 ? f3 : f5) = l["extension_factor"].get<double>();
  const bool ok = std::abs(f3 - 2.5) <= 0.3 * 2.5 && std::abs(f5 - 4.9) <= 0.3 * 4.9;
  return {ok, "physical tau " + num(res.summary["physical"]["tau_ms"].get<double>()) +
                  " ms, extension d=3 " + num(f3) + ", d=5 " + num(f5)};
}

Verdict depump_check() {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::DepumpScaling;
  spec.config.depump.hiding_power_mW = {2.0};
  spec.config.depump.n_sites = {10};
  spec.trials = 200000;
  spec.master_seed = 3;
  spec.threads = 0;
  const auto res = run(spec);
  const auto& fit = res.summary["fits"].front();
  const double slope = fit["slope_per_site"].get<double>();
  const double se = fit["slope_stderr"].get<double>();
  const double want = fit["configured_rate_per_site"].get<double>();
  return {std::abs(slope - want) <= 4 * se && std::abs(want - 0.0008) < 1e-12,
          "slope " + num(slope * 100) + " +/- " + num(se * 100) + " %/site, configured " +
              num(want * 100) + " %/site"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict determinism_check() {
  const auto dir = std::filesystem::temp_directory_path() / "atomreg_acceptance";
  std::filesystem::create_directories(dir);
  const std::string cfg = ATOMREG_DEFAULTS_CFG;
  std::string detail;
  bool ok = true;
  for (const char* sub :
       {"histogram", "depump-scaling", "search-cost", "error-scaling", "lifetime"}) {
    std::string reference;
    for (int threads : {1, 4, 16}) {
      const auto out = dir / (std::string(sub) + "_" + std::to_string(threads) + ".csv");
      const std::string cmd = std::string(ATOMREG_CLI) + " " + sub + " --config " + cfg +
                              " --seed 99 --trials 3000 --threads " + std::to_string(threads) +
                              " --out " + out.string();
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        ok = false;
        detail += std::string(sub) + " failed to run; ";
        break;
      }
      const std::string bytes = slurp(out) + slurp(out.string() + ".meta.json");
      if (threads == 1) reference = bytes;
      else if (bytes != reference) {
        ok = false;
        detail += std::string(sub) + " differs at " + std::to_string(threads) + " threads; ";
      }
    }
  }
  std::string reference;
  for (int k = 0; k < 3; ++k) {
    const auto out = dir / "validate.txt";
    const std::string cmd = std::string(ATOMREG_CLI) + " validate-config --print --config " + cfg +
                            " > " + out.string();
    ok = ok && std::system(cmd.c_str()) == 0;
    if (k == 0) reference = slurp(out);
    else ok = ok && slurp(out) == reference;
  }
  std::filesystem::remove_all(dir);
  return {ok, detail.empty() ? "6 subcommands byte-identical for threads 1, 4, 16" : detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"cooperativity", cooperativity_check},
      {"idle lifetime combination", idle_lifetime_check},
      {"adaptive termination", adaptive_check},
      {"search cost", search_check},
      {"majority vote", majority_check},
      {"error scaling exponents", exponent_check},
      {"logical lifetime", lifetime_check},
      {"depump scaling", depump_check},
      {"determinism", determinism_check},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
              << "): " << v.detail << " [" << num(std::round(secs * 100) / 100) << " s]"
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
