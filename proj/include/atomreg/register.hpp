#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atomreg/error.hpp"
#include "atomreg/random.hpp"

namespace atomreg {

/// Ground-state hyperfine manifold. F1 is dark under the probe, F2 is bright.
enum class HyperfineState { F1, F2 };

constexpr HyperfineState flipped(HyperfineState s) noexcept {
  return s == HyperfineState::F1 ? HyperfineState::F2 : HyperfineState::F1;
}

/// Occupancy of one tweezer: vacant, or holding one atom in a hyperfine state.
class SiteState {
 public:
  constexpr SiteState() noexcept = default;
  static constexpr SiteState vacant() noexcept { return SiteState(); }
  static constexpr SiteState occupied(HyperfineState s) noexcept { return SiteState(s); }

  constexpr bool is_occupied() const noexcept { return state_.has_value(); }
  constexpr bool is_vacant() const noexcept { return !state_.has_value(); }
  constexpr bool is_bright() const noexcept { return state_ == HyperfineState::F2; }
  /// Precondition: occupied.
  constexpr HyperfineState hyperfine() const { return *state_; }

  constexpr void lose() noexcept { state_.reset(); }
  /// No effect on a vacant site.
  constexpr void set_hyperfine(HyperfineState s) noexcept {
    if (state_) state_ = s;
  }

  friend constexpr bool operator==(const SiteState&, const SiteState&) = default;

 private:
  constexpr explicit SiteState(HyperfineState s) noexcept : state_(s) {}
  std::optional<HyperfineState> state_;
};

/// Ordered tweezer array. Site index identifies a physical tweezer.
class Register {
 public:
  static constexpr double kDefaultSpacingUm = 17.0;

  explicit Register(std::size_t n_sites, double spacing_um = kDefaultSpacingUm)
      : sites_(n_sites), spacing_um_(spacing_um) {
    require(n_sites >= 1, "register needs at least one site");
    require(spacing_um > 0.0, "register spacing must be positive");
  }

  std::size_t size() const noexcept { return sites_.size(); }
  double spacing_um() const noexcept { return spacing_um_; }

  const SiteState& operator[](std::size_t i) const { return sites_.at(i); }
  SiteState& operator[](std::size_t i) { return sites_.at(i); }

  std::span<const SiteState> sites() const noexcept { return sites_; }
  std::span<SiteState> sites() noexcept { return sites_; }

  std::size_t occupied_count() const noexcept {
    std::size_t n = 0;
    for (const auto& s : sites_) n += s.is_occupied() ? 1 : 0;
    return n;
  }

  std::vector<std::size_t> occupied_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < sites_.size(); ++i)
      if (sites_[i].is_occupied()) out.push_back(i);
    return out;
  }

  friend bool operator==(const Register&, const Register&) = default;

 private:
  std::vector<SiteState> sites_;
  double spacing_um_;
};

/// Background idling errors in the tweezers: symmetric depump/repump relaxation and vacuum loss.
struct IdleErrorModel {
  double tau_depump_ms = 150.0;
  double tau_vacuum_ms = 800.0;

  void validate() const {
    require(tau_depump_ms > 0.0, "tau_depump_ms must be > 0");
    require(tau_vacuum_ms > 0.0, "tau_vacuum_ms must be > 0");
  }

  /// Relaxation toward an equal F1/F2 mixture; saturates at 1/2.
  double flip_probability(double duration_ms) const {
    return 0.5 * (1.0 - std::exp(-duration_ms / tau_depump_ms));
  }

  double loss_probability(double duration_ms) const {
    return -std::expm1(-duration_ms / tau_vacuum_ms);
  }
};

/// Sets every site to the corresponding pattern entry (nullopt = vacant).
inline Register prepare(Register reg, std::span<const std::optional<HyperfineState>> pattern) {
  if (pattern.size() != reg.size())
    throw ConfigError("prepare: pattern has " + std::to_string(pattern.size()) +
                      " entries for a register of " + std::to_string(reg.size()) + " sites");
  for (std::size_t i = 0; i < reg.size(); ++i)
    reg[i] = pattern[i] ? SiteState::occupied(*pattern[i]) : SiteState::vacant();
  return reg;
}

/// Fills every site with an atom in state `s`.
inline Register prepare_uniform(Register reg, HyperfineState s) {
  for (auto& site : reg.sites()) site = SiteState::occupied(s);
  return reg;
}

/// Applies background idling for `duration_ms`: flip first, then loss, sampled independently.
inline Register idle(Register reg, double duration_ms, const IdleErrorModel& model,
                     RandomStream& rng) {
  require(duration_ms >= 0.0, "idle: duration must be non-negative");
  model.validate();
  if (duration_ms == 0.0) return reg;
  const double p_flip = model.flip_probability(duration_ms);
  const double p_loss = model.loss_probability(duration_ms);
  for (auto& site : reg.sites()) {
    if (!site.is_occupied()) continue;
    if (rng.bernoulli(p_flip)) site.set_hyperfine(flipped(site.hyperfine()));
    if (rng.bernoulli(p_loss)) site.lose();
  }
  return reg;
}

/// Lifetime of an idling physical bit: depump and vacuum rates add.
inline double combined_idle_lifetime(const IdleErrorModel& model) {
  model.validate();
  return 1.0 / (1.0 / model.tau_depump_ms + 1.0 / model.tau_vacuum_ms);
}

}  // namespace atomreg
