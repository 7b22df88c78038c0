#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atomreg/error.hpp"

namespace atomreg {

/// Sample mean with its standard error. The error is undefined (NaN) for n < 2.
struct Estimate {
  double mean = 0.0;
  double std_error = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t n = 0;

  double relative_error() const { return mean != 0.0 ? std_error / std::abs(mean) : INFINITY; }
};

/// Streaming sum / sum-of-squares accumulator.
struct RunningStats {
  std::uint64_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const RunningStats& o) {
    n += o.n;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }

  Estimate estimate() const {
    Estimate e;
    e.n = n;
    if (n == 0) {
      e.mean = std::numeric_limits<double>::quiet_NaN();
      return e;
    }
    e.mean = sum / static_cast<double>(n);
    if (n >= 2) {
      const double var =
          std::max(0.0, (sum_sq - sum * e.mean) / static_cast<double>(n - 1));
      e.std_error = std::sqrt(var / static_cast<double>(n));
    }
    return e;
  }
};

/// Bernoulli outcome counter; reports binomial standard errors.
struct Proportion {
  std::uint64_t successes = 0;
  std::uint64_t n = 0;

  void add(bool hit) {
    ++n;
    successes += hit ? 1 : 0;
  }
  void merge(const Proportion& o) {
    successes += o.successes;
    n += o.n;
  }

  Estimate estimate() const {
    Estimate e;
    e.n = n;
    if (n == 0) {
      e.mean = std::numeric_limits<double>::quiet_NaN();
      return e;
    }
    e.mean = static_cast<double>(successes) / static_cast<double>(n);
    if (n >= 2) e.std_error = std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(n));
    return e;
  }
};

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double intercept_std_error = 0.0;
  double slope_std_error = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit fit_linear(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), "fit_linear: xs and ys differ in length");
  require(xs.size() >= 3, "fit_linear: need at least 3 points");
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double scale = std::max(1.0, std::abs(mx));
  if (!(sxx > 1e-24 * scale * scale * n)) throw ConfigError("fit_linear: degenerate x range");

  LinearFit fit;
  fit.n = xs.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - fit.intercept - fit.slope * xs[i];
    sse += r * r;
  }
  const double sigma2 = sse / (n - 2.0);
  fit.slope_std_error = std::sqrt(sigma2 / sxx);
  fit.intercept_std_error = std::sqrt(sigma2 * (1.0 / n + mx * mx / sxx));
  return fit;
}

/// Power-law exponent: unweighted least-squares slope of log(y) against log(x).
inline LinearFit fit_power_law(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), "fit_power_law: xs and ys differ in length");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw ConfigError("fit_power_law: non-positive value at point " + std::to_string(i));
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  return fit_linear(lx, ly);
}

struct SaturatingFit {
  double p_inf = 0.0;
  double tau = 0.0;
  double p_inf_std_error = 0.0;
  double tau_std_error = 0.0;
  double sse = 0.0;
  std::size_t iterations = 0;
  /// False when tau or p_inf is not identifiable from the data.
  bool converged = true;
  std::string diagnostic;
};

namespace detail {

struct SaturatingProfile {
  double p_inf;
  double sse;
};

// Least-squares plateau for a fixed tau, and the resulting residual.
inline SaturatingProfile saturating_profile(std::span<const double> ts, std::span<const double> ps,
                                            double tau, std::optional<double> fixed_p_inf) {
  double ff = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double f = -std::expm1(-ts[i] / tau);
    ff += f * f;
    fp += f * ps[i];
  }
  const double p_inf = fixed_p_inf ? *fixed_p_inf : (ff > 0.0 ? fp / ff : 0.0);
  double sse = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = ps[i] + p_inf * std::expm1(-ts[i] / tau);
    sse += r * r;
  }
  return {p_inf, sse};
}

}  // namespace detail

/**
 * Fits p(t) = p_inf * (1 - exp(-t / tau)).
 *
 * tau is located by a log-spaced grid scan followed by golden-section search
 * on log(tau); p_inf is solved linearly for each trial tau unless
 * `fixed_p_inf` is given. A minimum on the edge of the search window means
 * the data show no plateau (or no rise); the result is then flagged
 * `converged = false`.
 */
inline SaturatingFit fit_saturating_exponential(std::span<const double> ts,
                                                std::span<const double> ps,
                                                std::optional<double> fixed_p_inf = std::nullopt) {
  require(ts.size() == ps.size(), "fit_saturating_exponential: ts and ps differ in length");
  require(ts.size() >= 5, "fit_saturating_exponential: need at least 5 points");
  double t_min_pos = INFINITY, t_max = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    require(ts[i] >= 0.0, "fit_saturating_exponential: negative time");
    require(ps[i] >= 0.0 && ps[i] <= 1.0, "fit_saturating_exponential: p outside [0, 1]");
    if (ts[i] > 0.0) t_min_pos = std::min(t_min_pos, ts[i]);
    t_max = std::max(t_max, ts[i]);
  }
  require(t_max > 0.0, "fit_saturating_exponential: need at least one positive time");

  SaturatingFit fit;
  const double max_p = *std::max_element(ps.begin(), ps.end());
  if (max_p <= 0.0 && !fixed_p_inf) {
    fit.converged = false;
    fit.diagnostic = "all-zero data: plateau is zero and tau is unidentifiable";
    fit.tau = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }

  const double lo = std::log(t_min_pos * 1e-3);
  const double hi = std::log(t_max * 1e3);
  auto objective = [&](double log_tau) {
    return detail::saturating_profile(ts, ps, std::exp(log_tau), fixed_p_inf).sse;
  };

  constexpr int kGrid = 200;
  int best = 0;
  double best_sse = INFINITY;
  for (int k = 0; k <= kGrid; ++k) {
    const double x = lo + (hi - lo) * k / kGrid;
    const double s = objective(x);
    if (s < best_sse) {
      best_sse = s;
      best = k;
    }
  }
  const double step = (hi - lo) / kGrid;
  double a = lo + step * std::max(best - 1, 0);
  double b = lo + step * std::min(best + 1, kGrid);

  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = objective(c), fd = objective(d);
  std::size_t it = 0;
  for (; it < 10000 && (b - a) > 1e-13; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = objective(d);
    }
    if (std::min(fc, fd) < 1e-30) {
      // exact data; the bracket is already tight enough for the polish below
      if ((b - a) < 1e-9) break;
    }
  }
  double log_tau = 0.5 * (a + b);
  fit.iterations = it;

  // Newton polish on the profiled objective with a numerical second derivative.
  for (int k = 0; k < 20; ++k) {
    const double h = 1e-5;
    const double f0 = objective(log_tau), fp = objective(log_tau + h), fm = objective(log_tau - h);
    const double g = (fp - fm) / (2 * h);
    const double curv = (fp - 2 * f0 + fm) / (h * h);
    if (!(curv > 0.0)) break;
    const double next = log_tau - g / curv;
    if (!(objective(next) < f0)) break;
    log_tau = next;
  }

  fit.tau = std::exp(log_tau);
  const auto prof = detail::saturating_profile(ts, ps, fit.tau, fixed_p_inf);
  fit.p_inf = prof.p_inf;
  fit.sse = prof.sse;

  const double edge = 2.0 * step;
  if (log_tau >= hi - edge) {
    fit.converged = false;
    fit.diagnostic = "no plateau: tau runs to the upper search bound";
  } else if (log_tau <= lo + edge) {
    fit.converged = false;
    fit.diagnostic = "tau runs to the lower search bound";
  }

  // Standard errors from the Jacobian at the optimum.
  const auto n = static_cast<double>(ts.size());
  const double dof = n - (fixed_p_inf ? 1.0 : 2.0);
  const double sigma2 = dof > 0 ? fit.sse / dof : 0.0;
  double jpp = 0.0, jpt = 0.0, jtt = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double e = std::exp(-ts[i] / fit.tau);
    const double dp = 1.0 - e;
    const double dt = -fit.p_inf * ts[i] / (fit.tau * fit.tau) * e;
    jpp += dp * dp;
    jpt += dp * dt;
    jtt += dt * dt;
  }
  if (fixed_p_inf) {
    fit.tau_std_error = jtt > 0 ? std::sqrt(sigma2 / jtt) : INFINITY;
  } else {
    const double det = jpp * jtt - jpt * jpt;
    if (det > 0) {
      fit.p_inf_std_error = std::sqrt(sigma2 * jtt / det);
      fit.tau_std_error = std::sqrt(sigma2 * jpp / det);
    } else {
      fit.p_inf_std_error = fit.tau_std_error = INFINITY;
    }
  }
  return fit;
}

}  // namespace atomreg
