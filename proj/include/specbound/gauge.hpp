#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "specbound/core.hpp"
#include "specbound/space.hpp"

namespace specbound {

enum class RhoKind { identity, power_shift, log_shift };
enum class FKind { constant, power_max, linear_max };

/// Length functions ρ_r and jump thresholds F_r. Every tag depends on x only
/// through d₀(x), and ρ_r is nondecreasing in d₀.
struct AdaptedGauge {
  RhoKind rho_kind = RhoKind::identity;
  double delta = 0.5;
  double offset = 1.0;  // power-shift uses (offset + r + d₀)^δ
  FKind f_kind = FKind::constant;
  double c_star = 0.5;
  double gamma_sup = 0.0;

  void validate() const {
    const bool needs_delta = rho_kind == RhoKind::power_shift || f_kind == FKind::power_max;
    if (needs_delta) require(delta > 0.0 && delta < 1.0, "gauge: delta must lie in (0,1)");
    require(offset >= 0.0, "gauge: offset must be nonnegative");
    if (f_kind != FKind::constant) require(c_star > 0.0 && c_star < 1.0, "gauge: c_star must lie in (0,1)");
    require(gamma_sup >= 0.0, "gauge: gamma_sup must be nonnegative");
  }

  double rho(double r, double d0) const {
    switch (rho_kind) {
      case RhoKind::identity:
        return d0;
      case RhoKind::power_shift:
        return std::pow(offset + r + d0, delta);
      case RhoKind::log_shift:
        return std::max(0.0, std::log(r + d0));
    }
    return d0;
  }

  double F(double r, double d0x, double d0y) const {
    switch (f_kind) {
      case FKind::constant:
        return r;
      case FKind::power_max:
        return c_star * std::pow(r + std::max(d0x, d0y), 1.0 - delta);
      case FKind::linear_max:
        return c_star * (r + std::max(d0x, d0y));
    }
    return r;
  }

  /// Analytic bound on |ρ_r(x) − ρ_r(y)| given d₀(x), d₀(y) and d(x,y).
  double increment_bound(double r, double d0x, double d0y, double d) const {
    const double lo = std::min(d0x, d0y);
    switch (rho_kind) {
      case RhoKind::identity:
        return d;
      case RhoKind::power_shift:
        return delta * d / std::pow(offset + r + lo, 1.0 - delta);
      case RhoKind::log_shift:
        return d / (r + lo);
    }
    return d;
  }

  /// Largest d₀ with ρ_r ≤ R, or a negative value when the sublevel set is empty.
  double inverse(double r, double R) const {
    switch (rho_kind) {
      case RhoKind::identity:
        return R;
      case RhoKind::power_shift:
        return std::pow(R, 1.0 / delta) - offset - r;
      case RhoKind::log_shift:
        return std::exp(R) - r;
    }
    return R;
  }

  /// Upper bound for F_r over pairs with d₀ ≤ d0_max.
  double F_max(double r, double d0_max) const { return F(r, d0_max, d0_max); }

  bool constant_threshold() const { return f_kind == FKind::constant; }
};

inline double rho(const AdaptedGauge& g, double r, const SampledSpace& space, Index x) {
  require(r > 0.0, "rho: r must be positive");
  space.check_id(x);
  return g.rho(r, space.d0(x));
}

inline double rho_increment_bound(const AdaptedGauge& g, double r, const SampledSpace& space, Index x, Index y) {
  require(r > 0.0, "rho_increment_bound: r must be positive");
  return g.increment_bound(r, space.d0(x), space.d0(y), space.dist(x, y));
}

/// {x : ρ_r(x) ≤ R}.
struct SublevelSet {
  const AdaptedGauge* gauge = nullptr;
  double r = 1.0;
  double R = 0.0;
  bool contains(double d0) const { return gauge->rho(r, d0) <= R; }
};

/// Selected-measure mass of {ρ_r ≤ R}; `weights` holds per-point masses of
/// the chosen measure (m, μ_V or the time-changed μ).
inline double sublevel_volume(const AdaptedGauge& g, double r, double R, const SampledSpace& space,
                              const std::vector<double>& weights) {
  require(R > 0.0, "sublevel_volume: R must be positive");
  require(weights.size() == space.size(), "sublevel_volume: weight count mismatch");
  double total = 0.0;
  for (Index i = 0; i < space.size(); ++i)
    if (g.rho(r, space.d0(i)) <= R) total += weights[i];
  return total;
}

/// Selected-measure mass of the complement {ρ_r > R}, summed directly.
inline double sublevel_complement_volume(const AdaptedGauge& g, double r, double R, const SampledSpace& space,
                                         const std::vector<double>& weights) {
  require(R > 0.0, "sublevel_complement_volume: R must be positive");
  require(weights.size() == space.size(), "sublevel_complement_volume: weight count mismatch");
  double total = 0.0;
  for (Index i = 0; i < space.size(); ++i)
    if (g.rho(r, space.d0(i)) > R) total += weights[i];
  return total;
}

}  // namespace specbound
