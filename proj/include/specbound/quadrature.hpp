#pragma once

// Thin wrappers over Boost.Math quadrature plus a polar-coordinate
// integrator for R^1 / R^2 used by the continuum moment backends.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "specbound/core.hpp"

namespace specbound::quad {

inline constexpr double kDefaultTol = 1e-9;

namespace detail {
inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_engine() {
  thread_local boost::math::quadrature::tanh_sinh<double> engine(12);
  return engine;
}
inline boost::math::quadrature::exp_sinh<double>& exp_sinh_engine() {
  thread_local boost::math::quadrature::exp_sinh<double> engine(12);
  return engine;
}
}  // namespace detail

/// ∫_a^b f. Tolerates integrable endpoint singularities. Returns +inf when
/// the integrand or the result is not finite.
template <class F>
double finite(F&& f, double a, double b, double tol = kDefaultTol) {
  if (!(b > a)) return 0.0;
  auto guarded = [&](double s) {
    const double v = f(s);
    return std::isfinite(v) ? v : 0.0;
  };
  // tanh-sinh cannot resolve intervals at the rounding scale of their endpoints
  if (b - a <= 1e-10 * std::max({1.0, std::abs(a), std::abs(b)})) return guarded(0.5 * (a + b)) * (b - a);
  try {
    double err = 0.0;
    const double v = detail::tanh_sinh_engine().integrate(guarded, a, b, tol, &err);
    return std::isfinite(v) ? v : kInf;
  } catch (const std::exception&) {
    return kInf;
  }
}

/// ∫_a^∞ f for a ≥ 0, via s = a·e^u when a > 0.
template <class F>
double to_infinity(F&& f, double a, double tol = kDefaultTol) {
  auto& engine = detail::exp_sinh_engine();
  try {
    double err = 0.0;
    if (a > 0.0) {
      auto g = [&](double u) {
        const double s = a * std::exp(u);
        if (!std::isfinite(s)) return 0.0;
        const double v = f(s) * s;
        return std::isfinite(v) ? v : 0.0;
      };
      const double v = engine.integrate(g, 0.0, std::numeric_limits<double>::infinity(), tol, &err);
      return std::isfinite(v) ? v : kInf;
    }
    const double head = finite(f, 0.0, 1.0, tol);
    return head + to_infinity(f, 1.0, tol);
  } catch (const std::exception&) {
    return kInf;
  }
}

/// ∫ over [lo, hi] where hi may be +inf, split at the sorted interior breaks.
template <class F>
double piecewise(F&& f, double lo, double hi, std::vector<double> breaks, double tol = kDefaultTol) {
  if (!(hi > lo)) return 0.0;
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> nodes{lo};
  for (double b : breaks)
    if (b > lo && b < hi && b > nodes.back()) nodes.push_back(b);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) total += finite(f, nodes[i], nodes[i + 1], tol);
  total += std::isfinite(hi) ? finite(f, nodes.back(), hi, tol) : to_infinity(f, nodes.back(), tol);
  return total;
}

/// Adaptive Gauss–Kronrod over a smooth finite interval.
template <class F>
double smooth(F&& f, double a, double b, double tol = 1e-8) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 12, tol, &err);
  return std::isfinite(v) ? v : kInf;
}

/// Sums `ray(θ)` over the unit sphere of R^dim, dim ∈ {1, 2}. `ray(θ)` must
/// return the radial integral ∫ g(x + s·e_θ) s^{dim-1} ds along direction θ.
/// In 1-D the two directions are θ = 0 and θ = π. In 2-D the angular
/// integral is split at `angle_breaks` (kinks of the radial limits).
template <class Ray>
double over_directions(int dim, Ray&& ray, std::vector<double> angle_breaks = {}, double tol = 1e-7) {
  if (dim == 1) return ray(0.0) + ray(std::numbers::pi);
  require(dim == 2, "over_directions: only dimensions 1 and 2 are supported");
  const double two_pi = 2.0 * std::numbers::pi;
  for (double& a : angle_breaks) {
    a = std::fmod(a, two_pi);
    if (a < 0) a += two_pi;
  }
  std::sort(angle_breaks.begin(), angle_breaks.end());
  std::vector<double> nodes{0.0};
  for (double a : angle_breaks)
    if (a > nodes.back() + 1e-12 && a < two_pi - 1e-12) nodes.push_back(a);
  nodes.push_back(two_pi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double v = smooth(ray, nodes[i], nodes[i + 1], tol);
    if (!std::isfinite(v)) return kInf;
    total += v;
  }
  return total;
}

}  // namespace specbound::quad
