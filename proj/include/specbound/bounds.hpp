#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "specbound/core.hpp"
#include "specbound/gauge.hpp"
#include "specbound/kernel.hpp"
#include "specbound/quadrature.hpp"
#include "specbound/space.hpp"

namespace specbound {

// ---------------------------------------------------------------------------
// Volume growth

enum class GrowthKind { mu, nu };
enum class GrowthMethod { tail_min, regression };

struct GrowthEstimate {
  GrowthKind kind = GrowthKind::mu;
  double value = 0.0;       // tail-min estimate, clipped at 0
  double regression = 0.0;  // slope of ±log volume against R over the tail
  double R_lo = 0.0, R_hi = 0.0;
  std::vector<std::pair<double, double>> samples;  // (R, log volume)
  GrowthMethod method = GrowthMethod::tail_min;
  std::size_t skipped = 0;

  bool finite() const { return std::isfinite(value); }
};

/// Tail-min over the upper half of the grid of ±(1/R)·log volume.
/// Non-finite log volumes are skipped; at least one valid tail sample is required.
inline GrowthEstimate growth_from_samples(GrowthKind kind, const std::vector<double>& R,
                                          const std::vector<double>& log_volume) {
  require(R.size() == log_volume.size(), "growth: sample count mismatch");
  require(R.size() >= 8, "growth: R grid needs at least 8 points");
  for (std::size_t i = 1; i < R.size(); ++i) require(R[i] > R[i - 1], "growth: R grid must increase");
  GrowthEstimate g;
  g.kind = kind;
  const double sign = kind == GrowthKind::mu ? 1.0 : -1.0;
  std::vector<double> tx, ty;
  double best = kInf;
  for (std::size_t i = 0; i < R.size(); ++i) {
    if (!std::isfinite(log_volume[i])) {
      ++g.skipped;
      continue;
    }
    g.samples.emplace_back(R[i], log_volume[i]);
    if (i < R.size() / 2) continue;
    const double rate = sign * log_volume[i] / R[i];
    best = std::min(best, rate);
    tx.push_back(R[i]);
    ty.push_back(sign * log_volume[i]);
  }
  if (g.samples.empty()) throw InvalidArgument("growth: every sampled volume is zero or empty");
  if (tx.empty()) throw InvalidArgument("growth: no valid samples in the upper half of the R grid");
  g.R_lo = tx.front();
  g.R_hi = tx.back();
  g.value = std::max(0.0, best);
  g.regression = tx.size() >= 2 ? fit_line(tx, ty).slope : g.value;
  return g;
}

/// Per-point masses of the L² measure: m_x times the model's measure weight.
inline std::vector<double> measure_masses(const SampledSpace& space, const JumpModel& model) {
  std::vector<double> w(space.size());
  for (Index i = 0; i < space.size(); ++i) w[i] = space.mass(i) * model.measure_weight(space.d0(i));
  return w;
}

namespace detail {
struct SortedMasses {
  std::vector<double> d0;      // ascending
  std::vector<double> prefix;  // prefix[k] = mass of the first k points
  std::vector<double> suffix;  // suffix[k] = mass of points k..n-1
};

inline SortedMasses sort_masses(const SampledSpace& space, const std::vector<double>& w) {
  SortedMasses s;
  const auto ids = space.by_distance();
  const std::size_t n = ids.size();
  s.d0.resize(n);
  s.prefix.assign(n + 1, 0.0);
  s.suffix.assign(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    s.d0[k] = space.d0(ids[k]);
    s.prefix[k + 1] = s.prefix[k] + w[ids[k]];
  }
  for (std::size_t k = n; k-- > 0;) s.suffix[k] = s.suffix[k + 1] + w[ids[k]];
  return s;
}

inline std::size_t count_within(const std::vector<double>& sorted_d0, double radius) {
  if (radius < 0.0) return 0;
  const double slack = radius * 1e-12 + 1e-12;
  return static_cast<std::size_t>(std::upper_bound(sorted_d0.begin(), sorted_d0.end(), radius + slack) -
                                  sorted_d0.begin());
}
}  // namespace detail

inline GrowthEstimate estimate_mu(const SampledSpace& space, const JumpModel& model, const AdaptedGauge& gauge,
                                  double r, const std::vector<double>& R_grid) {
  const auto s = detail::sort_masses(space, measure_masses(space, model));
  std::vector<double> lv(R_grid.size());
  for (std::size_t i = 0; i < R_grid.size(); ++i) {
    const double v = s.prefix[detail::count_within(s.d0, gauge.inverse(r, R_grid[i]))];
    lv[i] = v > 0.0 ? std::log(v) : -kInf;
  }
  return growth_from_samples(GrowthKind::mu, R_grid, lv);
}

inline GrowthEstimate estimate_nu(const SampledSpace& space, const JumpModel& model, const AdaptedGauge& gauge,
                                  double r, const std::vector<double>& R_grid) {
  const auto s = detail::sort_masses(space, measure_masses(space, model));
  std::vector<double> lv(R_grid.size());
  for (std::size_t i = 0; i < R_grid.size(); ++i) {
    const double v = s.suffix[detail::count_within(s.d0, gauge.inverse(r, R_grid[i]))];
    lv[i] = v > 0.0 ? std::log(v) : kInf;  // empty complement: skipped
  }
  return growth_from_samples(GrowthKind::nu, R_grid, lv);
}

namespace detail {
/// ∫_lo^hi f over geometric decades (handles ranges spanning many orders).
template <class F>
double decade_integral(F&& f, double lo, double hi, const std::vector<double>& breaks) {
  std::vector<double> nodes = breaks;
  for (double t = 1.0; t < 1e300; t *= 10.0) {
    if (t > hi) break;
    if (t > lo) nodes.push_back(t);
  }
  return quad::piecewise(f, lo, hi, nodes);
}
}  // namespace detail

/// log of ∫_0^radius ω(t) dV(t) with ω the model's measure weight.
inline double profile_log_mass(const RadialProfile& profile, const JumpModel& model, double radius) {
  if (radius <= 0.0) return -kInf;
  if (model.modifier() == Modifier::none) return profile.log_volume(radius);
  auto integrand = [&](double t) {
    return std::exp(std::log(model.measure_weight(t)) + profile.log_density(t));
  };
  const double v = detail::decade_integral(integrand, 0.0, radius, profile.breakpoints());
  return v > 0.0 && std::isfinite(v) ? std::log(v) : (v > 0.0 ? kInf : -kInf);
}

/// log of ∫_radius^∞ ω(t) dV(t), summed directly (never as total − sublevel).
inline double profile_log_complement(const RadialProfile& profile, const JumpModel& model, double radius) {
  radius = std::max(radius, 0.0);
  if (model.modifier() == Modifier::none) {
    if (!std::isfinite(profile.total_volume())) return kInf;
    const double v = profile.total_volume() - profile.volume(radius);
    return v > 0.0 ? std::log(v) : kInf;
  }
  auto integrand = [&](double t) {
    return std::exp(std::log(model.measure_weight(t)) + profile.log_density(t));
  };
  double v = 0.0;
  const double knee = std::max(radius, 1.0);
  if (radius < knee) v += detail::decade_integral(integrand, radius, knee, profile.breakpoints());
  v += quad::to_infinity(integrand, knee, 1e-10);
  if (!std::isfinite(v)) return kInf;
  return v > 0.0 ? std::log(v) : kInf;
}

inline GrowthEstimate estimate_mu(const RadialProfile& profile, const JumpModel& model, const AdaptedGauge& gauge,
                                  double r, const std::vector<double>& R_grid) {
  std::vector<double> lv(R_grid.size());
  for (std::size_t i = 0; i < R_grid.size(); ++i)
    lv[i] = profile_log_mass(profile, model, gauge.inverse(r, R_grid[i]));
  return growth_from_samples(GrowthKind::mu, R_grid, lv);
}

inline GrowthEstimate estimate_nu(const RadialProfile& profile, const JumpModel& model, const AdaptedGauge& gauge,
                                  double r, const std::vector<double>& R_grid) {
  std::vector<double> lv(R_grid.size());
  for (std::size_t i = 0; i < R_grid.size(); ++i)
    lv[i] = profile_log_complement(profile, model, gauge.inverse(r, R_grid[i]));
  bool any = false;
  for (double v : lv) any = any || std::isfinite(v);
  if (!any) throw InvalidArgument("estimate_nu: the selected measure has infinite total mass");
  return growth_from_samples(GrowthKind::nu, R_grid, lv);
}

// ---------------------------------------------------------------------------
// Jump moments

inline constexpr Index kNoPoint = static_cast<Index>(-1);

struct JumpMoments {
  double r = 0.0;
  double M1 = 0.0;
  double M2 = 0.0;
  Index M1_point = kNoPoint;  // discrete backends
  Index M2_point = kNoPoint;
  double M1_d0 = 0.0;  // d₀ of the maximizer
  double M2_d0 = 0.0;
  std::string diagnostic;

  bool finite() const { return std::isfinite(M1) && std::isfinite(M2); }
};

/// Which part of R^dim a continuum integral runs over.
enum class RegionKind { whole, cell, outside_box };
struct Region {
  RegionKind kind = RegionKind::whole;
  double half = 0.0;  // cell half-width (cell centered at x) or box half-width (box centered at o)
};

struct SplitMass {
  double small = 0.0;  // ∫_{d ≤ F_r} (ρ_r(x) − ρ_r(y))² J(x,dy)
  double big = 0.0;    // ∫_{d > F_r} J(x,dy)
};

namespace detail {

inline double ray_exit(const std::array<double, 2>& x, const std::array<double, 2>& e, int dim, double B) {
  double s = kInf;
  for (int k = 0; k < dim; ++k) {
    if (std::abs(e[k]) < 1e-15) continue;
    const double wall = e[k] > 0 ? B : -B;
    s = std::min(s, (wall - x[k]) / e[k]);
  }
  return std::max(s, 0.0);
}

inline double cell_exit(const std::array<double, 2>& e, int dim, double half) {
  double s = kInf;
  for (int k = 0; k < dim; ++k)
    if (std::abs(e[k]) > 1e-15) s = std::min(s, half / std::abs(e[k]));
  return s;
}

/// Distance along the ray at which d(x,y) = F_r(x,y); s − F(s) is increasing.
inline double split_point(const AdaptedGauge& g, double r, double d0x, const std::function<double(double)>& d0y) {
  if (g.constant_threshold()) return r;
  auto h = [&](double s) { return s - g.F(r, d0x, d0y(s)); };
  double hi = std::max(1.0, g.F(r, d0x, d0x));
  int guard = 0;
  while (h(hi) <= 0.0 && guard++ < 400) hi *= 2.0;
  if (h(hi) <= 0.0) return kInf;
  std::uintmax_t iters = 200;
  auto res = boost::math::tools::toms748_solve(h, 0.0, hi, boost::math::tools::eps_tolerance<double>(48), iters);
  return 0.5 * (res.first + res.second);
}

}  // namespace detail

/// Small- and big-jump integrals at x ∈ R^dim (dim ∈ {1,2}) against Lebesgue m.
inline SplitMass continuum_split(int dim, const JumpModel& model, const AdaptedGauge& g, double r,
                                 std::array<double, 2> x, Region region = {}, bool want_small = true,
                                 bool want_big = true) {
  require(dim == 1 || dim == 2, "continuum_split: dim must be 1 or 2");
  if (dim == 1) x[1] = 0.0;
  const double d0x = std::hypot(x[0], x[1]);
  const double rho_x = g.rho(r, d0x);

  auto radial_pair = [&](double theta, bool small_part) {
    const std::array<double, 2> e{std::cos(theta), dim == 1 ? 0.0 : std::sin(theta)};
    auto d0y = [&](double s) { return std::hypot(x[0] + s * e[0], x[1] + s * e[1]); };
    double a = 0.0, b = kInf;
    if (region.kind == RegionKind::cell) b = detail::cell_exit(e, dim, region.half);
    if (region.kind == RegionKind::outside_box) a = detail::ray_exit(x, e, dim, region.half);
    const double sF = detail::split_point(g, r, d0x, d0y);
    const double along = x[0] * e[0] + x[1] * e[1];
    std::vector<double> breaks{1.0};
    if (along < 0) {
      breaks.push_back(-along);
      breaks.push_back(-2.0 * along);
    }
    const double pw = dim == 1 ? 0.0 : 1.0;
    if (small_part) {
      const double hi = std::min(b, sF);
      if (!(hi > a)) return 0.0;
      auto f = [&](double s) {
        const double dy = d0y(s);
        const double dr = rho_x - g.rho(r, dy);
        return dr * dr * model.density(s, d0x, dy) * (pw > 0 ? s : 1.0);
      };
      return quad::piecewise(f, a, hi, breaks);
    }
    const double lo = std::max(a, sF);
    if (!(b > lo)) return 0.0;
    auto f = [&](double s) { return model.density(s, d0x, d0y(s)) * (pw > 0 ? s : 1.0); };
    return quad::piecewise(f, lo, b, breaks);
  };

  SplitMass out;
  if (dim == 1) {
    if (want_small) out.small = radial_pair(0.0, true) + radial_pair(std::numbers::pi, true);
    if (want_big) out.big = radial_pair(0.0, false) + radial_pair(std::numbers::pi, false);
    return out;
  }

  const double pi = std::numbers::pi;
  const bool mirror = std::abs(x[1]) == 0.0;
  std::vector<double> breaks;
  if (d0x > 0.0) breaks.push_back(std::atan2(-x[1], -x[0]));
  if (region.kind == RegionKind::cell)
    for (int k = 0; k < 4; ++k) breaks.push_back(pi / 4 + k * pi / 2);
  if (region.kind == RegionKind::outside_box)
    for (double sx : {-1.0, 1.0})
      for (double sy : {-1.0, 1.0})
        breaks.push_back(std::atan2(sy * region.half - x[1], sx * region.half - x[0]));
  auto angular = [&](bool small_part) {
    auto ray = [&](double theta) { return radial_pair(theta, small_part); };
    if (!mirror) return quad::over_directions(2, ray, breaks);
    std::vector<double> nodes{0.0};
    for (double t : breaks) {
      t = std::fmod(t + 2 * pi, 2 * pi);
      if (t > 1e-12 && t < pi - 1e-12) nodes.push_back(t);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.push_back(pi);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) total += quad::smooth(ray, nodes[i], nodes[i + 1], 1e-7);
    return 2.0 * total;
  };
  if (want_small) out.small = angular(true);
  if (want_big) out.big = angular(false);
  return out;
}

struct ContinuumOptions {
  int dim = 1;
  std::size_t probes = 24;
  double t_min_factor = 1e-2;  // probes span [t_min_factor, t_max_factor]·(1 + r) plus t = 0
  double t_max_factor = 1e4;
  int refine_iters = 10;
  unsigned threads = 1;
};

/// M1/M2 on R^dim with Lebesgue m: the essential sup over x is taken over
/// radial probes x = (t, 0), refined by golden-section search around the best probe.
inline JumpMoments compute_moments_continuum(const JumpModel& model, const AdaptedGauge& gauge, double r,
                                             const ContinuumOptions& opt = {}) {
  require(r > 0.0, "compute_moments: r must be positive");
  gauge.validate();
  std::vector<double> ts{0.0};
  for (double t : log_grid(opt.t_min_factor * (1.0 + r), opt.t_max_factor * (1.0 + r), opt.probes)) ts.push_back(t);
  std::vector<SplitMass> vals(ts.size());
  parallel_for(ts.size(), opt.threads, [&](std::size_t i) {
    vals[i] = continuum_split(opt.dim, model, gauge, r, {ts[i], 0.0});
  });

  auto refine = [&](bool small_part, std::size_t best) {
    auto value = [&](double t) {
      const auto m = continuum_split(opt.dim, model, gauge, r, {t, 0.0}, {}, small_part, !small_part);
      return small_part ? m.small : m.big;
    };
    double best_val = small_part ? vals[best].small : vals[best].big;
    double best_t = ts[best];
    if (opt.refine_iters <= 0 || !std::isfinite(best_val)) return std::pair{best_val, best_t};
    const std::size_t lo_i = best == 0 ? 0 : best - 1;
    const std::size_t hi_i = std::min(best + 1, ts.size() - 1);
    // golden section in u = log(1 + t)
    double a = std::log1p(ts[lo_i]), b = std::log1p(ts[hi_i]);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = value(std::expm1(c)), fd = value(std::expm1(d));
    for (int it = 0; it < opt.refine_iters; ++it) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = value(std::expm1(c));
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = value(std::expm1(d));
      }
    }
    for (auto [u, f] : {std::pair{c, fc}, std::pair{d, fd}})
      if (f > best_val) {
        best_val = f;
        best_t = std::expm1(u);
      }
    return std::pair{best_val, best_t};
  };

  std::size_t i1 = 0, i2 = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(vals[i].small <= vals[i1].small)) i1 = i;
    if (!(vals[i].big <= vals[i2].big)) i2 = i;
  }
  JumpMoments m;
  m.r = r;
  const auto [s1, t1] = refine(true, i1);
  const auto [s2, t2] = refine(false, i2);
  m.M1 = gauge.gamma_sup + s1;
  m.M2 = s2;
  m.M1_d0 = t1;
  m.M2_d0 = t2;
  if (!std::isfinite(m.M1)) m.diagnostic += "small-jump integral diverges; ";
  if (!std::isfinite(m.M2)) m.diagnostic += "big-jump integral diverges; ";
  return m;
}

struct DiscreteMomentOptions {
  bool continuum_completion = false;  // lattices only: add own-cell and out-of-box continuum parts
  unsigned threads = 1;
};

/// Core points of a sampled space (d₀ ≤ inscribed radius − r − F_max), thinned
/// to at most `max_points` evenly spread in d₀ order. Falls back to the origin.
inline std::vector<Index> core_sample(const SampledSpace& space, const AdaptedGauge& gauge, double r,
                                      std::size_t max_points) {
  const double R = space.inscribed_radius();
  const double limit = R - r - gauge.F_max(r, R);
  std::vector<Index> core;
  for (Index i : space.by_distance())
    if (space.d0(i) <= limit) core.push_back(i);
  if (core.empty()) return {space.origin()};
  if (core.size() <= max_points) return core;
  std::vector<Index> out;
  for (std::size_t k = 0; k < max_points; ++k)
    out.push_back(core[k * (core.size() - 1) / std::max<std::size_t>(1, max_points - 1)]);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// M1/M2 as maxima over `x_sample` of the discrete sums against point masses.
inline JumpMoments compute_moments(const SampledSpace& space, const JumpModel& model, const AdaptedGauge& gauge,
                                   double r, const std::vector<Index>& x_sample,
                                   const DiscreteMomentOptions& opt = {}) {
  require(r > 0.0, "compute_moments: r must be positive");
  require(!x_sample.empty(), "compute_moments: empty sample");
  gauge.validate();
  if (opt.continuum_completion)
    require(space.layout() == Layout::lattice, "compute_moments: continuum completion needs a lattice space");
  std::vector<SplitMass> vals(x_sample.size());
  parallel_for(x_sample.size(), opt.threads, [&](std::size_t k) {
    const Index x = x_sample[k];
    space.check_id(x);
    const double d0x = space.d0(x);
    const double rx = gauge.rho(r, d0x);
    SplitMass s;
    space.for_each_other(x, [&](Index y, double d) {
      const double d0y = space.d0(y);
      const double j = model.density(d, d0x, d0y) * space.mass(y);
      if (d <= gauge.F(r, d0x, d0y)) {
        const double dr = rx - gauge.rho(r, d0y);
        s.small += dr * dr * j;
      } else {
        s.big += j;
      }
    });
    if (opt.continuum_completion) {
      const auto c = space.coords(x);
      const std::array<double, 2> xc{c[0], space.dim() == 2 ? c[1] : 0.0};
      const double h = space.spacing();
      const auto cell = continuum_split(space.dim(), model, gauge, r, xc, {RegionKind::cell, 0.5 * h});
      const auto far = continuum_split(space.dim(), model, gauge, r, xc,
                                       {RegionKind::outside_box, space.inscribed_radius() + 0.5 * h});
      s.small += cell.small + far.small;
      s.big += cell.big + far.big;
    }
    vals[k] = s;
  });
  JumpMoments m;
  m.r = r;
  std::size_t i1 = 0, i2 = 0;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    if (vals[k].small > vals[i1].small) i1 = k;
    if (vals[k].big > vals[i2].big) i2 = k;
  }
  m.M1 = gauge.gamma_sup + vals[i1].small;
  m.M2 = vals[i2].big;
  m.M1_point = x_sample[i1];
  m.M2_point = x_sample[i2];
  m.M1_d0 = space.d0(m.M1_point);
  m.M2_d0 = space.d0(m.M2_point);
  if (!std::isfinite(m.M1)) m.diagnostic += "small-jump sum diverges; ";
  return m;
}

/// M1/M2 for a radial kernel against a volume profile: Stieltjes integrals
/// ∫ f dV evaluated piecewise by parts, ∫_(a,b] f dV = f(b)V(b) − f(a)V(a+) − ∫_a^b f'V.
/// Requires the identity gauge with constant threshold F_r = r.
inline JumpMoments compute_moments_radial(const RadialProfile& profile, const JumpModel& model,
                                          const AdaptedGauge& gauge, double r) {
  require(r > 0.0, "compute_moments_radial: r must be positive");
  require(model.is_plain_radial(), "compute_moments_radial: kernel must be radial with no measure change");
  require(gauge.rho_kind == RhoKind::identity && gauge.constant_threshold(),
          "compute_moments_radial: needs the identity gauge with F_r = r");
  const JumpKernel& k = model.kernel();

  std::vector<double> nodes{0.0};
  for (double b : k.breakpoints()) nodes.push_back(b);
  for (double b : profile.breakpoints()) nodes.push_back(b);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  // f = s^power · j(s) on a fixed branch
  auto log_f = [&](double s, int power, bool outer) { return power * std::log(s) + k.log_branch(s, outer); };
  auto piece = [&](double a, double b, int power) {
    const bool outer = k.outer(std::isfinite(b) ? 0.5 * (a + b) : a + 1.0);
    double total = 0.0;
    if (std::isfinite(b)) total += std::exp(log_f(b, power, outer) + profile.log_volume(b));
    if (a > 0.0) total -= std::exp(log_f(a, power, outer) + profile.log_volume_right(a));
    auto integrand = [&](double s) {
      const double slope = power / s + k.log_slope(s, outer);
      return -slope * std::exp(log_f(s, power, outer) + profile.log_volume(s));
    };
    if (std::isfinite(b)) return total + quad::finite(integrand, a, b);
    // Exponential volume against an exponentially tilted kernel cancels only
    // approximately in floating point at huge s, so integrate decades up to a
    // horizon and close with the power-law tail of the integrand.
    const double horizon = 1e8 * std::max(1.0, a);
    double lo = a;
    while (lo < horizon) {
      const double hi = std::min(horizon, std::max(10.0 * lo, lo + 1.0));
      total += quad::finite(integrand, lo, hi);
      lo = hi;
    }
    const double g_hi = integrand(horizon), g_lo = integrand(0.5 * horizon);
    if (g_hi > 0.0 && g_lo > 0.0) {
      const double sigma = std::log(g_hi / g_lo) / std::log(2.0);
      total += sigma < -1.0 ? g_hi * horizon / (-sigma - 1.0) : kInf;
    }
    return total;
  };
  auto log_flux = [&](double s, int power) {
    return std::log(s) + log_f(s, power, k.outer(s)) + profile.log_density(s);
  };

  JumpMoments m;
  m.r = r;
  // small jumps on (0, r]
  const double near_slope = (log_flux(1e-7, 2) - log_flux(1e-8, 2)) / std::log(10.0);
  if (!(near_slope > 1e-9)) {
    m.M1 = kInf;
    m.diagnostic += "small-jump integral diverges at 0; ";
  } else {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 <= nodes.size(); ++i) {
      const double a = nodes[i];
      if (a >= r) break;
      const double b = i + 1 < nodes.size() ? std::min(nodes[i + 1], r) : r;
      acc += piece(a, b, 2);
    }
    m.M1 = gauge.gamma_sup + acc;
  }
  // big jumps on (r, ∞)
  const double S = std::max({10.0 * r, 100.0, 10.0 * nodes.back()});
  const double far_slope = (log_flux(2.0 * S, 0) - log_flux(S, 0)) / std::log(2.0);
  if (!(far_slope < -1e-6)) {
    m.M2 = kInf;
    m.diagnostic += "big-jump integral diverges at infinity; ";
  } else {
    double acc = 0.0;
    double a = r;
    for (double b : nodes)
      if (b > a) {
        acc += piece(a, b, 0);
        a = b;
      }
    acc += piece(a, kInf, 0);
    m.M2 = acc;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Bound optimization

enum class Theorem { infinite_volume, finite_volume };
enum class Verdict { zero, finite, unbounded, inconclusive };

inline const char* to_string(Theorem t) { return t == Theorem::infinite_volume ? "infinite-volume" : "finite-volume"; }
inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::zero:
      return "zero";
    case Verdict::finite:
      return "finite";
    case Verdict::unbounded:
      return "unbounded";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

struct CurvePoint {
  double r = 0.0, M1 = 0.0, M2 = 0.0, bound = 0.0;
};

struct BoundReport {
  Theorem theorem = Theorem::infinite_volume;
  GrowthEstimate growth;
  std::vector<CurvePoint> curve;
  double best_r = 0.0;
  double best_bound = kInf;
  double top_decade_slope = std::numeric_limits<double>::quiet_NaN();
  bool top_decade_monotone = false;
  Verdict verdict = Verdict::inconclusive;
  std::string reason;
};

inline constexpr double kZeroSlope = -0.05;

/// bound(r) = growth²/4·M1(r) + 2·M2(r), minimized over the r grid.
/// Verdict zero requires a nonincreasing top decade with log-log slope ≤ −0.05.
inline BoundReport optimize_bound(Theorem theorem, const GrowthEstimate& growth,
                                  const std::vector<JumpMoments>& moments, bool recurrent = false) {
  require(moments.size() >= 16, "optimize_bound: r grid needs at least 16 points");
  for (std::size_t i = 1; i < moments.size(); ++i)
    require(moments[i].r > moments[i - 1].r, "optimize_bound: r grid must increase");
  if (theorem == Theorem::finite_volume) {
    require(recurrent, "optimize_bound: the finite-volume bound needs a form asserted recurrent");
    require(growth.kind == GrowthKind::nu, "optimize_bound: finite-volume bound needs a nu estimate");
  } else {
    require(growth.kind == GrowthKind::mu, "optimize_bound: infinite-volume bound needs a mu estimate");
  }
  BoundReport rep;
  rep.theorem = theorem;
  rep.growth = growth;
  const double g2 = growth.value * growth.value / 4.0;
  for (const auto& m : moments) {
    CurvePoint p{m.r, m.M1, m.M2, kInf};
    if (growth.finite() && m.finite()) {
      p.bound = g2 * m.M1 + 2.0 * m.M2;
      if (!std::isfinite(p.bound)) p.bound = kInf;
    }
    rep.curve.push_back(p);
    if (p.bound < rep.best_bound) {
      rep.best_bound = p.bound;
      rep.best_r = p.r;
    }
  }
  if (!growth.finite()) {
    rep.verdict = Verdict::inconclusive;
    rep.reason = "growth exponent is not finite";
    return rep;
  }
  if (!std::isfinite(rep.best_bound)) {
    rep.verdict = Verdict::unbounded;
    rep.reason = "every moment curve entry diverges";
    return rep;
  }
  const double r_top = rep.curve.back().r;
  std::vector<double> lx, ly;
  bool monotone = true;
  double prev = kInf;
  for (const auto& p : rep.curve) {
    if (p.r < r_top / 10.0 * (1.0 - 1e-12)) continue;
    if (!std::isfinite(p.bound) || p.bound <= 0.0) {
      monotone = monotone && std::isfinite(p.bound);
      if (p.bound <= 0.0 && std::isfinite(p.bound)) {
        lx.push_back(std::log(p.r));
        ly.push_back(-700.0);
      }
      continue;
    }
    if (p.bound > prev * (1.0 + 1e-9)) monotone = false;
    prev = p.bound;
    lx.push_back(std::log(p.r));
    ly.push_back(std::log(p.bound));
  }
  rep.top_decade_monotone = monotone;
  if (lx.size() >= 3) rep.top_decade_slope = fit_line(lx, ly).slope;
  if (monotone && lx.size() >= 3 && rep.top_decade_slope <= kZeroSlope) {
    rep.verdict = Verdict::zero;
    rep.reason = "bound decreases to zero over the top decade of r";
  } else {
    rep.verdict = Verdict::finite;
    rep.reason = "bound stays bounded away from zero over the top decade of r";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Lyapunov certificate for the time-changed fractional form

/// 𝒜φ_δ(x) = ∫_{|z|>1} (φ_δ(x+z) − φ_δ(x)) |z|^{−(d+α)} dz at |x| = t, φ_δ = (1+|x|²)^{−δ}.
inline double lyapunov_generator(int dim, double alpha, double delta, double t) {
  require(dim == 1 || dim == 2, "lyapunov_generator: dim must be 1 or 2");
  auto phi = [&](double q2) { return std::pow(1.0 + q2, -delta); };
  const double phix = phi(t * t);
  auto ray = [&](double theta) {
    const double c = std::cos(theta);
    auto f = [&](double s) {
      const double q2 = t * t + 2.0 * t * s * c + s * s;
      return (phi(q2) - phix) * std::pow(s, -(dim + alpha)) * (dim == 2 ? s : 1.0);
    };
    std::vector<double> breaks;
    if (c < 0) {
      breaks.push_back(-t * c);
      breaks.push_back(-2.0 * t * c);
    }
    return quad::piecewise(f, 1.0, kInf, breaks);
  };
  if (dim == 1) return ray(0.0) + ray(std::numbers::pi);
  const double pi = std::numbers::pi;
  return 2.0 * (quad::smooth(ray, 0.0, 0.5 * pi, 1e-8) + quad::smooth(ray, 0.5 * pi, pi, 1e-8));
}

struct LyapunovCertificate {
  double delta = 0.0;
  double C0 = 0.0;  // min over the t grid of (−𝒜φ/φ)(t)·(1+t)^α
  double R0 = 0.0;
  double t_max = 0.0;
  double worst_t = 0.0;
};

/// Searches δ for which −𝒜φ_δ/φ_δ ≥ C0 (1+|x|)^{−α} on R0 < |x| ≤ t_max and
/// returns the best certified constant, or nothing when no δ certifies.
inline std::optional<LyapunovCertificate> lyapunov_lower_bound(int dim, double alpha, double p,
                                                               const std::vector<double>& delta_grid,
                                                               double R0 = 5.0, double t_max = 200.0,
                                                               std::size_t n_t = 40) {
  require(dim == 1 || dim == 2, "lyapunov_lower_bound: dim must be 1 or 2");
  require(alpha > 0.0 && alpha < 2.0, "lyapunov_lower_bound: alpha must lie in (0,2)");
  require(dim > alpha, "lyapunov_lower_bound: needs d > alpha");
  require(std::abs(p - alpha) <= 1e-12, "lyapunov_lower_bound: needs p = alpha");
  require(R0 > 0.0 && t_max > R0, "lyapunov_lower_bound: need 0 < R0 < t_max");
  const auto ts = log_grid(R0, t_max, n_t);
  std::optional<LyapunovCertificate> best;
  for (double delta : delta_grid) {
    require(delta > 0.0, "lyapunov_lower_bound: delta must be positive");
    LyapunovCertificate c{delta, kInf, R0, t_max, 0.0};
    for (double t : ts) {
      const double phi = std::pow(1.0 + t * t, -delta);
      const double v = -lyapunov_generator(dim, alpha, delta, t) / phi * std::pow(1.0 + t, alpha);
      if (!(v < c.C0)) continue;
      c.C0 = v;
      c.worst_t = t;
    }
    if (c.C0 > 0.0 && std::isfinite(c.C0) && (!best || c.C0 > best->C0)) best = c;
  }
  return best;
}

}  // namespace specbound
