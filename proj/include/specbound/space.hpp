#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "specbound/core.hpp"
#include "specbound/quadrature.hpp"

namespace specbound {

enum class Layout { lattice, tree, cloud };

/// Finite metric measure space: points with masses, an on-demand distance
/// and a distinguished origin. Immutable after construction.
class SampledSpace {
 public:
  static SampledSpace lattice(int dim, long extent, double spacing) {
    require(dim == 1 || dim == 2, "lattice: dim must be 1 or 2");
    require(extent >= 1, "lattice: extent must be positive");
    require(spacing > 0.0, "lattice: spacing must be positive");
    SampledSpace s;
    s.layout_ = Layout::lattice;
    s.dim_ = dim;
    s.extent_ = extent;
    s.spacing_ = spacing;
    const long side = 2 * extent + 1;
    const Index n = dim == 1 ? static_cast<Index>(side) : static_cast<Index>(side * side);
    s.coords_.resize(n * static_cast<Index>(dim));
    s.mass_.assign(n, std::pow(spacing, dim));
    for (Index i = 0; i < n; ++i) {
      const long k1 = static_cast<long>(i % static_cast<Index>(side)) - extent;
      s.coords_[i * dim] = static_cast<double>(k1) * spacing;
      if (dim == 2) {
        const long k2 = static_cast<long>(i / static_cast<Index>(side)) - extent;
        s.coords_[i * dim + 1] = static_cast<double>(k2) * spacing;
      }
    }
    s.origin_ = dim == 1 ? static_cast<Index>(extent) : static_cast<Index>(extent + extent * side);
    s.finish();
    return s;
  }

  /// Heap-indexed b-ary tree: children of v are b·v+1, ..., b·v+b.
  static SampledSpace tree(int branching, int depth, double edge_length) {
    require(branching >= 2, "tree: branching must be at least 2");
    require(depth >= 1, "tree: depth must be at least 1");
    require(edge_length > 0.0, "tree: edge length must be positive");
    SampledSpace s;
    s.layout_ = Layout::tree;
    s.dim_ = 2;
    s.branching_ = branching;
    s.spacing_ = edge_length;
    Index n = 0, level = 1;
    for (int k = 0; k <= depth; ++k) {
      n += level;
      level *= static_cast<Index>(branching);
    }
    s.level_.resize(n);
    s.coords_.resize(2 * n);
    s.mass_.assign(n, 1.0);
    Index first = 0;
    level = 1;
    for (int k = 0; k <= depth; ++k) {
      for (Index j = 0; j < level; ++j) {
        s.level_[first + j] = k;
        s.coords_[2 * (first + j)] = k;
        s.coords_[2 * (first + j) + 1] = static_cast<double>(j);
      }
      first += level;
      level *= static_cast<Index>(branching);
    }
    s.depth_ = depth;
    s.origin_ = 0;
    s.finish();
    return s;
  }

  /// Explicit coordinates in R^dim with Euclidean distance.
  static SampledSpace cloud(int dim, std::vector<double> coords, std::vector<double> mass, Index origin) {
    require(dim >= 1, "cloud: dim must be positive");
    require(coords.size() == mass.size() * static_cast<Index>(dim), "cloud: coordinate count mismatch");
    require(!mass.empty() && origin < mass.size(), "cloud: origin out of range");
    for (double m : mass) require(m > 0.0, "cloud: masses must be strictly positive");
    SampledSpace s;
    s.layout_ = Layout::cloud;
    s.dim_ = dim;
    s.coords_ = std::move(coords);
    s.mass_ = std::move(mass);
    s.origin_ = origin;
    s.finish();
    return s;
  }

  Index size() const { return mass_.size(); }
  int dim() const { return dim_; }
  Layout layout() const { return layout_; }
  Index origin() const { return origin_; }
  double spacing() const { return spacing_; }
  long extent() const { return extent_; }
  int branching() const { return branching_; }
  int depth() const { return depth_; }
  /// Largest d₀ over the space.
  double radius() const { return radius_; }

  double mass(Index i) const { return mass_[i]; }
  double d0(Index i) const { return d0_[i]; }
  const std::vector<double>& masses() const { return mass_; }
  const std::vector<double>& d0s() const { return d0_; }
  std::span<const double> coords(Index i) const {
    return {coords_.data() + i * static_cast<Index>(dim_), static_cast<Index>(dim_)};
  }

  void check_id(Index i) const {
    if (i >= size()) throw NotFound("unknown point id " + std::to_string(i));
  }

  double dist(Index a, Index b) const {
    if (layout_ == Layout::tree) {
      long steps = 0;
      while (a != b) {
        if (level_[a] >= level_[b]) {
          a = (a - 1) / static_cast<Index>(branching_);
        } else {
          b = (b - 1) / static_cast<Index>(branching_);
        }
        ++steps;
      }
      return spacing_ * static_cast<double>(steps);
    }
    double acc = 0.0;
    for (int k = 0; k < dim_; ++k) {
      const double diff = coords_[a * dim_ + k] - coords_[b * dim_ + k];
      acc += diff * diff;
    }
    return std::sqrt(acc);
  }

  /// Calls fn(y, d) for every y (including x itself) with d(x,y) ≤ r.
  template <class F>
  void for_each_within(Index x, double r, F&& fn) const {
    if (layout_ == Layout::lattice) {
      const long side = 2 * extent_ + 1;
      const long k = static_cast<long>(std::min(std::floor(r / spacing_ + 1e-9), 2.0 * side));
      const long i1 = static_cast<long>(x % static_cast<Index>(side));
      const long lo1 = std::max(0L, i1 - k), hi1 = std::min(side - 1, i1 + k);
      if (dim_ == 1) {
        for (long j = lo1; j <= hi1; ++j) {
          const double d = spacing_ * static_cast<double>(std::labs(j - i1));
          if (d <= r) fn(static_cast<Index>(j), d);
        }
        return;
      }
      const long i2 = static_cast<long>(x / static_cast<Index>(side));
      const long lo2 = std::max(0L, i2 - k), hi2 = std::min(side - 1, i2 + k);
      for (long j2 = lo2; j2 <= hi2; ++j2)
        for (long j1 = lo1; j1 <= hi1; ++j1) {
          const double a = spacing_ * static_cast<double>(j1 - i1);
          const double b = spacing_ * static_cast<double>(j2 - i2);
          const double d = std::sqrt(a * a + b * b);
          if (d <= r) fn(static_cast<Index>(j1 + side * j2), d);
        }
      return;
    }
    if (layout_ == Layout::tree) {
      tree_within(x, static_cast<long>(std::min(std::floor(r / spacing_ + 1e-9), 2.0 * depth_ + 2.0)), fn);
      return;
    }
    for (Index y = 0; y < size(); ++y) {
      const double d = dist(x, y);
      if (d <= r) fn(y, d);
    }
  }

  /// Calls fn(y, d) for every y ≠ x.
  template <class F>
  void for_each_other(Index x, F&& fn) const {
    for_each_within(x, kInf_radius(), [&](Index y, double d) {
      if (y != x) fn(y, d);
    });
  }

  /// Point ids sorted by d₀ then id (deterministic ordering for suffix sums).
  std::vector<Index> by_distance() const {
    std::vector<Index> ids(size());
    for (Index i = 0; i < size(); ++i) ids[i] = i;
    std::stable_sort(ids.begin(), ids.end(), [&](Index a, Index b) { return d0_[a] < d0_[b]; });
    return ids;
  }

  /// Largest r such that the closed ball of radius r around the origin is
  /// not cut by the truncation of the underlying infinite model.
  double inscribed_radius() const {
    if (layout_ == Layout::lattice) return spacing_ * static_cast<double>(extent_);
    if (layout_ == Layout::tree) return spacing_ * depth_;
    return radius_;
  }

  void write_csv(std::ostream& os) const {
    os << "id";
    for (int k = 0; k < dim_; ++k) os << ",x" << k;
    os << ",mass\n";
    os.precision(17);
    for (Index i = 0; i < size(); ++i) {
      os << i;
      for (double c : coords(i)) os << ',' << c;
      os << ',' << mass_[i] << '\n';
    }
  }

 private:
  SampledSpace() = default;

  double kInf_radius() const { return std::numeric_limits<double>::max(); }

  void finish() {
    d0_.resize(size());
    radius_ = 0.0;
    for (Index i = 0; i < size(); ++i) {
      d0_[i] = dist(origin_, i);
      radius_ = std::max(radius_, d0_[i]);
    }
  }

  template <class F>
  void tree_within(Index x, long k, F&& fn) const {
    const Index b = static_cast<Index>(branching_);
    // Walk up j steps to ancestor a; descend into every child subtree of a
    // except the one we came from, down to k - j further levels.
    Index node = x, from = static_cast<Index>(-1);
    for (long j = 0; j <= k; ++j) {
      fn(node, spacing_ * static_cast<double>(j));
      const long budget = std::min<long>(k - j, depth_ - level_[node]);
      for (Index c = 1; c <= b && budget >= 1; ++c) {
        const Index child = b * node + c;
        if (child == from || child >= size()) continue;
        Index lo = child, width = 1;
        for (long lev = 1; lev <= budget && lo < size(); ++lev) {
          for (Index t = lo; t < lo + width && t < size(); ++t)
            fn(t, spacing_ * static_cast<double>(j + lev));
          lo = b * lo + 1;
          width *= b;
        }
      }
      if (node == 0) break;
      from = node;
      node = (node - 1) / b;
    }
  }

  Layout layout_ = Layout::cloud;
  int dim_ = 1;
  long extent_ = 0;
  double spacing_ = 0.0;
  int branching_ = 0;
  int depth_ = 0;
  Index origin_ = 0;
  double radius_ = 0.0;
  std::vector<double> coords_;
  std::vector<double> mass_;
  std::vector<double> d0_;
  std::vector<int> level_;
};

struct Ball {
  Index center = 0;
  double radius = 0.0;
  bool contains(const SampledSpace& space, Index y) const { return space.dist(center, y) <= radius; }
};

inline SampledSpace make_lattice_space(int dim, long extent, double spacing) {
  return SampledSpace::lattice(dim, extent, spacing);
}

inline SampledSpace make_exponential_tree_space(int branching, int depth, double edge_length) {
  return SampledSpace::tree(branching, depth, edge_length);
}

/// Symmetric 1-D cloud: uniform `inner_spacing` out to `inner_extent`, then
/// `points` geometrically spaced nodes per side out to `extent`. Each node
/// carries the length of its Voronoi cell, so far-field cells stay cheap.
inline SampledSpace make_graded_line(double inner_spacing, double inner_extent, double extent, std::size_t points) {
  require(inner_spacing > 0.0 && inner_extent >= inner_spacing, "graded line: need 0 < inner_spacing <= inner_extent");
  require(extent > inner_extent, "graded line: extent must exceed inner_extent");
  require(points >= 2, "graded line: needs at least 2 geometric points per side");
  std::vector<double> pos;
  const auto n_inner = static_cast<long>(std::floor(inner_extent / inner_spacing + 1e-9));
  for (long k = 1; k < n_inner; ++k) pos.push_back(inner_spacing * static_cast<double>(k));
  const double ratio = std::pow(extent / inner_extent, 1.0 / static_cast<double>(points - 1));
  double x = inner_extent;
  for (std::size_t k = 0; k < points; ++k, x *= ratio) pos.push_back(k + 1 == points ? extent : x);
  std::vector<double> coords;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) coords.push_back(-*it);
  coords.push_back(0.0);
  for (double p : pos) coords.push_back(p);
  const std::size_t n = coords.size();
  std::vector<double> mass(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? 0.5 * (coords[i] - coords[i - 1]) : 0.5 * (coords[1] - coords[0]);
    const double right = i + 1 < n ? 0.5 * (coords[i + 1] - coords[i]) : 0.5 * (coords[n - 1] - coords[n - 2]);
    mass[i] = left + right;
  }
  return SampledSpace::cloud(1, std::move(coords), std::move(mass), pos.size());
}

inline double ball_volume(const SampledSpace& space, Index center, double r) {
  space.check_id(center);
  require(r >= 0.0, "ball_volume: radius must be nonnegative");
  double total = 0.0;
  space.for_each_within(center, r, [&](Index y, double) { total += space.mass(y); });
  return total;
}

/// Fraction of sampled triples violating the triangle inequality beyond a
/// relative rounding slack.
inline double triangle_violation_rate(const SampledSpace& space, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(0, space.size() - 1);
  std::size_t bad = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Index a = pick(rng), b = pick(rng), c = pick(rng);
    const double ab = space.dist(a, b), bc = space.dist(b, c), ac = space.dist(a, c);
    if (ac > (ab + bc) * (1.0 + 1e-12) + 1e-300) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(samples);
}

enum class ProfileKind { polynomial, two_regime, exponential, hyperbolic, custom };

/// Analytic volume function R ↦ V(R) of balls around any point.
class RadialProfile {
 public:
  static RadialProfile polynomial(double C1, double eta) {
    require(C1 > 0.0 && eta > 0.0, "polynomial profile: need C1 > 0 and eta > 0");
    RadialProfile p;
    p.kind_ = ProfileKind::polynomial;
    p.C1_ = C1;
    p.eta_ = eta;
    return p;
  }

  /// C1·R^η on [0,1] and C2·e^{κR} beyond. C2 ≤ 0 selects C1·e^{-κ} (continuous at 1).
  static RadialProfile two_regime(double C1, double eta, double C2, double kappa) {
    require(C1 > 0.0 && eta > 0.0 && kappa > 0.0, "two-regime profile: need C1, eta, kappa > 0");
    RadialProfile p;
    p.kind_ = ProfileKind::two_regime;
    p.C1_ = C1;
    p.eta_ = eta;
    p.kappa_ = kappa;
    p.C2_ = C2 > 0.0 ? C2 : C1 * std::exp(-kappa);
    return p;
  }

  /// C·(e^{κR} − 1).
  static RadialProfile exponential(double C, double kappa) {
    require(C > 0.0 && kappa > 0.0, "exponential profile: need C > 0 and kappa > 0");
    RadialProfile p;
    p.kind_ = ProfileKind::exponential;
    p.C1_ = C;
    p.kappa_ = kappa;
    return p;
  }

  /// Volume of hyperbolic balls: ω_n ∫_0^R sinh(t)^{n-1} dt.
  static RadialProfile hyperbolic(int n) {
    require(n >= 2, "hyperbolic profile: need n >= 2");
    RadialProfile p;
    p.kind_ = ProfileKind::hyperbolic;
    p.n_ = n;
    p.C1_ = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
    return p;
  }

  /// Piecewise-linear interpolation of (R_i, V_i); constant beyond the last node.
  static RadialProfile custom(std::vector<double> radii, std::vector<double> volumes, double total = kInf) {
    require(radii.size() == volumes.size() && radii.size() >= 2, "custom profile: need matching tables");
    for (std::size_t i = 1; i < radii.size(); ++i) {
      require(radii[i] > radii[i - 1], "custom profile: radii must increase");
      require(volumes[i] >= volumes[i - 1], "custom profile: volumes must be nondecreasing");
    }
    require(radii.front() >= 0.0 && volumes.front() >= 0.0, "custom profile: negative entries");
    RadialProfile p;
    p.kind_ = ProfileKind::custom;
    p.radii_ = std::move(radii);
    p.volumes_ = std::move(volumes);
    p.total_ = total;
    return p;
  }

  ProfileKind kind() const { return kind_; }
  double total_volume() const {
    if (kind_ == ProfileKind::custom) return total_;
    return kInf;
  }
  int n() const { return n_; }
  double eta() const { return eta_; }
  double kappa() const { return kappa_; }
  double C1() const { return C1_; }
  double C2() const { return C2_; }

  double volume(double R) const {
    if (R <= 0.0) return 0.0;
    return std::exp(log_volume(R));
  }

  /// log V(R), accurate where V itself overflows.
  double log_volume(double R) const {
    if (R <= 0.0) return -kInf;
    switch (kind_) {
      case ProfileKind::polynomial:
        return std::log(C1_) + eta_ * std::log(R);
      case ProfileKind::two_regime:
        return R <= 1.0 ? std::log(C1_) + eta_ * std::log(R) : std::log(C2_) + kappa_ * R;
      case ProfileKind::exponential:
        return std::log(C1_) + kappa_ * R + std::log(-std::expm1(-kappa_ * R));
      case ProfileKind::hyperbolic: {
        // sinh(t)^{n-1} = e^{(n-1)R} (sinh(t) e^{-R})^{n-1}
        const int m = n_ - 1;
        auto scaled = [&](double t) {
          const double v = 0.5 * (std::exp(t - R) - std::exp(-t - R));
          return std::pow(v, m);
        };
        const double I = quad::finite(scaled, 0.0, R, 1e-12);
        return std::log(C1_) + m * R + std::log(I);
      }
      case ProfileKind::custom: {
        const double v = interpolate(R);
        return v > 0.0 ? std::log(v) : -kInf;
      }
    }
    return -kInf;
  }

  /// V'(R) (right derivative for piecewise tables).
  double density(double R) const {
    if (R < 0.0) return 0.0;
    switch (kind_) {
      case ProfileKind::polynomial:
        return C1_ * eta_ * std::pow(R, eta_ - 1.0);
      case ProfileKind::two_regime:
        return R <= 1.0 ? C1_ * eta_ * std::pow(R, eta_ - 1.0) : C2_ * kappa_ * std::exp(kappa_ * R);
      case ProfileKind::exponential:
        return C1_ * kappa_ * std::exp(kappa_ * R);
      case ProfileKind::hyperbolic:
        return C1_ * std::pow(std::sinh(R), n_ - 1);
      case ProfileKind::custom: {
        if (R >= radii_.back()) return 0.0;
        auto it = std::upper_bound(radii_.begin(), radii_.end(), R);
        if (it == radii_.begin()) return 0.0;
        const std::size_t i = static_cast<std::size_t>(it - radii_.begin()) - 1;
        return (volumes_[i + 1] - volumes_[i]) / (radii_[i + 1] - radii_[i]);
      }
    }
    return 0.0;
  }

  /// log V'(R), finite where V' overflows.
  double log_density(double R) const {
    switch (kind_) {
      case ProfileKind::two_regime:
        if (R > 1.0) return std::log(C2_ * kappa_) + kappa_ * R;
        break;
      case ProfileKind::exponential:
        return std::log(C1_ * kappa_) + kappa_ * R;
      case ProfileKind::hyperbolic:
        if (R > 20.0) return std::log(C1_) + (n_ - 1) * (R - std::numbers::ln2 + std::log1p(-std::exp(-2.0 * R)));
        break;
      default:
        break;
    }
    const double v = density(R);
    return v > 0.0 ? std::log(v) : -kInf;
  }

  /// log of the right limit V(R+); differs from log_volume only at jumps.
  double log_volume_right(double R) const {
    if (kind_ == ProfileKind::two_regime && R == 1.0) return std::log(C2_) + kappa_;
    return log_volume(R);
  }

  /// Radii at which V or V' is not smooth.
  std::vector<double> breakpoints() const {
    if (kind_ == ProfileKind::two_regime) return {1.0};
    if (kind_ == ProfileKind::custom) return radii_;
    return {};
  }

 private:
  double interpolate(double R) const {
    if (R <= radii_.front()) return volumes_.front() * (radii_.front() > 0 ? R / radii_.front() : 1.0);
    if (R >= radii_.back()) return volumes_.back();
    auto it = std::upper_bound(radii_.begin(), radii_.end(), R);
    const std::size_t i = static_cast<std::size_t>(it - radii_.begin()) - 1;
    const double w = (R - radii_[i]) / (radii_[i + 1] - radii_[i]);
    return volumes_[i] + w * (volumes_[i + 1] - volumes_[i]);
  }

  ProfileKind kind_ = ProfileKind::polynomial;
  double C1_ = 1.0, eta_ = 1.0, C2_ = 1.0, kappa_ = 1.0;
  int n_ = 0;
  std::vector<double> radii_, volumes_;
  double total_ = kInf;
};

/// Lebesgue volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

}  // namespace specbound
