#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "specbound/core.hpp"
#include "specbound/space.hpp"

namespace specbound {

enum class KernelFamily { fractional, two_regime, exp_tilted, coeff_growth, hyperbolic };

/// c(x,y) = {(1+d₀x)^p + (1+d₀y)^p} on d ≤ 1 and the same with q on d > 1.
struct CoefficientField {
  double p = 0.0;
  double q = 0.0;

  double operator()(double d, double d0x, double d0y) const {
    const double e = d <= 1.0 ? p : q;
    return std::pow(1.0 + d0x, e) + std::pow(1.0 + d0y, e);
  }
};

/// Parameters of every family; only the fields of the selected family are read.
struct KernelParams {
  double eta = 1.0;
  double alpha = 1.0;
  double C = 1.0;
  double beta1 = 1.0, beta2 = 1.0;
  double C2 = 1.0, C3 = 1.0, C4 = 1.0;
  double lambda = 1.0;
  double beta = 1.0;
  double p = 0.0, q = 0.0;
  int n = 2;
  double upper_constant = 1.0;
  double lower_constant = 1.0;
  bool use_lower_profile = false;
};

/// Symmetric jump density J(x,y) with respect to m. Every family is a
/// radial profile in d(x,y); coeff-growth multiplies it by c(x,y).
class JumpKernel {
 public:
  JumpKernel(KernelFamily family, KernelParams params) : family_(family), k_(params) { validate(); }

  static JumpKernel fractional(double eta, double alpha, double C = 1.0) {
    KernelParams p;
    p.eta = eta;
    p.alpha = alpha;
    p.C = C;
    return {KernelFamily::fractional, p};
  }
  static JumpKernel two_regime(double eta, double beta1, double beta2, double C2 = 1.0, double C3 = 1.0) {
    KernelParams p;
    p.eta = eta;
    p.beta1 = beta1;
    p.beta2 = beta2;
    p.C2 = C2;
    p.C3 = C3;
    return {KernelFamily::two_regime, p};
  }
  static JumpKernel exp_tilted(double eta, double beta1, double beta2, double lambda, double C3 = 1.0,
                               double C4 = 1.0) {
    KernelParams p;
    p.eta = eta;
    p.beta1 = beta1;
    p.beta2 = beta2;
    p.lambda = lambda;
    p.C3 = C3;
    p.C4 = C4;
    return {KernelFamily::exp_tilted, p};
  }
  static JumpKernel coeff_growth(double eta, double beta, double p_exp, double q_exp, double C2 = 1.0) {
    KernelParams p;
    p.eta = eta;
    p.beta = beta;
    p.p = p_exp;
    p.q = q_exp;
    p.C2 = C2;
    return {KernelFamily::coeff_growth, p};
  }
  static JumpKernel hyperbolic(int n, double alpha, double upper = 1.0, double lower = 1.0, bool use_lower = false) {
    KernelParams p;
    p.n = n;
    p.alpha = alpha;
    p.upper_constant = upper;
    p.lower_constant = lower;
    p.use_lower_profile = use_lower;
    return {KernelFamily::hyperbolic, p};
  }

  KernelFamily family() const { return family_; }
  const KernelParams& params() const { return k_; }
  bool is_radial() const { return family_ != KernelFamily::coeff_growth; }
  CoefficientField coefficient() const { return {k_.p, k_.q}; }

  /// Scaled copy: every density multiplied by `factor`.
  JumpKernel scaled(double factor) const {
    require(factor > 0.0, "scaled: factor must be positive");
    JumpKernel out = *this;
    out.scale_ *= factor;
    return out;
  }

  /// Radial profile j(s) with J(x,y) = j(d)·c(x,y) (c ≡ 1 for radial families).
  double radial(double s) const {
    if (!(s > 0.0)) return kInf;
    return std::exp(log_radial(s));
  }

  double log_radial(double s) const { return log_branch(s, outer(s)); }

  /// Whether s lies on the far (d > 1) branch.
  bool outer(double s) const { return family_ == KernelFamily::hyperbolic ? s >= 1.0 : s > 1.0; }

  /// log j(s) from the near (outer = false) or far branch formula.
  double log_branch(double s, bool outer) const {
    const double ls = std::log(s);
    double v = 0.0;
    switch (family_) {
      case KernelFamily::fractional:
        v = std::log(k_.C) - (k_.eta + k_.alpha) * ls;
        break;
      case KernelFamily::two_regime:
        v = !outer ? std::log(k_.C2) - (k_.eta + k_.beta1) * ls : std::log(k_.C3) - (k_.eta + k_.beta2) * ls;
        break;
      case KernelFamily::exp_tilted:
        v = !outer ? std::log(k_.C3) - (k_.eta + k_.beta1) * ls : std::log(k_.C4) - k_.lambda * s - k_.beta2 * ls;
        break;
      case KernelFamily::coeff_growth:
        v = std::log(k_.C2) - (k_.eta + k_.beta) * ls;
        break;
      case KernelFamily::hyperbolic: {
        const double c = std::log(k_.use_lower_profile ? k_.lower_constant : k_.upper_constant);
        v = !outer ? c - (k_.n + k_.alpha) * ls
                   : c - (k_.n - 1) * s - k_.alpha * ls - std::log1p(std::pow(s, 1.0 - 0.5 * k_.alpha));
        break;
      }
    }
    return v + std::log(scale_);
  }

  double branch(double s, bool outer) const { return std::exp(log_branch(s, outer)); }

  /// d/ds log j(s) on the chosen branch.
  double log_slope(double s, bool outer) const {
    switch (family_) {
      case KernelFamily::fractional:
        return -(k_.eta + k_.alpha) / s;
      case KernelFamily::two_regime:
        return !outer ? -(k_.eta + k_.beta1) / s : -(k_.eta + k_.beta2) / s;
      case KernelFamily::exp_tilted:
        return !outer ? -(k_.eta + k_.beta1) / s : -k_.lambda - k_.beta2 / s;
      case KernelFamily::coeff_growth:
        return -(k_.eta + k_.beta) / s;
      case KernelFamily::hyperbolic: {
        if (!outer) return -(k_.n + k_.alpha) / s;
        const double e = 1.0 - 0.5 * k_.alpha;
        const double t = std::pow(s, e);
        return -(k_.n - 1) - k_.alpha / s - e * t / (s * (1.0 + t));
      }
    }
    return 0.0;
  }

  double eval(double d, double d0x, double d0y) const {
    const double j = radial(d);
    return family_ == KernelFamily::coeff_growth ? j * coefficient()(d, d0x, d0y) : j;
  }

  /// Radii where the profile switches branch.
  std::vector<double> breakpoints() const { return {1.0}; }

 private:
  void validate() const {
    switch (family_) {
      case KernelFamily::fractional:
        require(k_.eta > 0 && k_.alpha > 0 && k_.C > 0, "fractional kernel: need eta, alpha, C > 0");
        break;
      case KernelFamily::two_regime:
        require(k_.eta > 0 && k_.beta1 > 0 && k_.beta1 < 2 && k_.beta2 > 0 && k_.C2 > 0 && k_.C3 > 0,
                "two-regime kernel: need eta > 0, 0 < beta1 < 2, beta2 > 0, C2, C3 > 0");
        break;
      case KernelFamily::exp_tilted:
        require(k_.eta > 0 && k_.beta1 > 0 && k_.beta1 < 2 && k_.beta2 > 0 && k_.lambda > 0 && k_.C3 > 0 &&
                    k_.C4 > 0,
                "exp-tilted kernel: need eta > 0, 0 < beta1 < 2, beta2, lambda, C3, C4 > 0");
        break;
      case KernelFamily::coeff_growth:
        require(k_.p >= 0 && k_.p <= 2, "coeff-growth kernel: need p in [0,2]");
        require(k_.q >= 0 && k_.q < 2, "coeff-growth kernel: need q in [0,2)");
        require(k_.beta > k_.q && k_.beta < 2, "coeff-growth kernel: need q < beta < 2");
        require(k_.eta > 0 && k_.C2 > 0, "coeff-growth kernel: need eta, C2 > 0");
        break;
      case KernelFamily::hyperbolic:
        require(k_.n >= 2 && k_.alpha > 0 && k_.alpha < 2, "hyperbolic kernel: need n >= 2, 0 < alpha < 2");
        require(k_.upper_constant > 0 && k_.lower_constant > 0, "hyperbolic kernel: constants must be positive");
        break;
    }
  }

  KernelFamily family_;
  KernelParams k_;
  double scale_ = 1.0;
};

/// Kernel density at a pair of space points; the diagonal is excluded.
inline double eval_kernel(const JumpKernel& k, const SampledSpace& space, Index x, Index y) {
  space.check_id(x);
  space.check_id(y);
  if (x == y) throw InvalidArgument("eval_kernel: x = y (diagonal excluded)");
  return k.eval(space.dist(x, y), space.d0(x), space.d0(y));
}

/// Σ_{d(x,y) > threshold} J(x,y)·mass(y).
inline double big_jump_mass(const JumpKernel& k, const SampledSpace& space, Index x, double threshold) {
  space.check_id(x);
  require(threshold > 0.0, "big_jump_mass: threshold must be positive");
  double total = 0.0;
  space.for_each_other(x, [&](Index y, double d) {
    if (d > threshold) total += k.eval(d, space.d0(x), space.d0(y)) * space.mass(y);
  });
  return total;
}

enum class PotentialKind { power, log_power, log_loglog, custom };

/// Increasing potential V on [0, ∞).
class Potential {
 public:
  static Potential power(double a, double gamma) {
    require(a > 0 && gamma > 0, "power potential: need a, gamma > 0");
    Potential v;
    v.kind_ = PotentialKind::power;
    v.a_ = a;
    v.b_ = gamma;
    return v;
  }
  static Potential log_power(double theta) {
    require(theta > 0, "log-power potential: need theta > 0");
    Potential v;
    v.kind_ = PotentialKind::log_power;
    v.a_ = theta;
    return v;
  }
  /// θ·log(1+t) − κ·log log(e+t).
  static Potential log_loglog(double theta, double kappa) {
    require(theta > 0 && kappa >= 0 && kappa <= theta, "log-loglog potential: need 0 <= kappa <= theta");
    Potential v;
    v.kind_ = PotentialKind::log_loglog;
    v.a_ = theta;
    v.b_ = kappa;
    return v;
  }
  static Potential custom(std::vector<double> t, std::vector<double> values) {
    require(t.size() == values.size() && t.size() >= 2, "custom potential: need matching tables");
    for (std::size_t i = 1; i < t.size(); ++i) require(t[i] > t[i - 1], "custom potential: nodes must increase");
    Potential v;
    v.kind_ = PotentialKind::custom;
    v.t_ = std::move(t);
    v.v_ = std::move(values);
    return v;
  }

  PotentialKind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }

  double operator()(double t) const {
    t = std::max(t, 0.0);
    switch (kind_) {
      case PotentialKind::power:
        return a_ * std::pow(t, b_);
      case PotentialKind::log_power:
        return a_ * std::log1p(t);
      case PotentialKind::log_loglog:
        return a_ * std::log1p(t) - b_ * std::log(std::log(std::numbers::e + t));
      case PotentialKind::custom: {
        if (t <= t_.front()) return v_.front();
        if (t >= t_.back()) {
          const std::size_t n = t_.size();
          const double slope = (v_[n - 1] - v_[n - 2]) / (t_[n - 1] - t_[n - 2]);
          return v_.back() + slope * (t - t_.back());
        }
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - t_.begin()) - 1;
        const double w = (t - t_[i]) / (t_[i + 1] - t_[i]);
        return v_[i] + w * (v_[i + 1] - v_[i]);
      }
    }
    return 0.0;
  }

  /// Sampled monotonicity check on [0, t_max].
  bool nondecreasing_on(double t_max, std::size_t samples = 2000) const {
    double prev = (*this)(0.0);
    for (std::size_t i = 1; i <= samples; ++i) {
      const double v = (*this)(t_max * static_cast<double>(i) / static_cast<double>(samples));
      if (v < prev - 1e-12 * std::abs(prev)) return false;
      prev = v;
    }
    return true;
  }

  /// Worst ratio e^{V(r)−V(s)} / (C2 (r/s)^δ) over grid pairs s < r; ≤ 1 certifies.
  double ratio_worst(double delta, double C2, const std::vector<double>& grid) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (std::size_t j = i + 1; j < grid.size(); ++j) {
        const double s = grid[i], r = grid[j];
        const double lhs = (*this)(r) - (*this)(s);
        const double rhs = std::log(C2) + delta * std::log(r / s);
        worst = std::max(worst, std::exp(lhs - rhs));
      }
    return worst;
  }

  bool ratio_holds(double delta, double C2, const std::vector<double>& grid) const {
    return ratio_worst(delta, C2, grid) <= 1.0 + 1e-12;
  }

 private:
  PotentialKind kind_ = PotentialKind::log_power;
  double a_ = 1.0, b_ = 0.0;
  std::vector<double> t_, v_;
};

/// w(x) = (1 + d₀(x))^p.
struct TimeChangeWeight {
  double p = 1.0;
  double operator()(double d0) const { return std::pow(1.0 + d0, p); }
};

enum class Modifier { none, time_change, tilted };

/// Kernel together with the reference measure of the L² space. Densities
/// are against m(dy); the L² measure is measure_weight(d₀)·m.
class JumpModel {
 public:
  explicit JumpModel(JumpKernel kernel) : kernel_(std::move(kernel)) {}

  static JumpModel time_changed(JumpKernel kernel, TimeChangeWeight w) {
    require(w.p > 0.0, "time change: need p > 0");
    JumpModel m(std::move(kernel));
    m.modifier_ = Modifier::time_change;
    m.weight_ = w;
    return m;
  }
  static JumpModel tilted(JumpKernel kernel, Potential v) {
    JumpModel m(std::move(kernel));
    m.modifier_ = Modifier::tilted;
    m.potential_ = std::move(v);
    return m;
  }

  const JumpKernel& kernel() const { return kernel_; }
  Modifier modifier() const { return modifier_; }
  const TimeChangeWeight& weight() const { return weight_; }
  const Potential& potential() const { return potential_; }
  bool is_plain_radial() const { return modifier_ == Modifier::none && kernel_.is_radial(); }

  JumpModel scaled(double factor) const {
    JumpModel out = *this;
    out.kernel_ = kernel_.scaled(factor);
    return out;
  }

  /// Density of the L² measure with respect to m at distance d₀ from o.
  double measure_weight(double d0) const {
    switch (modifier_) {
      case Modifier::none:
        return 1.0;
      case Modifier::time_change:
        return 1.0 / weight_(d0);
      case Modifier::tilted:
        return std::exp(-potential_(d0));
    }
    return 1.0;
  }

  /// Jump density J(x, dy)/m(dy) seen from x.
  double density(double d, double d0x, double d0y) const {
    const double j = kernel_.eval(d, d0x, d0y);
    switch (modifier_) {
      case Modifier::none:
        return j;
      case Modifier::time_change:
        return weight_(d0x) * j;
      case Modifier::tilted:
        return 0.5 * (1.0 + std::exp(potential_(d0x) - potential_(d0y))) * j;
    }
    return j;
  }

  /// measure_weight(x)·density(x,y): symmetric in (x,y).
  double symmetric_density(double d, double d0x, double d0y) const {
    const double j = kernel_.eval(d, d0x, d0y);
    switch (modifier_) {
      case Modifier::none:
      case Modifier::time_change:
        return j;
      case Modifier::tilted:
        return 0.5 * (std::exp(-potential_(d0x)) + std::exp(-potential_(d0y))) * j;
    }
    return j;
  }

 private:
  JumpKernel kernel_;
  Modifier modifier_ = Modifier::none;
  TimeChangeWeight weight_{};
  Potential potential_ = Potential::log_power(1.0);
};

/// Tilted density ½(1 + e^{V(d₀x)−V(d₀y)})·J(x,y) against m(dy).
inline double tilted_kernel(const JumpKernel& k, const Potential& v, double d, double d0x, double d0y) {
  return 0.5 * (1.0 + std::exp(v(d0x) - v(d0y))) * k.eval(d, d0x, d0y);
}

}  // namespace specbound
