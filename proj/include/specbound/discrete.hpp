#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "specbound/bounds.hpp"
#include "specbound/core.hpp"
#include "specbound/gauge.hpp"
#include "specbound/kernel.hpp"
#include "specbound/space.hpp"

namespace specbound {

// ---------------------------------------------------------------------------
// Quadratic form

struct FormPair {
  Index i = 0;  // i < j
  Index j = 0;
  double coeff = 0.0;  // μ(x)·J(x,y)·m(y), symmetric
  double d = 0.0;
};

/// ℰ(u) = Σ_{x≠y} (u(x) − u(y))²·coeff(x,y) over ordered pairs, on pairs within `cutoff`.
class DiscreteForm {
 public:
  DiscreteForm(SampledSpace space, std::vector<double> measure, std::vector<FormPair> pairs, double cutoff,
               double dropped_mass_bound)
      : space_(std::move(space)),
        measure_(std::move(measure)),
        pairs_(std::move(pairs)),
        cutoff_(cutoff),
        dropped_(dropped_mass_bound) {}

  const SampledSpace& space() const { return space_; }
  Index size() const { return space_.size(); }
  const std::vector<double>& measure() const { return measure_; }
  const std::vector<FormPair>& pairs() const { return pairs_; }
  double cutoff() const { return cutoff_; }
  /// max_x of the neglected jump rate beyond the cutoff; the energy of u is
  /// underestimated by at most 4·dropped_mass_bound·‖u‖².
  double dropped_mass_bound() const { return dropped_; }

  double energy(std::span<const double> u) const {
    require(u.size() == size(), "energy: vector size mismatch");
    double e = 0.0;
    for (const auto& p : pairs_) {
      const double du = u[p.i] - u[p.j];
      e += du * du * p.coeff;
    }
    return 2.0 * e;
  }

  double norm2(std::span<const double> u) const {
    require(u.size() == size(), "norm2: vector size mismatch");
    double s = 0.0;
    for (Index i = 0; i < size(); ++i) s += u[i] * u[i] * measure_[i];
    return s;
  }

  /// Σ_y coeff(x,y) for every x.
  std::vector<double> degrees() const {
    std::vector<double> deg(size(), 0.0);
    for (const auto& p : pairs_) {
      deg[p.i] += p.coeff;
      deg[p.j] += p.coeff;
    }
    return deg;
  }

  /// Coordinate-format text, both orientations, sorted by (x_id, y_id).
  void write_coo(std::ostream& os) const {
    std::vector<FormPair> all;
    all.reserve(2 * pairs_.size());
    for (const auto& p : pairs_) {
      all.push_back(p);
      all.push_back({p.j, p.i, p.coeff, p.d});
    }
    std::sort(all.begin(), all.end(), [](const FormPair& a, const FormPair& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    const auto old = os.precision(17);
    for (const auto& p : all) os << p.i << ' ' << p.j << ' ' << p.coeff << '\n';
    os.precision(old);
  }

 private:
  SampledSpace space_;
  std::vector<double> measure_;
  std::vector<FormPair> pairs_;
  double cutoff_;
  double dropped_;
};

struct AssemblyOptions {
  double cutoff = kInf;
  std::size_t memory_budget = std::size_t{1} << 30;  // bytes
  unsigned threads = 1;
};

inline DiscreteForm assemble(const SampledSpace& space, const JumpModel& model, const AssemblyOptions& opt = {}) {
  require(opt.cutoff > 0.0, "assemble: cutoff must be positive");
  if (space.layout() != Layout::cloud)
    require(opt.cutoff > space.spacing(), "assemble: cutoff must exceed the lattice spacing");
  const Index n = space.size();

  // Upper estimate of the pair count: every ball is at most as full as the origin's (lattice, tree).
  double est_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n);
  if (space.layout() != Layout::cloud) {
    std::size_t c = 0;
    space.for_each_within(space.origin(), opt.cutoff, [&](Index, double) { ++c; });
    est_pairs = std::min(est_pairs, 0.5 * static_cast<double>(n) * static_cast<double>(c));
  }
  const double est_bytes = est_pairs * static_cast<double>(sizeof(FormPair));
  if (est_bytes > static_cast<double>(opt.memory_budget))
    throw InvalidArgument("assemble: estimated " + std::to_string(static_cast<long long>(est_pairs)) + " pairs (" +
                          std::to_string(static_cast<long long>(est_bytes / 1048576.0)) +
                          " MiB) exceed the memory budget of " + std::to_string(opt.memory_budget / 1048576) +
                          " MiB; lower the cutoff or the space size");

  const auto measure = measure_masses(space, model);
  const unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(std::max<Index>(n, 1))));
  std::vector<std::vector<FormPair>> parts(workers);
  std::vector<double> dropped(n, 0.0);
  const bool finite_cutoff = std::isfinite(opt.cutoff);
  parallel_for(workers, workers, [&](std::size_t w) {
    const Index lo = n * w / workers, hi = n * (w + 1) / workers;
    for (Index x = lo; x < hi; ++x) {
      const double d0x = space.d0(x);
      std::vector<FormPair> row;
      space.for_each_within(x, opt.cutoff, [&](Index y, double d) {
        if (y <= x) return;
        const double c = model.symmetric_density(d, d0x, space.d0(y)) * space.mass(x) * space.mass(y);
        row.push_back({x, y, c, d});
      });
      std::sort(row.begin(), row.end(), [](const FormPair& a, const FormPair& b) { return a.j < b.j; });
      parts[w].insert(parts[w].end(), row.begin(), row.end());
      if (finite_cutoff) {
        double s = 0.0;
        space.for_each_other(x, [&](Index y, double d) {
          if (d > opt.cutoff) s += model.density(d, d0x, space.d0(y)) * space.mass(y);
        });
        dropped[x] = s;
      }
    }
  });
  std::vector<FormPair> pairs;
  pairs.reserve(static_cast<std::size_t>(est_pairs));
  for (auto& p : parts) pairs.insert(pairs.end(), p.begin(), p.end());
  const double dropped_bound = dropped.empty() ? 0.0 : *std::max_element(dropped.begin(), dropped.end());
  return DiscreteForm(space, measure, std::move(pairs), opt.cutoff, dropped_bound);
}

/// ℰ(f)/‖f‖² with respect to the form's measure.
inline double rayleigh(const DiscreteForm& form, std::span<const double> f) {
  const double n2 = form.norm2(f);
  if (!(n2 > 0.0)) throw InvalidArgument("rayleigh: f vanishes on the support of the measure");
  return form.energy(f) / n2;
}

// ---------------------------------------------------------------------------
// Test functions

/// φ(t) = (1 − e^{αt})²/(1 + e^{2αt}), evaluated stably as expm1(−|αt|)²/(1 + e^{−2|αt|}).
struct PhiProfile {
  double alpha = 1.0;
  double operator()(double t) const {
    const double b = std::abs(alpha * t);
    const double e = std::expm1(-b);
    return e * e / (1.0 + std::exp(-2.0 * b));
  }
};

enum class Variant { infinite_volume, finite_volume };

inline const char* to_string(Variant v) { return v == Variant::infinite_volume ? "infinite-volume" : "finite-volume"; }

/// Profile wₙ(t) of the test function for the chosen variant.
inline double w_profile(Variant v, double alpha, double Rn, double t) {
  const double h = 0.5 * Rn;
  if (v == Variant::infinite_volume) {
    if (t <= h) return alpha * h;
    if (t <= Rn) return alpha * (Rn - t);
    return 0.0;
  }
  if (t <= h) return 0.0;
  if (t <= Rn) return alpha * (t - h);
  return alpha * h;
}

struct TestFunction {
  Variant variant = Variant::infinite_volume;
  double r = 0.0, alpha = 0.0, Rn = 0.0;
  std::vector<double> rho, f, g;
};

/// fₙ = e^{wₙ(ρ_r)} − 1 and gₙ = (fₙ + 2)·1_K with K = {ρ_r ≤ Rₙ} (infinite
/// volume) or {ρ_r > Rₙ/2} (finite volume). Requires α > growth/2.
inline TestFunction build_test_function(Variant variant, const AdaptedGauge& gauge, double r, double alpha, double Rn,
                                        const SampledSpace& space, double growth) {
  require(r > 0.0 && Rn > 0.0, "build_test_function: r and R_n must be positive");
  if (!(alpha > 0.5 * growth))
    throw InvalidArgument("build_test_function: the bound needs alpha > growth/2 (alpha = " + std::to_string(alpha) +
                          ", growth = " + std::to_string(growth) + ")");
  TestFunction tf;
  tf.variant = variant;
  tf.r = r;
  tf.alpha = alpha;
  tf.Rn = Rn;
  const Index n = space.size();
  tf.rho.resize(n);
  tf.f.resize(n);
  tf.g.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double t = gauge.rho(r, space.d0(i));
    tf.rho[i] = t;
    tf.f[i] = std::expm1(w_profile(variant, alpha, Rn, t));
    const bool in = variant == Variant::infinite_volume ? t <= Rn : t > 0.5 * Rn;
    tf.g[i] = in ? tf.f[i] + 2.0 : 0.0;
  }
  return tf;
}

/// M1/M2 of the discrete form itself: maxima over all points of the
/// small-jump second moment and big-jump rate against the form's measure.
inline JumpMoments moments_from_form(const DiscreteForm& form, const AdaptedGauge& gauge, double r) {
  const auto& sp = form.space();
  const Index n = form.size();
  std::vector<double> small(n, 0.0), big(n, 0.0);
  for (const auto& p : form.pairs()) {
    const double d0i = sp.d0(p.i), d0j = sp.d0(p.j);
    if (p.d <= gauge.F(r, d0i, d0j)) {
      const double dr = gauge.rho(r, d0i) - gauge.rho(r, d0j);
      small[p.i] += dr * dr * p.coeff;
      small[p.j] += dr * dr * p.coeff;
    } else {
      big[p.i] += p.coeff;
      big[p.j] += p.coeff;
    }
  }
  JumpMoments m;
  m.r = r;
  m.M1_point = m.M2_point = 0;
  double s_max = -1.0, b_max = -1.0;
  for (Index i = 0; i < n; ++i) {
    const double s = small[i] / form.measure()[i], b = big[i] / form.measure()[i];
    if (s > s_max) {
      s_max = s;
      m.M1_point = i;
    }
    if (b > b_max) {
      b_max = b;
      m.M2_point = i;
    }
  }
  m.M1 = gauge.gamma_sup + std::max(0.0, s_max);
  m.M2 = std::max(0.0, b_max);
  m.M1_d0 = sp.d0(m.M1_point);
  m.M2_d0 = sp.d0(m.M2_point);
  return m;
}

struct LemmaReport {
  std::size_t pairs_checked = 0;
  std::size_t pairs_failed = 0;
  double worst_pointwise_slack = kInf;  // min over pairs of rhs − lhs
  double energy = 0.0;
  double integrated_rhs = 0.0;  // α²M1‖g‖² + 2M2‖f‖²
  double integrated_margin = 0.0;
  double norm_ratio = 0.0;  // ‖f‖/‖g‖
  bool pointwise_ok = false;
  bool integrated_ok = false;
};

/// (a) (f(x) − f(y))² ≤ φ(|ρ(x) − ρ(y)|)(g(x)² + g(y)²) on every small-jump
/// pair; (b) ℰ(f) ≤ α²M1‖g‖² + 2M2‖f‖² with moments from the same gauge and r.
inline LemmaReport lemma_check(const DiscreteForm& form, const TestFunction& tf, const JumpMoments& moments,
                               const AdaptedGauge& gauge) {
  require(tf.f.size() == form.size(), "lemma_check: test function size mismatch");
  require(std::abs(moments.r - tf.r) <= 1e-12 * tf.r, "lemma_check: moments were computed at another r");
  const PhiProfile phi{tf.alpha};
  const auto& sp = form.space();
  LemmaReport rep;
  for (const auto& p : form.pairs()) {
    if (!(p.d <= gauge.F(tf.r, sp.d0(p.i), sp.d0(p.j)))) continue;
    ++rep.pairs_checked;
    const double df = tf.f[p.i] - tf.f[p.j];
    const double lhs = df * df;
    const double rhs = phi(tf.rho[p.i] - tf.rho[p.j]) * (tf.g[p.i] * tf.g[p.i] + tf.g[p.j] * tf.g[p.j]);
    rep.worst_pointwise_slack = std::min(rep.worst_pointwise_slack, rhs - lhs);
    if (lhs > rhs * (1.0 + 1e-12) + 1e-300) ++rep.pairs_failed;
  }
  rep.pointwise_ok = rep.pairs_failed == 0;
  const double f2 = form.norm2(tf.f), g2 = form.norm2(tf.g);
  rep.energy = form.energy(tf.f);
  rep.integrated_rhs = tf.alpha * tf.alpha * moments.M1 * g2 + 2.0 * moments.M2 * f2;
  rep.integrated_margin = rep.integrated_rhs - rep.energy;
  rep.integrated_ok = rep.integrated_margin >= -1e-12 * rep.integrated_rhs;
  rep.norm_ratio = g2 > 0.0 ? std::sqrt(f2 / g2) : 0.0;
  return rep;
}

struct LadderRung {
  double Rn = 0.0;
  double norm_ratio = 0.0;  // ‖fₙ‖/‖gₙ‖
  double rayleigh = 0.0;
  double overlap = 0.0;  // |⟨u, fₙ/‖fₙ‖⟩| for a fixed unit probe u
};

/// Test functions along an Rₙ ladder; `probe` must have unit norm (or be empty).
inline std::vector<LadderRung> test_function_ladder(const DiscreteForm& form, Variant variant,
                                                    const AdaptedGauge& gauge, double r, double alpha,
                                                    const std::vector<double>& Rn, double growth,
                                                    std::span<const double> probe = {}) {
  std::vector<LadderRung> out;
  for (double R : Rn) {
    const auto tf = build_test_function(variant, gauge, r, alpha, R, form.space(), growth);
    LadderRung rung;
    rung.Rn = R;
    const double f2 = form.norm2(tf.f), g2 = form.norm2(tf.g);
    rung.norm_ratio = g2 > 0.0 ? std::sqrt(f2 / g2) : 0.0;
    rung.rayleigh = f2 > 0.0 ? form.energy(tf.f) / f2 : kInf;
    if (!probe.empty() && f2 > 0.0) {
      double ip = 0.0;
      for (Index i = 0; i < form.size(); ++i) ip += probe[i] * tf.f[i] * form.measure()[i];
      rung.overlap = std::abs(ip) / std::sqrt(f2);
    }
    out.push_back(rung);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persson exterior eigenvalue

struct SolverOptions {
  double tol = 1e-8;
  std::size_t budget = 10000;  // applications of the shift-inverted operator
  std::uint64_t seed = 0x5eedULL;
  std::size_t krylov_dim = 60;
};

struct PerssonResult {
  double R0 = 0.0;
  double lambda = 0.0;
  double residual = 0.0;  // ‖A v − λ v‖ for the unit Ritz vector
  std::size_t iterations = 0;
  std::size_t exterior_size = 0;
};

/// Exterior indices {d₀ ≥ R0} (nothing excluded at R0 = 0).
inline std::vector<Index> exterior_indices(const SampledSpace& space, double R0) {
  std::vector<Index> ids;
  for (Index i = 0; i < space.size(); ++i)
    if (R0 <= 0.0 || space.d0(i) > R0) ids.push_back(i);
  return ids;
}

/// A = M^{-1/2} L M^{-1/2} restricted to `ids`, with L = 2(D − C). Couplings
/// to excluded points stay in D (the function vanishes there).
inline Eigen::SparseMatrix<double> restricted_operator(const DiscreteForm& form, const std::vector<Index>& ids) {
  const Index n = form.size();
  std::vector<long> pos(n, -1);
  for (std::size_t k = 0; k < ids.size(); ++k) pos[ids[k]] = static_cast<long>(k);
  const auto deg = form.degrees();
  const auto& mu = form.measure();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(ids.size() + 2 * form.pairs().size());
  for (std::size_t k = 0; k < ids.size(); ++k)
    trip.emplace_back(static_cast<int>(k), static_cast<int>(k), 2.0 * deg[ids[k]] / mu[ids[k]]);
  for (const auto& p : form.pairs()) {
    const long a = pos[p.i], b = pos[p.j];
    if (a < 0 || b < 0) continue;
    const double v = -2.0 * p.coeff / std::sqrt(mu[p.i] * mu[p.j]);
    trip.emplace_back(static_cast<int>(a), static_cast<int>(b), v);
    trip.emplace_back(static_cast<int>(b), static_cast<int>(a), v);
  }
  Eigen::SparseMatrix<double> A(static_cast<long>(ids.size()), static_cast<long>(ids.size()));
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

/// Smallest eigenvalue of a symmetric positive semidefinite sparse matrix by
/// shift-invert Lanczos with full reorthogonalization and explicit restarts.
inline PerssonResult smallest_eigenvalue(const Eigen::SparseMatrix<double>& A, const SolverOptions& opt) {
  using Vec = Eigen::VectorXd;
  const long n = A.rows();
  require(n > 0, "smallest_eigenvalue: empty matrix");
  PerssonResult res;
  res.exterior_size = static_cast<std::size_t>(n);
  const double tau = std::max(1e-300, 1e-9 * A.diagonal().mean());
  Eigen::SparseMatrix<double> B = A;
  for (long i = 0; i < n; ++i) B.coeffRef(i, i) += tau;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(B);
  if (ldlt.info() != Eigen::Success) throw SolverError("smallest_eigenvalue: factorization failed", kInf);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  Vec v(n);
  for (long i = 0; i < n; ++i) v[i] = normal(rng);
  v.normalize();

  const long m = std::min<long>(n, static_cast<long>(opt.krylov_dim));
  double theta = 0.0;
  double rel_res = kInf;
  while (res.iterations < opt.budget) {
    Eigen::MatrixXd Q(n, m);
    Vec alpha = Vec::Zero(m), beta = Vec::Zero(m);
    Q.col(0) = v;
    long k = 0;
    for (; k < m && res.iterations < opt.budget; ++k) {
      Vec w = ldlt.solve(Q.col(k));
      ++res.iterations;
      alpha[k] = Q.col(k).dot(w);
      // two passes of classical Gram-Schmidt against the whole basis
      for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).transpose() * w);
      beta[k] = w.norm();
      if (k + 1 < m) {
        if (beta[k] <= 1e-14 * std::abs(alpha[k])) {
          ++k;
          break;
        }
        Q.col(k + 1) = w / beta[k];
      }
    }
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
    for (long i = 0; i < k; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const long top = k - 1;  // largest Ritz value of B^{-1}
    theta = es.eigenvalues()[top];
    const double coupling = std::abs(beta[k - 1] * es.eigenvectors()(k - 1, top));
    v = Q.leftCols(k) * es.eigenvectors().col(top);
    v.normalize();
    rel_res = coupling / std::abs(theta);
    if (rel_res <= opt.tol || k == n) break;
  }
  res.lambda = std::max(0.0, 1.0 / theta - tau);
  res.residual = (A * v - res.lambda * v).norm();
  if (rel_res > opt.tol && static_cast<long>(res.exterior_size) != 0 && res.iterations >= opt.budget)
    throw SolverError("smallest_eigenvalue: no convergence within the iteration budget", res.residual);
  return res;
}

/// inf of ℰ(u)/‖u‖² over u vanishing on {d₀ ≤ R0}.
inline PerssonResult persson_exterior_lambda(const DiscreteForm& form, double R0, const SolverOptions& opt = {}) {
  require(R0 >= 0.0, "persson_exterior_lambda: R0 must be nonnegative");
  const auto ids = exterior_indices(form.space(), R0);
  if (ids.empty()) throw InvalidArgument("persson_exterior_lambda: exterior is empty at R0 = " + std::to_string(R0));
  auto res = smallest_eigenvalue(restricted_operator(form, ids), opt);
  res.R0 = R0;
  return res;
}

inline std::vector<PerssonResult> persson_ladder(const DiscreteForm& form, const std::vector<double>& R0s,
                                                 const SolverOptions& opt = {}) {
  std::vector<PerssonResult> out;
  for (double R0 : R0s) out.push_back(persson_exterior_lambda(form, R0, opt));
  return out;
}

inline void write_ladder_csv(std::ostream& os, const std::vector<PerssonResult>& ladder) {
  const auto old = os.precision(17);
  os << "R0,lambda,residual,iterations,exterior_size\n";
  for (const auto& p : ladder)
    os << p.R0 << ',' << p.lambda << ',' << p.residual << ',' << p.iterations << ',' << p.exterior_size << '\n';
  os.precision(old);
}

}  // namespace specbound
