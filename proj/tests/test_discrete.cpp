#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "specbound/discrete.hpp"

using namespace specbound;

namespace {

// Ordered-pair double sum straight from the definition.
double brute_energy(const SampledSpace& s, const JumpModel& m, const std::vector<double>& u) {
  double e = 0.0;
  for (Index x = 0; x < s.size(); ++x)
    for (Index y = 0; y < s.size(); ++y) {
      if (x == y) continue;
      const double du = u[x] - u[y];
      e += du * du * m.symmetric_density(s.dist(x, y), s.d0(x), s.d0(y)) * s.mass(x) * s.mass(y);
    }
  return e;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> u(n);
  for (auto& v : u) v = nd(rng);
  return u;
}

AdaptedGauge power_gauge(double delta) {
  AdaptedGauge g;
  g.rho_kind = RhoKind::power_shift;
  g.delta = delta;
  g.f_kind = FKind::power_max;
  return g;
}

}  // namespace

TEST(Energy, ThreePointByHand) {
  const auto s = make_lattice_space(1, 1, 1.0);
  const auto form = assemble(s, JumpModel(JumpKernel::fractional(1, 1)));
  // unordered pairs: (−1,0) J=1, (0,1) J=1, (−1,1) J=1/4; the ordered sum doubles them
  const std::vector<double> u{1.0, 2.0, 4.0};
  EXPECT_DOUBLE_EQ(form.energy(u), 2.0 * (1.0 + 4.0 + 9.0 / 4.0));
  const std::vector<double> spike{0.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(rayleigh(form, spike), 4.0);
}

TEST(Energy, ConstantsHaveZeroEnergy) {
  const auto s = make_exponential_tree_space(2, 5, 1.0);
  const auto form = assemble(s, JumpModel(JumpKernel::fractional(1, 0.5)));
  EXPECT_EQ(form.energy(std::vector<double>(s.size(), 3.7)), 0.0);
}

TEST(Energy, MatchesBruteForceSum) {
  const std::vector<SampledSpace> spaces{make_lattice_space(1, 80, 0.5), make_lattice_space(2, 6, 1.0),
                                         make_exponential_tree_space(2, 6, 1.0), make_graded_line(0.5, 5.0, 100.0, 30)};
  const std::vector<JumpModel> models{
      JumpModel(JumpKernel::fractional(1, 1.2)),
      JumpModel(JumpKernel::coeff_growth(1.0, 1.0, 1.5, 0.3)),
      JumpModel::time_changed(JumpKernel::fractional(2, 1), {0.5}),
      JumpModel::tilted(JumpKernel::fractional(1, 1), Potential::log_loglog(2.0, 1.0)),
  };
  std::uint64_t seed = 1;
  for (const auto& s : spaces) {
    ASSERT_LE(s.size(), 200u);
    for (const auto& m : models) {
      const auto u = random_vector(s.size(), seed++);
      const double want = brute_energy(s, m, u);
      const double got = assemble(s, m, {kInf, std::size_t{1} << 30, 2}).energy(u);
      EXPECT_NEAR(got, want, 1e-10 * want);
    }
  }
}

TEST(Energy, CutoffUnderestimateIsBounded) {
  const auto s = make_lattice_space(1, 100, 0.5);
  const JumpModel m(JumpKernel::fractional(1, 0.8));
  const auto full = assemble(s, m);
  const auto cut = assemble(s, m, {5.0, std::size_t{1} << 30, 1});
  EXPECT_GT(cut.dropped_mass_bound(), 0.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto u = random_vector(s.size(), 100 + seed);
    const double gap = full.energy(u) - cut.energy(u);
    EXPECT_GE(gap, -1e-12 * full.energy(u));
    EXPECT_LE(gap, 4.0 * cut.dropped_mass_bound() * full.norm2(u) * (1 + 1e-12));
  }
}

TEST(Energy, AssemblyIsThreadIndependent) {
  const auto s = make_lattice_space(2, 8, 1.0);
  const JumpModel m(JumpKernel::fractional(2, 1));
  std::ostringstream a, b;
  assemble(s, m, {kInf, std::size_t{1} << 30, 1}).write_coo(a);
  assemble(s, m, {kInf, std::size_t{1} << 30, 4}).write_coo(b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Rayleigh, ScaleInvariantAndNonnegative) {
  const auto s = make_lattice_space(1, 50, 1.0);
  const auto form = assemble(s, JumpModel(JumpKernel::fractional(1, 1)));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto u = random_vector(s.size(), seed);
    const double q = rayleigh(form, u);
    EXPECT_GE(q, 0.0);
    for (auto& v : u) v *= -3.5;
    EXPECT_NEAR(rayleigh(form, u), q, 1e-12 * q);
  }
}

TEST(Rayleigh, ZeroFunctionRejected) {
  const auto s = make_lattice_space(1, 3, 1.0);
  const auto form = assemble(s, JumpModel(JumpKernel::fractional(1, 1)));
  EXPECT_THROW(rayleigh(form, std::vector<double>(s.size(), 0.0)), InvalidArgument);
}

TEST(TestFunction, PlateauAndZeroValues) {
  const auto s = make_lattice_space(1, 40, 1.0);
  const double alpha = 0.5, Rn = 20.0;
  const auto inf = build_test_function(Variant::infinite_volume, AdaptedGauge{}, 1.0, alpha, Rn, s, 0.1);
  const auto fin = build_test_function(Variant::finite_volume, AdaptedGauge{}, 1.0, alpha, Rn, s, 0.1);
  const double plateau = std::expm1(alpha * Rn / 2.0);
  for (Index i = 0; i < s.size(); ++i) {
    const double t = s.d0(i);
    if (t <= Rn / 2) {
      EXPECT_NEAR(inf.f[i], plateau, 1e-12 * plateau);
      EXPECT_EQ(fin.f[i], 0.0);
      EXPECT_EQ(fin.g[i], 0.0);
    }
    if (t > Rn) {
      EXPECT_EQ(inf.f[i], 0.0);
      EXPECT_EQ(inf.g[i], 0.0);
      EXPECT_NEAR(fin.f[i], plateau, 1e-12 * plateau);
      EXPECT_NEAR(fin.g[i], plateau + 2.0, 1e-12 * plateau);
    }
    if (t <= Rn) EXPECT_DOUBLE_EQ(inf.g[i], inf.f[i] + 2.0);
  }
}

TEST(TestFunction, NeedsAlphaAboveHalfGrowth) {
  const auto s = make_lattice_space(1, 10, 1.0);
  EXPECT_THROW(build_test_function(Variant::infinite_volume, AdaptedGauge{}, 1.0, 0.4, 5.0, s, 0.8), InvalidArgument);
}

TEST(TestFunction, PhiProfileStableAndEven) {
  const PhiProfile phi{3.0};
  EXPECT_EQ(phi(0.0), 0.0);
  EXPECT_DOUBLE_EQ(phi(0.7), phi(-0.7));
  EXPECT_NEAR(phi(500.0), 1.0, 1e-15);
  const double t = 0.2, e = std::exp(3.0 * t);
  EXPECT_NEAR(phi(t), (1 - e) * (1 - e) / (1 + e * e), 1e-15);
}

// pointwise and integrated inequality on random parameters and gauges
TEST(LemmaProperty, HoldsOnEverySmallJumpPair) {
  const auto s = make_lattice_space(1, 120, 0.5);
  const JumpModel m(JumpKernel::fractional(1, 1));
  const auto form = assemble(s, m, {20.0, std::size_t{1} << 30, 1});
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> ur(0.5, 4.0), ua(0.3, 2.0), uq(0.2, 0.9);
  for (const auto& g : {AdaptedGauge{}, power_gauge(0.5)}) {
    for (int k = 0; k < 6; ++k) {
      const double r = ur(rng), alpha = ua(rng);
      const double lo = g.rho(r, 0.0), hi = g.rho(r, s.inscribed_radius());
      const double Rn = lo + uq(rng) * (hi - lo);
      const auto mom = moments_from_form(form, g, r);
      for (auto v : {Variant::infinite_volume, Variant::finite_volume}) {
        const auto tf = build_test_function(v, g, r, alpha, Rn, s, 0.0);
        const auto rep = lemma_check(form, tf, mom, g);
        EXPECT_GT(rep.pairs_checked, 0u);
        EXPECT_EQ(rep.pairs_failed, 0u) << "r=" << r << " alpha=" << alpha << " Rn=" << Rn;
        EXPECT_TRUE(rep.pointwise_ok);
        EXPECT_TRUE(rep.integrated_ok);
      }
    }
  }
}

TEST(Ladder, OneRungPerRadiusWithBoundedOverlap) {
  const auto s = make_lattice_space(1, 200, 0.5);
  const auto form = assemble(s, JumpModel(JumpKernel::fractional(1, 1)), {30.0, std::size_t{1} << 30, 1});
  std::vector<double> probe(s.size(), 0.0);
  probe[s.origin()] = 1.0 / std::sqrt(form.measure()[s.origin()]);
  const auto rungs =
      test_function_ladder(form, Variant::infinite_volume, AdaptedGauge{}, 2.0, 0.5, {10, 20, 40, 80}, 0.0, probe);
  ASSERT_EQ(rungs.size(), 4u);
  for (const auto& r : rungs) {
    EXPECT_GE(r.rayleigh, 0.0);
    EXPECT_GE(r.overlap, 0.0);
    EXPECT_LE(r.overlap, 1.0 + 1e-12);
    EXPECT_GT(r.norm_ratio, 0.0);
    EXPECT_LE(r.norm_ratio, 1.0);
  }
}

TEST(Persson, WholeSpaceHasZeroBottom) {
  const auto s = make_lattice_space(1, 60, 1.0);
  const auto form = assemble(s, JumpModel(JumpKernel::fractional(1, 1)));
  EXPECT_NEAR(persson_exterior_lambda(form, 0.0).lambda, 0.0, 1e-8);
}

TEST(Persson, LadderNondecreasing) {
  const auto s = make_lattice_space(1, 200, 0.5);
  const auto form = assemble(s, JumpModel(JumpKernel::fractional(1, 1)));
  const auto lad = persson_ladder(form, {0.0, 2.0, 4.0, 8.0, 16.0});
  for (std::size_t i = 1; i < lad.size(); ++i) EXPECT_GE(lad[i].lambda, lad[i - 1].lambda * (1 - 1e-8));
  for (const auto& p : lad) EXPECT_LE(p.residual, 1e-5);
}

// dense generalized eigenproblem built from energies of basis vectors by polarization
TEST(Persson, AgreesWithDenseSolver) {
  const auto s = make_lattice_space(1, 30, 1.0);
  const auto form = assemble(s, JumpModel::time_changed(JumpKernel::fractional(1, 1.5), {0.5}));
  for (double R0 : {0.0, 3.0, 10.0}) {
    std::vector<Index> ids;
    for (Index i = 0; i < s.size(); ++i)
      if (R0 <= 0.0 || s.d0(i) > R0) ids.push_back(i);
    const long n = static_cast<long>(ids.size());
    Eigen::MatrixXd H(n, n), M = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> e(s.size(), 0.0);
    auto energy_of = [&](Index a, Index b) {
      std::fill(e.begin(), e.end(), 0.0);
      e[a] += 1.0;
      e[b] += 1.0;
      return form.energy(e);
    };
    std::vector<double> diag(n);
    for (long a = 0; a < n; ++a) {
      std::fill(e.begin(), e.end(), 0.0);
      e[ids[a]] = 1.0;
      diag[a] = form.energy(e);
      M(a, a) = form.measure()[ids[a]];
    }
    for (long a = 0; a < n; ++a)
      for (long b = 0; b < n; ++b)
        H(a, b) = a == b ? diag[a] : 0.5 * (energy_of(ids[a], ids[b]) - diag[a] - diag[b]);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(H, M);
    const double dense = std::max(0.0, es.eigenvalues()[0]);
    const double got = persson_exterior_lambda(form, R0).lambda;
    EXPECT_NEAR(got, dense, 1e-7 * std::max(1.0, dense)) << R0;
  }
}

TEST(Persson, EmptyExteriorRejected) {
  const auto s = make_lattice_space(1, 5, 1.0);
  const auto form = assemble(s, JumpModel(JumpKernel::fractional(1, 1)));
  EXPECT_THROW(persson_exterior_lambda(form, 50.0), InvalidArgument);
}

TEST(Persson, LadderCsvHasHeaderAndRows) {
  const auto s = make_lattice_space(1, 20, 1.0);
  const auto form = assemble(s, JumpModel(JumpKernel::fractional(1, 1)));
  std::ostringstream os;
  write_ladder_csv(os, persson_ladder(form, {0.0, 2.0}));
  const auto text = os.str();
  EXPECT_EQ(text.rfind("R0,lambda,residual,iterations,exterior_size\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(Coo, SortedSymmetricAndComplete) {
  const auto s = make_exponential_tree_space(2, 4, 1.0);
  const auto form = assemble(s, JumpModel(JumpKernel::fractional(1, 1)), {2.5, std::size_t{1} << 30, 1});
  std::ostringstream os;
  form.write_coo(os);
  std::istringstream is(os.str());
  std::vector<std::tuple<Index, Index, double>> rows;
  Index i, j;
  double c;
  while (is >> i >> j >> c) rows.emplace_back(i, j, c);
  ASSERT_EQ(rows.size(), 2 * form.pairs().size());
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto [i0, j0, c0] = rows[k - 1];
    const auto [i1, j1, c1] = rows[k];
    EXPECT_TRUE(i0 < i1 || (i0 == i1 && j0 < j1));
  }
  for (const auto& [a, b, v] : rows) {
    const auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& t) {
      return std::get<0>(t) == b && std::get<1>(t) == a;
    });
    ASSERT_NE(it, rows.end());
    EXPECT_EQ(std::get<2>(*it), v);
  }
}

TEST(Assembly, MemoryBudgetRefusal) {
  const auto s = make_lattice_space(1, 2000, 1.0);
  try {
    assemble(s, JumpModel(JumpKernel::fractional(1, 1)), {kInf, 1 << 20, 1});
    FAIL() << "expected refusal";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("memory budget"), std::string::npos);
  }
}

TEST(Assembly, CutoffMustExceedSpacing) {
  const auto s = make_lattice_space(1, 10, 1.0);
  EXPECT_THROW(assemble(s, JumpModel(JumpKernel::fractional(1, 1)), {0.5, std::size_t{1} << 30, 1}), InvalidArgument);
}

TEST(FormMoments, MatchLatticeBackend) {
  const auto s = make_lattice_space(1, 100, 0.5);
  const JumpModel m(JumpKernel::fractional(1, 1));
  const auto form = assemble(s, m);
  const double r = 2.0;
  const auto from_form = moments_from_form(form, AdaptedGauge{}, r);
  std::vector<Index> all(s.size());
  for (Index k = 0; k < s.size(); ++k) all[k] = k;
  const auto direct = compute_moments(s, m, AdaptedGauge{}, r, all);
  EXPECT_NEAR(from_form.M1, direct.M1, 1e-12 * direct.M1);
  EXPECT_NEAR(from_form.M2, direct.M2, 1e-12 * direct.M2);
}
