#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "specbound/kernel.hpp"

using namespace specbound;

TEST(Kernel, FractionalValue) {
  const auto k = JumpKernel::fractional(1.0, 0.5, 1.0);
  EXPECT_NEAR(k.eval(2.0, 0.0, 2.0), std::pow(2.0, -1.5), 1e-15);
}

TEST(Kernel, CoefficientGrowthFarBranch) {
  const auto k = JumpKernel::coeff_growth(1.0, 0.5, 2.0, 0.0, 1.0);
  // c = (1+0)^0 + (1+3)^0 on the far branch d > 1
  EXPECT_NEAR(k.eval(3.0, 0.0, 3.0), 2.0 / std::pow(3.0, 1.5), 1e-15);
}

TEST(Kernel, CoefficientGrowthNearBranchUsesP) {
  const auto k = JumpKernel::coeff_growth(1.0, 1.0, 1.5, 0.3, 1.0);
  const double c = std::pow(4.0, 1.5) + std::pow(4.5, 1.5);
  EXPECT_NEAR(k.eval(0.5, 3.0, 3.5), c / std::pow(0.5, 2.0), 1e-12);
}

TEST(Kernel, HyperbolicFarBranch) {
  const auto k = JumpKernel::hyperbolic(2, 1.0);
  EXPECT_NEAR(k.eval(2.0, 0.0, 0.0), std::exp(-2.0) / (2.0 * (1.0 + std::sqrt(2.0))), 1e-15);
}

TEST(Kernel, ExpTiltedBranches) {
  const auto k = JumpKernel::exp_tilted(1.0, 1.0, 1.5, 0.7, 2.0, 3.0);
  EXPECT_NEAR(k.eval(0.5, 0, 0), 2.0 * std::pow(0.5, -2.0), 1e-12);
  EXPECT_NEAR(k.eval(4.0, 0, 0), 3.0 * std::exp(-0.7 * 4.0) * std::pow(4.0, -1.5), 1e-15);
}

TEST(Kernel, LogSlopeMatchesFiniteDifference) {
  const std::vector<JumpKernel> ks{JumpKernel::fractional(2, 1.2), JumpKernel::two_regime(1, 0.5, 1.5),
                                   JumpKernel::exp_tilted(1, 1, 1.5, 0.6), JumpKernel::hyperbolic(3, 0.8)};
  for (const auto& k : ks)
    for (double s : {0.3, 0.9, 1.7, 12.0}) {
      const bool outer = k.outer(s);
      const double h = 1e-6 * s;
      const double fd = (k.log_branch(s + h, outer) - k.log_branch(s - h, outer)) / (2 * h);
      EXPECT_NEAR(k.log_slope(s, outer), fd, 1e-6 * (1 + std::abs(fd)));
    }
}

TEST(Kernel, RejectsOutOfDomain) {
  EXPECT_THROW(JumpKernel::fractional(1.0, 0.0), InvalidArgument);
  EXPECT_THROW(JumpKernel::fractional(1.0, 1.0, -1.0), InvalidArgument);
  EXPECT_THROW(JumpKernel::hyperbolic(1, 1.0), InvalidArgument);
}

TEST(Kernel, EvalKernelRejectsDiagonal) {
  const auto s = make_lattice_space(1, 3, 1.0);
  EXPECT_THROW(eval_kernel(JumpKernel::fractional(1, 1), s, 2, 2), InvalidArgument);
}

// symmetry of every family and modifier on random pairs
TEST(KernelProperty, SymmetricDensityIsSymmetric) {
  const auto k1 = JumpKernel::coeff_growth(1.0, 1.0, 1.5, 0.3);
  const auto k2 = JumpKernel::exp_tilted(1.0, 1.0, 1.5, 0.7);
  const std::vector<JumpModel> models{JumpModel(k1), JumpModel::time_changed(k2, {1.0}),
                                      JumpModel::tilted(k1, Potential::log_loglog(2.0, 1.0))};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (const auto& m : models)
    for (int i = 0; i < 500; ++i) {
      const double a = u(rng), b = u(rng), d = std::abs(a - b) + 1e-3;
      EXPECT_EQ(m.symmetric_density(d, a, b), m.symmetric_density(d, b, a));
      EXPECT_NEAR(m.measure_weight(a) * m.density(d, a, b), m.symmetric_density(d, a, b),
                  1e-12 * m.symmetric_density(d, a, b));
    }
}

TEST(KernelProperty, CoefficientGrowthEnvelope) {
  const auto k = JumpKernel::coeff_growth(1.0, 1.0, 2.0, 0.3, 1.7);
  const auto c = k.coefficient();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int i = 0; i < 500; ++i) {
    const double a = u(rng), b = u(rng), d = std::abs(a - b) + 1e-3;
    EXPECT_LE(k.eval(d, a, b), 1.7 * c(d, a, b) / std::pow(d, 2.0) * (1 + 1e-14));
  }
}

TEST(BigJumpMass, EmptyBeyondDiameter) {
  const auto s = make_lattice_space(1, 10, 1.0);
  EXPECT_EQ(big_jump_mass(JumpKernel::fractional(1, 1), s, s.origin(), 100.0), 0.0);
}

TEST(BigJumpMass, FractionalTailOnFineLattice) {
  const auto s = make_lattice_space(1, 20000, 0.01);
  const auto k = JumpKernel::fractional(1.0, 1.0);
  for (double r : {1.0, 3.0, 10.0}) {
    const double analytic = 2.0 / r - 2.0 / 200.0;  // ∫_{r<|z|<200} |z|^-2
    EXPECT_NEAR(big_jump_mass(k, s, s.origin(), r), analytic, 0.05 * analytic) << r;
  }
}

TEST(BigJumpMass, CoefficientGrowthDecaySlope) {
  // 1-D lattice, q < β: the big-jump rate at the origin decays like r^{q-β}
  const auto s = make_lattice_space(1, 40000, 0.05);
  const double q = 0.3, beta = 1.0;
  const auto k = JumpKernel::coeff_growth(1.0, beta, 1.5, q);
  std::vector<double> lx, ly;
  for (double r : log_grid(1.0, 16.0, 6)) {
    lx.push_back(std::log(r));
    ly.push_back(std::log(big_jump_mass(k, s, s.origin(), r)));
  }
  EXPECT_NEAR(fit_line(lx, ly).slope, q - beta, 0.15);
}

TEST(Potential, LogLoglogValues) {
  const auto v = Potential::log_loglog(2.0, 1.0);
  EXPECT_NEAR(v(0.0), 0.0, 1e-15);
  EXPECT_NEAR(v(10.0), 2.0 * std::log(11.0) - std::log(std::log(std::exp(1.0) + 10.0)), 1e-14);
  EXPECT_TRUE(v.nondecreasing_on(1e6));
}

TEST(Potential, RatioCondition) {
  const auto grid = log_grid(1e-3, 1e12, 120);
  EXPECT_TRUE(Potential::log_loglog(2.0, 1.0).ratio_holds(2.0, 1.0, grid));
  EXPECT_TRUE(Potential::log_power(2.0).ratio_holds(2.0, 1.0, grid));
  // e^{t} outgrows every power
  EXPECT_FALSE(Potential::power(1.0, 1.0).ratio_holds(2.0, 10.0, grid));
}

TEST(Potential, CustomInterpolatesAndExtrapolates) {
  const auto v = Potential::custom({0, 1, 2}, {0, 1, 3});
  EXPECT_DOUBLE_EQ(v(0.5), 0.5);
  EXPECT_DOUBLE_EQ(v(1.5), 2.0);
  EXPECT_DOUBLE_EQ(v(3.0), 5.0);
  EXPECT_THROW(Potential::custom({0, 0}, {1, 2}), InvalidArgument);
}

TEST(Model, TimeChangeWeights) {
  const auto m = JumpModel::time_changed(JumpKernel::fractional(2, 1), {1.0});
  EXPECT_DOUBLE_EQ(m.measure_weight(3.0), 0.25);
  EXPECT_DOUBLE_EQ(m.density(2.0, 3.0, 1.0), 4.0 * std::pow(2.0, -3.0));
}

TEST(Model, TiltedDensity) {
  const auto v = Potential::log_power(2.0);
  const auto m = JumpModel::tilted(JumpKernel::fractional(1, 1), v);
  const double expect = 0.5 * (1.0 + std::exp(v(5.0) - v(1.0))) / 16.0;
  EXPECT_NEAR(m.density(4.0, 5.0, 1.0), expect, 1e-15);
  EXPECT_NEAR(tilted_kernel(JumpKernel::fractional(1, 1), v, 4.0, 5.0, 1.0), expect, 1e-15);
}
