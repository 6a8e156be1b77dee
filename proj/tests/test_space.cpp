#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "specbound/space.hpp"

using namespace specbound;

TEST(Lattice, OneDimensionalPointsAndMasses) {
  const auto s = make_lattice_space(1, 2, 1.0);
  ASSERT_EQ(s.size(), 5u);
  for (Index i = 0; i < s.size(); ++i) EXPECT_DOUBLE_EQ(s.mass(i), 1.0);
  EXPECT_DOUBLE_EQ(s.d0(s.origin()), 0.0);
  std::vector<double> xs;
  for (Index i = 0; i < s.size(); ++i) xs.push_back(s.coords(i)[0]);
  EXPECT_EQ(xs, (std::vector<double>{-2, -1, 0, 1, 2}));
}

TEST(Lattice, TwoDimensionalCellMass) {
  const auto s = make_lattice_space(2, 1, 0.5);
  ASSERT_EQ(s.size(), 9u);
  for (Index i = 0; i < s.size(); ++i) EXPECT_DOUBLE_EQ(s.mass(i), 0.25);
}

TEST(Lattice, BallVolumeTracksLength) {
  const auto s = make_lattice_space(1, 1000, 0.1);
  for (double R : {1.0, 10.0, 50.0}) EXPECT_NEAR(ball_volume(s, s.origin(), R), 2.0 * R, 0.1 + 1e-9) << R;
}

TEST(Lattice, BallVolumeSmallCases) {
  const auto s = make_lattice_space(1, 2, 1.0);
  EXPECT_DOUBLE_EQ(ball_volume(s, s.origin(), 1.0), 3.0);
  EXPECT_DOUBLE_EQ(ball_volume(s, s.origin(), 0.0), s.mass(s.origin()));
}

TEST(Lattice, DiscAreaWithinFivePercent) {
  const auto s = make_lattice_space(2, 15, 0.1);
  EXPECT_NEAR(ball_volume(s, s.origin(), 1.0), std::numbers::pi, 0.05 * std::numbers::pi);
}

TEST(Lattice, RejectsBadParameters) {
  EXPECT_THROW(make_lattice_space(3, 2, 1.0), InvalidArgument);
  EXPECT_THROW(make_lattice_space(1, 2, 0.0), InvalidArgument);
  EXPECT_THROW(make_lattice_space(1, 0, 1.0), InvalidArgument);
}

TEST(Tree, VertexCounts) {
  EXPECT_EQ(make_exponential_tree_space(2, 3, 1.0).size(), 15u);
  EXPECT_EQ(make_exponential_tree_space(2, 1, 1.0).size(), 3u);
  EXPECT_EQ(make_exponential_tree_space(3, 2, 1.0).size(), 13u);
}

TEST(Tree, BallAroundRoot) {
  const auto t = make_exponential_tree_space(2, 3, 1.0);
  EXPECT_DOUBLE_EQ(ball_volume(t, t.origin(), 2.0), 7.0);
}

TEST(Tree, PathDistances) {
  const auto t = make_exponential_tree_space(2, 3, 1.5);
  // ids 3 and 4 are siblings under 1; 3 and 5 are cousins
  EXPECT_DOUBLE_EQ(t.dist(3, 4), 3.0);
  EXPECT_DOUBLE_EQ(t.dist(3, 5), 6.0);
  EXPECT_DOUBLE_EQ(t.d0(7), 4.5);
}

TEST(Tree, BallEnumerationMatchesDistances) {
  const auto t = make_exponential_tree_space(3, 4, 1.0);
  for (Index x : {Index{0}, Index{5}, Index{40}}) {
    for (double r : {0.0, 1.0, 2.5, 4.0, 100.0}) {
      std::size_t seen = 0;
      t.for_each_within(x, r, [&](Index y, double d) {
        EXPECT_DOUBLE_EQ(d, t.dist(x, y));
        EXPECT_LE(d, r);
        ++seen;
      });
      std::size_t brute = 0;
      for (Index y = 0; y < t.size(); ++y) brute += t.dist(x, y) <= r;
      EXPECT_EQ(seen, brute) << "x=" << x << " r=" << r;
    }
  }
}

TEST(Space, MetricAxiomsOnSamples) {
  for (const auto& s : {make_lattice_space(2, 6, 0.5), make_exponential_tree_space(2, 6, 1.0),
                        make_graded_line(0.5, 5.0, 200.0, 20)}) {
    EXPECT_EQ(triangle_violation_rate(s, 2000, 17), 0.0);
    for (Index i = 0; i < s.size(); i += 7) {
      EXPECT_EQ(s.dist(i, i), 0.0);
      EXPECT_GT(s.mass(i), 0.0);
      for (Index j = 0; j < s.size(); j += 11) EXPECT_EQ(s.dist(i, j), s.dist(j, i));
    }
  }
}

TEST(Space, BallVolumeNondecreasing) {
  const auto s = make_exponential_tree_space(2, 8, 1.0);
  double prev = 0.0;
  for (double r = 0.0; r <= 20.0; r += 0.25) {
    const double v = ball_volume(s, s.origin(), r);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Space, UnknownIdIsNotFound) {
  const auto s = make_lattice_space(1, 2, 1.0);
  EXPECT_THROW(s.check_id(99), NotFound);
  EXPECT_THROW(ball_volume(s, 99, 1.0), NotFound);
}

TEST(GradedLine, CellMassesCoverTheLine) {
  const auto s = make_graded_line(0.5, 20.0, 1e4, 100);
  double total = 0.0;
  for (Index i = 0; i < s.size(); ++i) total += s.mass(i);
  // Voronoi cells cover [-extent, extent] plus half a cell at each end
  const double end_cell = s.coords(s.size() - 1)[0] - s.coords(s.size() - 2)[0];
  EXPECT_NEAR(total, 2e4 + end_cell, 1e-6 * total);
  EXPECT_DOUBLE_EQ(s.coords(s.origin())[0], 0.0);
  EXPECT_DOUBLE_EQ(s.inscribed_radius(), 1e4);
}

TEST(Space, CsvHasOneRowPerPoint) {
  const auto s = make_lattice_space(2, 1, 1.0);
  std::ostringstream os;
  s.write_csv(os);
  const std::string text = os.str();
  EXPECT_EQ(text.rfind("id,x0,x1,mass\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
}

TEST(Profile, PolynomialExact) {
  const auto p = RadialProfile::polynomial(2.0, 1.5);
  for (double R : {0.1, 1.0, 7.0, 1e6}) EXPECT_NEAR(p.volume(R), 2.0 * std::pow(R, 1.5), 1e-12 * p.volume(R));
}

TEST(Profile, HyperbolicMatchesClosedForm) {
  const auto p = RadialProfile::hyperbolic(3);
  // ω₃ = 4π and ∫₀^R sinh² = sinh(2R)/4 − R/2
  for (double R : {0.5, 2.0, 6.0}) {
    const double exact = 4.0 * std::numbers::pi * (std::sinh(2.0 * R) / 4.0 - R / 2.0);
    EXPECT_NEAR(p.volume(R), exact, 1e-8 * exact) << R;
  }
}

TEST(Profile, VolumeNondecreasing) {
  for (const auto& p : {RadialProfile::two_regime(3.0, 1.0, 1.5, std::log(2.0)), RadialProfile::exponential(1.0, 0.5),
                        RadialProfile::hyperbolic(2), RadialProfile::polynomial(1.0, 2.0)}) {
    double prev = 0.0;
    for (double R = 0.01; R < 40.0; R *= 1.3) {
      const double v = p.volume(R);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(Profile, UnitBallVolumes) {
  EXPECT_DOUBLE_EQ(unit_ball_volume(1), 2.0);
  EXPECT_NEAR(unit_ball_volume(2), std::numbers::pi, 1e-15);
  EXPECT_NEAR(unit_ball_volume(3), 4.0 * std::numbers::pi / 3.0, 1e-14);
}
