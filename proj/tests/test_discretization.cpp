#include <gtest/gtest.h>

#include <cmath>

#include "ictsurf/discretization.hpp"
#include "ictsurf/random.hpp"

using namespace ictsurf;

namespace {

// Direct sum of panel areas, independent of trapezoid_weights.
double panels(const std::vector<double>& v, const std::vector<double>& t, std::size_t upto) {
  double s = 0.0;
  for (std::size_t j = 1; j <= upto; ++j) s += 0.5 * (v[j] + v[j - 1]) * (t[j] - t[j - 1]);
  return s;
}

}  // namespace

TEST(PerSampleGrid, EqualSpacing) {
  const TimeGrid g = per_sample_grid(2.0, 5);
  EXPECT_EQ(g.points, (std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0}));
  EXPECT_EQ(g.anchor, 4u);
}

TEST(PerSampleGrid, MinimalGrid) {
  const TimeGrid g = per_sample_grid(1.0, 2);
  EXPECT_EQ(g.points, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(g.anchor, 1u);
}

TEST(PerSampleGrid, UnitSpacing) {
  const TimeGrid g = per_sample_grid(3.0, 4);
  for (std::size_t j = 1; j < g.size(); ++j) EXPECT_DOUBLE_EQ(g.spacing(j), 1.0);
}

TEST(PerSampleGrid, LastPointExactAndSpacingUniform) {
  Rng rng = make_stream(1, "grid");
  for (int rep = 0; rep < 200; ++rep) {
    const double t = uniform(rng, 1e-3, 1e3);
    const auto m = static_cast<std::size_t>(2 + uniform_index(rng, 200));
    const TimeGrid g = per_sample_grid(t, m);
    ASSERT_EQ(g.size(), m);
    EXPECT_EQ(g.points.back(), t);
    EXPECT_EQ(g.points.front(), 0.0);
    EXPECT_EQ(g.anchor_time(), t);
    const double d = t / static_cast<double>(m - 1);
    for (std::size_t j = 1; j < m; ++j) EXPECT_NEAR(g.spacing(j), d, 1e-12 * d);
  }
}

TEST(PerSampleGrid, ZeroTimeClamped) {
  const TimeGrid g = per_sample_grid(0.0, 3);
  EXPECT_EQ(g.points.back(), kMinEventTime);
  EXPECT_GT(g.spacing(1), 0.0);
}

TEST(PerSampleGrid, TooFewPoints) { EXPECT_THROW(per_sample_grid(1.0, 1), DomainError); }

TEST(GlobalGrid, InsertsEventTime) {
  const TimeGrid g = global_grid(2.0, 10.0, 3);
  EXPECT_EQ(g.points, (std::vector<double>{0.0, 2.0, 5.0, 10.0}));
  EXPECT_EQ(g.anchor, 1u);  // second point
}

TEST(GlobalGrid, NoDuplicateInsertion) {
  const TimeGrid g = global_grid(5.0, 10.0, 3);
  EXPECT_EQ(g.points, (std::vector<double>{0.0, 5.0, 10.0}));
  EXPECT_EQ(g.anchor, 1u);
}

TEST(GlobalGrid, BoundaryCoincidence) {
  const TimeGrid g = global_grid(10.0, 10.0, 2);
  EXPECT_EQ(g.points, (std::vector<double>{0.0, 10.0}));
  EXPECT_EQ(g.anchor, 1u);
}

TEST(GlobalGrid, MergesWithinTolerance) {
  const TimeGrid g = global_grid(5.0 + 1e-12, 10.0, 3);
  EXPECT_EQ(g.size(), 3u);
  EXPECT_EQ(g.anchor, 1u);
}

TEST(GlobalGrid, ExtendsBeyondMaximum) {
  const TimeGrid g = global_grid(12.0, 10.0, 3);
  EXPECT_EQ(g.points, (std::vector<double>{0.0, 5.0, 10.0, 12.0}));
  EXPECT_EQ(g.anchor, 3u);
}

TEST(GlobalGrid, GridsAgreeOutsideInsertedPoint) {
  const TimeGrid a = global_grid(3.3, 10.0, 6);
  const TimeGrid b = global_grid(7.1, 10.0, 6);
  std::vector<double> pa;
  std::vector<double> pb;
  for (double t : a.points) if (t != 3.3) pa.push_back(t);
  for (double t : b.points) if (t != 7.1) pb.push_back(t);
  EXPECT_EQ(pa, pb);
  EXPECT_EQ(a.anchor_time(), 3.3);
  EXPECT_EQ(b.anchor_time(), 7.1);
}

TEST(Trapezoid, Constant) {
  TimeGrid g{{0.0, 0.5, 1.0}, 2};
  EXPECT_DOUBLE_EQ(trapezoid(std::vector<double>{1, 1, 1}, g), 1.0);
}

TEST(Trapezoid, HandExample) {
  TimeGrid g{{0.0, 0.5, 1.0}, 2};
  EXPECT_NEAR(trapezoid(std::vector<double>{0.2, 0.4, 0.8}, g), 0.45, 1e-15);
}

TEST(Trapezoid, LinearExact) {
  TimeGrid g{{0.0, 1.0, 2.0}, 2};
  EXPECT_EQ(trapezoid(std::vector<double>{0, 1, 2}, g), 2.0);
}

TEST(Trapezoid, LengthMismatch) {
  TimeGrid g{{0.0, 1.0, 2.0}, 2};
  EXPECT_THROW(trapezoid(std::vector<double>{0, 1}, g), DimensionError);
}

TEST(Trapezoid, UptoAnchorEqualsPrefix) {
  const TimeGrid g = global_grid(3.0, 10.0, 5);
  std::vector<double> v;
  for (double t : g.points) v.push_back(std::exp(-t) + t * t);
  TimeGrid prefix{{g.points.begin(), g.points.begin() + static_cast<std::ptrdiff_t>(g.anchor) + 1}, g.anchor};
  std::vector<double> vp(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(g.anchor) + 1);
  EXPECT_DOUBLE_EQ(trapezoid(v, g), trapezoid(vp, prefix));
  EXPECT_NEAR(trapezoid(v, g), panels(v, g.points, g.anchor), 1e-13);
  EXPECT_NEAR(trapezoid(v, g, grid_end(g)), panels(v, g.points, g.size() - 1), 1e-12);
}

TEST(Trapezoid, LinearInValues) {
  Rng rng = make_stream(4, "lin");
  const TimeGrid g = per_sample_grid(2.5, 9);
  std::vector<double> a(9), b(9), c(9);
  for (std::size_t j = 0; j < 9; ++j) {
    a[j] = normal(rng);
    b[j] = normal(rng);
    c[j] = 2.0 * a[j] - 3.0 * b[j];
  }
  EXPECT_NEAR(trapezoid(c, g), 2.0 * trapezoid(a, g) - 3.0 * trapezoid(b, g), 1e-12);
}

TEST(Trapezoid, AffineExactToTolerance) {
  Rng rng = make_stream(5, "aff");
  for (int rep = 0; rep < 100; ++rep) {
    const double a = uniform(rng, -5, 5);
    const double b = uniform(rng, -5, 5);
    const double T = uniform(rng, 0.1, 4);
    const TimeGrid g = global_grid(uniform(rng, 0.05, T), T, 2 + uniform_index(rng, 40));
    std::vector<double> v;
    for (double t : g.points) v.push_back(a + b * t);
    const double end = g.anchor_time();
    EXPECT_NEAR(trapezoid(v, g), a * end + 0.5 * b * end * end, 1e-12);
  }
}

TEST(Trapezoid, SecondOrderConvergence) {
  auto err = [](std::size_t m) {
    const TimeGrid g = per_sample_grid(1.0, m);
    std::vector<double> v;
    for (double t : g.points) v.push_back(t * t);
    return std::abs(trapezoid(v, g) - 1.0 / 3.0);
  };
  EXPECT_GE(err(10) / err(20), 3.9);
}

TEST(Weights, MatchPanels) {
  const TimeGrid g = global_grid(1.7, 4.0, 7);
  const auto w = trapezoid_weights(g);
  std::vector<double> v;
  for (double t : g.points) v.push_back(std::sin(t) + 2);
  double dot = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) dot += w[j] * v[j];
  EXPECT_NEAR(dot, panels(v, g.points, g.anchor), 1e-13);
  for (std::size_t j = g.anchor + 1; j < w.size(); ++j) EXPECT_EQ(w[j], 0.0);
}

TEST(CumulativeTrapezoid, RunningSums) {
  const std::vector<double> t{0.0, 0.5, 1.0, 2.0};
  const std::vector<double> v{1.0, 2.0, 2.0, 0.0};
  const auto c = cumulative_trapezoid(v, t);
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c[0], 0.0);
  for (std::size_t j = 1; j < 4; ++j) EXPECT_NEAR(c[j], panels(v, t, j), 1e-15);
}
