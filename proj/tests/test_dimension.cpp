#include "sievekit/dimension.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sievekit;

namespace {

using R = Rational;
using ExactSeq = DeletionSequence<Rational>;
using FloatSeq = DeletionSequence<double>;

const double kThirds = std::log(2.0) / std::log(3.0);

R pow3(std::size_t n) {
  R out(1);
  for (std::size_t i = 0; i < n; ++i)
    out *= 3;
  return out;
}

PointCloud line_cloud(std::size_t m) {
  PointCloud c;
  c.dim = 1;
  for (std::size_t i = 0; i < m; ++i)
    c.points.push_back({(i + 0.5) / m, 0.0, 0.0});
  return c;
}

std::vector<RankInterval<double>> thirds(std::size_t n) {
  return enumerate_intervals(FloatSeq::constant(1.0 / 3.0), n);
}

} // namespace

TEST(BoxCount, MiddleThirdsAtTriadicScale) {
  for (std::size_t n = 0; n <= 10; ++n) {
    const auto ivs = enumerate_intervals(ExactSeq::constant(R(1, 3)), n);
    EXPECT_EQ(box_count(ivs, 1 / pow3(n)), std::uint64_t{1} << n) << n;
  }
}

TEST(BoxCount, SinglePointAndFullInterval) {
  PointCloud one;
  one.dim = 3;
  one.points.push_back({0.3, 0.7, 0.1});
  for (double eps : {1.0, 0.5, 1e-3, 1e-9})
    EXPECT_EQ(box_count(one, eps), 1u);

  const std::vector<RankInterval<R>> unit{{"", R(0), R(1)}};
  EXPECT_EQ(box_count(unit, R(1, 10)), 10u);
  EXPECT_EQ(box_count(unit, R(1, 7), R(1, 14)), 8u); // shifted grid straddles both ends
  const std::vector<RankInterval<R>> dot{{"", R(1, 3), R(1, 3)}};
  EXPECT_EQ(box_count(dot, R(1, 10)), 1u);
}

TEST(BoxCount, BoundaryPointsBelongToTheHigherCell) {
  PointCloud c;
  c.dim = 1;
  c.points = {{0.25, 0, 0}, {0.2499999, 0, 0}};
  EXPECT_EQ(box_count(c, 0.25), 2u);
  c.points = {{0.25, 0, 0}, {0.26, 0, 0}};
  EXPECT_EQ(box_count(c, 0.25), 1u);
}

TEST(BoxCount, RejectsBadInput) {
  EXPECT_THROW(box_count(PointCloud{}, 0.1), InputError);
  PointCloud one;
  one.points.push_back({0.5, 0, 0});
  EXPECT_THROW(box_count(one, 0.0), InputError);
  EXPECT_THROW(box_count(std::vector<RankInterval<double>>{}, 0.1), InputError);
}

TEST(BoxCount, HalvingEpsIsMonotoneAndBounded) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t d = 1; d <= 3; ++d) {
    PointCloud c;
    c.dim = d;
    for (int i = 0; i < 5000; ++i) {
      // clustered points so the counts do not saturate immediately
      const double t = u(rng);
      c.points.push_back({t * t, d > 1 ? t * u(rng) : 0.0, d > 2 ? std::pow(u(rng), 3) : 0.0});
    }
    for (int k = 0; k < 16; ++k) {
      const double eps = std::ldexp(1.0, -k);
      const auto a = box_count(c, eps), b = box_count(c, eps / 2);
      EXPECT_LE(a, b);
      EXPECT_LE(b, (std::uint64_t{1} << d) * a);
    }
  }
  const auto ivs = thirds(12);
  for (int k = 0; k < 22; ++k) {
    const double eps = std::ldexp(1.0, -k);
    const auto a = box_count(ivs, eps), b = box_count(ivs, eps / 2);
    EXPECT_LE(a, b);
    EXPECT_LE(b, 2 * a);
  }
}

TEST(BoxCount, OffsetChangesCountsByBoundedFactor) {
  const auto ivs = thirds(14);
  for (int k = 2; k < 20; ++k) {
    const double eps = std::ldexp(1.0, -k);
    const double a = box_count(ivs, eps), b = box_count(ivs, eps, eps / 2);
    EXPECT_LE(a, 2 * b);
    EXPECT_LE(b, 2 * a);
  }
}

TEST(CountRankIntervals, Examples) {
  const auto q = ExactSeq::q_orbit(R(1, 2));
  const auto five = count_rank_intervals(q, 5);
  EXPECT_EQ(five.count, 32u);
  EXPECT_EQ(five.scale, interval_length(q, 5));
  const auto twenty = count_rank_intervals(q, 20);
  EXPECT_EQ(twenty.count, 1u << 20);
  EXPECT_EQ(twenty.scale, R(1, (1 << 20) * 21));
  const auto zero = count_rank_intervals(q, 0);
  EXPECT_EQ(zero.count, 1u);
  EXPECT_EQ(zero.scale, R(1));
  EXPECT_THROW(count_rank_intervals(q, 64), InputError);
}

TEST(FitDimension, MiddleThirdsExactSeries) {
  const auto series = exact_series(ExactSeq::constant(R(1, 3)), 4, 12);
  ASSERT_EQ(series.entries.size(), 9u);
  EXPECT_TRUE(series.well_ordered());
  const auto fit = fit_dimension(series, 0, series.entries.size());
  EXPECT_NEAR(fit.slope, kThirds, 1e-12);
  EXPECT_LT(fit.residual_rms, 1e-12);
}

TEST(FitDimension, QOrbitEffectiveDimension) {
  const auto q = FloatSeq::q_orbit(0.5);
  for (std::size_t n = 1; n <= 60; ++n) {
    const double closed = n * std::log(2.0) / std::log(std::ldexp(1.0, static_cast<int>(n)) * (n + 1));
    EXPECT_NEAR(effective_dimension(q, n), closed, 1e-12) << n;
  }
  EXPECT_NEAR(effective_dimension(q, 20), 0.8199, 1e-4);
  for (std::size_t n = 5; n < 60; ++n)
    EXPECT_LT(effective_dimension(q, n), effective_dimension(q, n + 1));
  EXPECT_LT(effective_dimension(q, 60), 1.0);
  EXPECT_THROW(effective_dimension(q, 0), InputError);
}

TEST(FitDimension, ExactSeriesIsLogLinearForConstantSequences) {
  for (R p : {R(1, 3), R(1, 5), R(1, 2)}) {
    const auto seq = ExactSeq::constant(p);
    const auto fit = fit_dimension(exact_series(seq, 1, 40), 0, 40);
    const double closed = std::log(2.0) / std::log(2.0 / (1.0 - to_double(p)));
    EXPECT_NEAR(fit.slope, closed, 1e-9);
    EXPECT_NEAR(effective_dimension(seq, 17), closed, 1e-9);
  }
}

TEST(FitDimension, DenseLine) {
  const auto series = grid_series(line_cloud(100000), 2, 12);
  EXPECT_TRUE(series.well_ordered());
  EXPECT_NEAR(fit_dimension(series).slope, 1.0, 0.01);
}

TEST(FitDimension, RangeHandling) {
  const auto series = exact_series(ExactSeq::constant(R(1, 3)), 1, 10);
  const auto def = fit_dimension(series);
  EXPECT_EQ(def.begin, 2u);
  EXPECT_EQ(def.end, 8u);
  EXPECT_EQ(def.residuals.size(), 6u);
  EXPECT_THROW(fit_dimension(series, 3, 4), InputError);
  EXPECT_THROW(fit_dimension(series, 5, 11), InputError);
  BoxCountSeries flat;
  flat.entries = {{0.5, 2, 1.0, 0.7}, {0.5, 2, 1.0, 0.7}};
  EXPECT_THROW(fit_dimension(flat, 0, 2), InputError);
}

TEST(GridSeries, MiddleThirdsOverSixOctaves) {
  // A dyadic grid sees the triadic set with a log-periodic wobble; at fine
  // octaves every anchor stays within 0.02 of log 2 / log 3.
  const auto ivs = thirds(18);
  std::vector<double> slopes;
  for (double offset : {0.0, 0.25, 0.5}) {
    const auto series = grid_series(ivs, 10, 16, offset);
    EXPECT_TRUE(series.well_ordered());
    slopes.push_back(fit_dimension(series, 0, series.entries.size()).slope);
    EXPECT_NEAR(slopes.back(), 0.631, 0.02) << offset;
  }
  EXPECT_LE(std::abs(slopes[0] - slopes[2]), 0.05);
}

TEST(GridSeries, ExactIntervalsMatchFloatIntervals) {
  const auto exact = enumerate_intervals(ExactSeq::constant(R(1, 3)), 10);
  const auto floaty = thirds(10);
  const auto a = grid_series(exact, 2, 14), b = grid_series(floaty, 2, 14);
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    EXPECT_EQ(a.entries[i].count, b.entries[i].count) << i;
}

TEST(ProductCloud, SinglePointTimesUnitInterval) {
  PointCloud base;
  base.dim = 2;
  base.points.push_back({0.3, 0.2, 0.0});
  const auto seg = product_cloud(base, 4096);
  EXPECT_EQ(seg.size(), 4096u);
  EXPECT_EQ(seg.dim, 3u);
  EXPECT_NEAR(fit_dimension(grid_series(seg, 2, 12)).slope, 1.0, 0.05);
  EXPECT_THROW(product_cloud(PointCloud{.dim = 2}, 8), InputError);
  EXPECT_THROW(product_cloud(base, 0), InputError);
}

TEST(ProductCloud, AddsOneToTheSurvivorSlope) {
  // 64 heights resolve octaves up to 6; the fit stays inside that window.
  const auto base = survivor_cloud(level_grid(0.0, 0.5, 64), 1024, 8);
  const auto cube = product_cloud(base, 64);
  const auto s2 = grid_series(base, 2, 6), s3 = grid_series(cube, 2, 6);
  const double d2 = fit_dimension(s2, 0, 5).slope, d3 = fit_dimension(s3, 0, 5).slope;
  EXPECT_NEAR(d3 - d2, 1.0, 0.1);
}

TEST(SurvivorCloud, FubiniStacking) {
  // The 2D survivor set is at least a line of levels times the thinnest fibre.
  const auto fibre2 = survivor_cloud({0.5}, 4096, 8);
  PointCloud fibre;
  fibre.dim = 1;
  for (const auto &pt : fibre2.points)
    fibre.points.push_back({pt[0], 0.0, 0.0});
  const double d1 = fit_dimension(grid_series(fibre, 2, 6), 0, 5).slope;
  const double d2 =
      fit_dimension(grid_series(survivor_cloud(level_grid(0.0, 0.5, 128), 4096, 8), 2, 6), 0, 5)
          .slope;
  EXPECT_GE(d2, 1.0 + d1 - 0.05);
  EXPECT_LE(d2, 2.0);
}

TEST(SurvivorCloud, DeeperSievesThinTheFibreTowardTheCantorSet) {
  const auto shallow = survivor_cloud({0.5}, 8192, 4);
  const auto deep = survivor_cloud({0.5}, 8192, 10);
  EXPECT_GT(shallow.size(), deep.size());
  // depth-n survivors on a midpoint grid approximate measure 1/(n+1)
  EXPECT_NEAR(static_cast<double>(deep.size()) / 8192, 1.0 / 11, 1024.0 / 8192);
}

TEST(SurvivorCloud, WorkerCountDoesNotMatter) {
  const auto levels = level_grid(0.0, 0.5, 16);
  EXPECT_EQ(survivor_cloud(levels, 3000, 7, 1).points, survivor_cloud(levels, 3000, 7, 6).points);
  EXPECT_THROW(survivor_cloud({}, 10, 3), InputError);
}

TEST(LevelGrid, Midpoints) {
  const auto g = level_grid(0.0, 0.5, 4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_DOUBLE_EQ(g[0], 0.0625);
  EXPECT_DOUBLE_EQ(g[3], 0.4375);
}
