#pragma once

// Box-counting estimates for interval families and point clouds, and
// least-squares slopes of log(count) against log(1/eps).

#include "sievekit/cantor.hpp"
#include "sievekit/dynamics.hpp"
#include "sievekit/numeric.hpp"
#include "sievekit/parallel.hpp"
#include "sievekit/point_cloud.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace sievekit {

/// Occupied cells of the grid {[o + k eps, o + (k+1) eps)}^d. A point on a
/// cell boundary belongs to the higher-index cell.
inline std::uint64_t box_count(const PointCloud &cloud, double eps, double offset = 0.0) {
  if (cloud.empty())
    throw InputError("box_count: empty point cloud");
  if (!(eps > 0.0))
    throw InputError("box_count: eps must be positive");
  std::vector<std::array<std::int64_t, 3>> cells;
  cells.reserve(cloud.size());
  for (const auto &pt : cloud.points) {
    std::array<std::int64_t, 3> cell{0, 0, 0};
    for (std::size_t k = 0; k < cloud.dim; ++k)
      cell[k] = floor_to_int((pt[k] - offset) / eps);
    cells.push_back(cell);
  }
  std::sort(cells.begin(), cells.end());
  return static_cast<std::uint64_t>(std::unique(cells.begin(), cells.end()) - cells.begin());
}

/// Cells meeting the interior of some interval (a degenerate interval
/// occupies the cell containing it). Under this rule [0, 1] at eps = 1/10
/// covers 10 cells and middle-thirds rank-n intervals at eps = 3^-n cover
/// exactly 2^n.
template <Scalar T>
std::uint64_t box_count(std::span<const RankInterval<T>> intervals, const T &eps,
                        const T &offset = T(0)) {
  if (intervals.empty())
    throw InputError("box_count: empty interval list");
  if (!(eps > 0))
    throw InputError("box_count: eps must be positive");
  std::vector<std::pair<std::int64_t, std::int64_t>> ranges;
  ranges.reserve(intervals.size());
  for (const auto &iv : intervals) {
    const std::int64_t lo = floor_to_int(T((iv.left - offset) / eps));
    std::int64_t hi = lo;
    if (iv.right > iv.left) {
      // last cell whose left edge is strictly below iv.right
      const T scaled = (iv.right - offset) / eps;
      hi = floor_to_int(scaled);
      if (T(hi) == scaled)
        --hi;
      hi = std::max(hi, lo);
    }
    ranges.emplace_back(lo, hi);
  }
  std::sort(ranges.begin(), ranges.end());
  std::uint64_t total = 0;
  std::int64_t cur_lo = ranges.front().first, cur_hi = ranges.front().second;
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].first <= cur_hi + 1) {
      cur_hi = std::max(cur_hi, ranges[i].second);
    } else {
      total += static_cast<std::uint64_t>(cur_hi - cur_lo + 1);
      cur_lo = ranges[i].first;
      cur_hi = ranges[i].second;
    }
  }
  total += static_cast<std::uint64_t>(cur_hi - cur_lo + 1);
  return total;
}

template <Scalar T>
std::uint64_t box_count(const std::vector<RankInterval<T>> &intervals, const T &eps,
                        const T &offset = T(0)) {
  return box_count(std::span<const RankInterval<T>>(intervals), eps, offset);
}

/// Exact (scale, count) pair for the rank-n family: (lambda_n, 2^n).
template <Scalar T> struct RankCount {
  T scale;
  std::uint64_t count;
  double log_inv_scale;
  double log_count;
};

template <Scalar T>
RankCount<T> count_rank_intervals(const DeletionSequence<T> &seq, std::size_t n) {
  if (n > 63)
    throw InputError("count_rank_intervals: 2^n must fit in 64 bits (n <= 63)");
  return {interval_length(seq, n), std::uint64_t{1} << n, -log_interval_length(seq, n),
          static_cast<double>(n) * std::log(2.0)};
}

/// log(2^n) / log(1 / lambda_n), the finite-scale dimension at rank n.
template <Scalar T> double effective_dimension(const DeletionSequence<T> &seq, std::size_t n) {
  if (n == 0)
    throw InputError("effective dimension needs n >= 1");
  return static_cast<double>(n) * std::log(2.0) / -log_interval_length(seq, n);
}

struct BoxCountEntry {
  double epsilon;
  std::uint64_t count;
  double log_inv_eps;
  double log_count;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  std::vector<double> residuals;
  std::size_t begin = 0; // entry range [begin, end)
  std::size_t end = 0;
};

struct BoxCountSeries {
  std::vector<BoxCountEntry> entries;
  FitResult fit;

  /// Strictly decreasing eps with non-decreasing counts.
  bool well_ordered() const {
    for (std::size_t i = 1; i < entries.size(); ++i)
      if (!(entries[i].epsilon < entries[i - 1].epsilon) ||
          entries[i].count < entries[i - 1].count)
        return false;
    return true;
  }
};

/// Least-squares slope of log_count on log_inv_eps over entries [begin, end).
inline FitResult fit_dimension(const BoxCountSeries &series, std::size_t begin,
                               std::size_t end) {
  if (end > series.entries.size() || begin >= end || end - begin < 2)
    throw InputError("fit_dimension: fit range needs at least two entries");
  const auto n = static_cast<double>(end - begin);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    mx += series.entries[i].log_inv_eps;
    my += series.entries[i].log_count;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double dx = series.entries[i].log_inv_eps - mx;
    sxx += dx * dx;
    sxy += dx * (series.entries[i].log_count - my);
  }
  if (!(sxx > 0.0))
    throw InputError("fit_dimension: all scales in the fit range coincide");
  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.begin = begin;
  fit.end = end;
  double ss = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const auto &e = series.entries[i];
    const double r = e.log_count - (fit.intercept + fit.slope * e.log_inv_eps);
    fit.residuals.push_back(r);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

/// Default range drops the two coarsest and two finest scales when at least
/// two entries remain; otherwise fits everything.
inline FitResult fit_dimension(const BoxCountSeries &series) {
  const std::size_t size = series.entries.size();
  if (size >= 6)
    return fit_dimension(series, 2, size - 2);
  return fit_dimension(series, 0, size);
}

/// Exact-scaling series over ranks [rank_lo, rank_hi]: eps = lambda_n,
/// count = 2^n.
template <Scalar T>
BoxCountSeries exact_series(const DeletionSequence<T> &seq, std::size_t rank_lo,
                            std::size_t rank_hi) {
  if (rank_lo > rank_hi)
    throw InputError("exact_series: empty rank range");
  BoxCountSeries series;
  for (std::size_t n = rank_lo; n <= rank_hi; ++n) {
    const auto rc = count_rank_intervals(seq, n);
    series.entries.push_back(
        {std::exp(-rc.log_inv_scale), rc.count, rc.log_inv_scale, rc.log_count});
  }
  return series;
}

/// Dyadic ladder eps = 2^-k for k in [octave_lo, octave_hi], grid shifted by
/// offset_fraction * eps.
inline BoxCountSeries grid_series(const PointCloud &cloud, int octave_lo, int octave_hi,
                                  double offset_fraction = 0.0) {
  if (octave_lo > octave_hi)
    throw InputError("grid_series: empty octave range");
  cloud.check();
  BoxCountSeries series;
  for (int k = octave_lo; k <= octave_hi; ++k) {
    const double eps = std::ldexp(1.0, -k);
    const auto count = box_count(cloud, eps, offset_fraction * eps);
    series.entries.push_back({eps, count, k * std::log(2.0),
                              std::log(static_cast<double>(count))});
  }
  return series;
}

template <Scalar T>
BoxCountSeries grid_series(const std::vector<RankInterval<T>> &intervals, int octave_lo,
                           int octave_hi, double offset_fraction = 0.0) {
  if (octave_lo > octave_hi)
    throw InputError("grid_series: empty octave range");
  BoxCountSeries series;
  for (int k = octave_lo; k <= octave_hi; ++k) {
    const double eps_d = std::ldexp(1.0, -k);
    const T eps = from_double<T>(eps_d);
    const T offset = from_double<T>(offset_fraction * eps_d);
    const auto count = box_count(intervals, eps, offset);
    series.entries.push_back({eps_d, count, k * std::log(2.0),
                              std::log(static_cast<double>(count))});
  }
  return series;
}

/// Crosses every base point with h_samples evenly spaced heights
/// (j + 1/2) / h_samples.
inline PointCloud product_cloud(const PointCloud &base, std::size_t h_samples) {
  if (base.empty())
    throw InputError("product_cloud: empty base cloud");
  if (base.dim != 2)
    throw InputError("product_cloud: base cloud must be two-dimensional");
  if (h_samples == 0)
    throw InputError("product_cloud: need at least one h sample");
  PointCloud out;
  out.dim = 3;
  out.provenance = base.provenance + "x[0,1]";
  out.points.reserve(base.size() * h_samples);
  for (const auto &pt : base.points)
    for (std::size_t j = 0; j < h_samples; ++j)
      out.points.push_back(
          {pt[0], pt[1], (static_cast<double>(j) + 0.5) / static_cast<double>(h_samples)});
  return out;
}

/// Midpoint grid of `count` levels in [lo, hi].
inline std::vector<double> level_grid(double lo, double hi, std::size_t count) {
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j)
    out.push_back(lo + (hi - lo) * (static_cast<double>(j) + 0.5) / static_cast<double>(count));
  return out;
}

/// Sieve survivors to `depth` on each level, scanned at x midpoints.
inline PointCloud survivor_cloud(const std::vector<double> &levels, std::size_t x_grid,
                                 std::size_t depth, unsigned workers = 1) {
  if (x_grid == 0 || levels.empty())
    throw InputError("survivor_cloud: empty sampling grid");
  using Points = std::vector<std::array<double, 3>>;
  const std::uint64_t total = static_cast<std::uint64_t>(x_grid) * levels.size();
  auto fold = [&](Points &acc, std::uint64_t i) {
    const double p0 = levels[i / x_grid];
    const double x = (static_cast<double>(i % x_grid) + 0.5) / static_cast<double>(x_grid);
    if (classify_orbit(SieveState<double>{x, p0}, depth).alive())
      acc.push_back({x, p0, 0.0});
  };
  auto combine = [](Points &all, const Points &part) {
    all.insert(all.end(), part.begin(), part.end());
  };
  PointCloud cloud;
  cloud.dim = 2;
  cloud.provenance = "sieve-survivors";
  cloud.points = parallel_fold(total, workers, Points{}, fold, combine);
  return cloud;
}

} // namespace sievekit
