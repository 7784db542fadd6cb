#pragma once

// Birkhoff averages of a distance-to-sink test function and the finite-depth
// proxies for the SRB basin and the nontypical set.
//
// phi(z) = min(1, dist((x, p), sink) / d0) with sink s2 = (1/2, 1). Every
// point with |x - 1/2| >= p/2 (the depth-1 survivors) sits at distance at
// least sqrt(0.2) from s2, so with d0 = 0.4 phi equals 1 on the whole
// surviving set while vanishing at the sink. Escaped orbits stay at the
// sink and contribute phi(sink) = 0 from then on.

#include "sievekit/dynamics.hpp"
#include "sievekit/parallel.hpp"
#include "sievekit/point_cloud.hpp"
#include "sievekit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace sievekit {

struct TestFunction {
  double sink_x = 0.5;
  double sink_p = 1.0;
  double d0 = 0.4;
  double shift = 0.0; // added to every value; 0 for the construction itself

  double operator()(double x, double p) const {
    const double dist = std::hypot(x - sink_x, p - sink_p);
    return std::min(1.0, dist / d0) + shift;
  }
  template <Scalar T> double operator()(const SieveState<T> &z) const {
    return (*this)(to_double(z.x), to_double(z.p));
  }
  /// h is absorbed by the sink, so only (x, p) matters.
  template <Scalar T> double operator()(const ReturnState<T> &z) const {
    return (*this)(to_double(z.x), to_double(z.p));
  }
  double at_sink() const { return (*this)(sink_x, sink_p); }
};

/// Integral of phi against the SRB measure, the delta-measure at the sink.
inline double space_average(const TestFunction &phi) { return phi.at_sink(); }

struct AverageTrace {
  std::vector<double> partial; // partial[n-1] = phi_n, n = 1..N
  std::optional<std::size_t> escaped_step;

  double final_average() const { return partial.back(); }
};

/// phi_n = (1/n) sum_{k<n} phi(f^k z0) for n = 1..N. A disengaged z0 denotes
/// the sink itself.
template <typename State>
AverageTrace time_average(const TestFunction &phi, const std::optional<State> &z0,
                          std::size_t N) {
  if (N == 0)
    throw InputError("time_average: N must be at least 1");
  AverageTrace trace;
  trace.partial.reserve(N);
  std::optional<State> z = z0;
  double sum = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    sum += z ? phi(*z) : phi.at_sink();
    trace.partial.push_back(sum / static_cast<double>(k + 1));
    if (z) {
      z = step(*z);
      if (!z && !trace.escaped_step)
        trace.escaped_step = k + 1;
    }
  }
  return trace;
}

/// phi_N and the escape step (if any within N steps) without storing the
/// trace. Escaped orbits stop early since the sink contributes phi(sink).
template <typename State>
std::pair<double, std::optional<std::size_t>>
final_average(const TestFunction &phi, const State &z0, std::size_t N) {
  State z = z0;
  double sum = 0.0;
  const double sink_value = phi.at_sink();
  for (std::size_t k = 0; k < N; ++k) {
    sum += phi(z);
    auto next = step(z);
    if (!next) {
      sum += sink_value * static_cast<double>(N - k - 1);
      return {sum / static_cast<double>(N), k + 1};
    }
    z = std::move(*next);
  }
  return {sum / static_cast<double>(N), std::nullopt};
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("alpha must lie in (0, 1)");
}

/// Depth-N proxy for membership in K_{phi,alpha}: alive after N steps with
/// |phi_N - space average| > alpha.
template <typename State>
bool nontypical_test(const TestFunction &phi, double alpha, const std::optional<State> &z0,
                     std::size_t N) {
  check_alpha(alpha);
  if (!z0)
    return false;
  auto [avg, escaped] = final_average(phi, *z0, N);
  return !escaped && std::abs(avg - space_average(phi)) > alpha;
}

struct BasinEstimate {
  std::uint64_t samples = 0;
  std::uint64_t in_basin = 0;
  double fraction() const {
    return static_cast<double>(in_basin) / static_cast<double>(samples);
  }
};

/// Fraction of uniform initial points on level p0 with
/// |phi_N - space average| <= tau.
inline BasinEstimate basin_fraction_mc(MapKind map, const TestFunction &phi, double tau,
                                       double p0, std::size_t N, std::uint64_t samples,
                                       std::uint64_t seed, unsigned workers = 1) {
  if (samples == 0)
    throw InputError("samples must be at least 1");
  if (N == 0)
    throw InputError("N must be at least 1");
  if (!(tau >= 0.0))
    throw InputError("tau must be non-negative");
  if (!(p0 >= 0 && p0 <= 1) || (map == MapKind::Return && p0 > 0.5))
    throw InputError("p0 out of range for the selected map");
  const double target = space_average(phi);
  auto fold = [&](BasinEstimate &acc, std::uint64_t i) {
    SampleStream rng(seed, i);
    const double x = rng.uniform();
    double avg;
    if (map == MapKind::Sieve) {
      avg = final_average(phi, SieveState<double>{x, p0}, N).first;
    } else {
      const double h = rng.uniform();
      avg = final_average(phi, ReturnState<double>{x, p0, h}, N).first;
    }
    ++acc.samples;
    if (std::abs(avg - target) <= tau)
      ++acc.in_basin;
  };
  auto combine = [](BasinEstimate &total, const BasinEstimate &part) {
    total.samples += part.samples;
    total.in_basin += part.in_basin;
  };
  return parallel_fold(samples, workers, BasinEstimate{}, fold, combine);
}

/// Where initial points come from. With x_grid > 0 each level is scanned at
/// midpoints (i + 1/2) / x_grid (and h at (j + 1/2) / h_grid for the return
/// map); otherwise `samples_per_level` random points are drawn per level.
struct SamplingPlan {
  std::vector<double> levels{0.5};
  std::size_t x_grid = 0;
  std::size_t h_grid = 1;
  std::uint64_t samples_per_level = 0;
};

/// Initial points classified nontypical at depth N, as (x, p) for the sieve
/// and (x, p, h) for the return map. Empty when alpha >= 1, since phi <= 1.
inline PointCloud sample_nontypical(MapKind map, const TestFunction &phi, double alpha,
                                    std::size_t N, const SamplingPlan &plan,
                                    std::uint64_t seed, unsigned workers = 1) {
  PointCloud cloud;
  cloud.dim = map == MapKind::Sieve ? 2 : 3;
  cloud.provenance = map == MapKind::Sieve ? "sieve-nontypical" : "return-nontypical";
  if (!(alpha > 0.0))
    throw InputError("alpha must be positive");
  if (N == 0)
    throw InputError("N must be at least 1");
  for (double p0 : plan.levels)
    if (!(p0 >= 0 && p0 <= 1) || (map == MapKind::Return && p0 > 0.5))
      throw InputError("sampling level out of range for the selected map");
  if (alpha >= 1.0)
    return cloud;

  const bool grid = plan.x_grid > 0;
  const std::uint64_t h_count = map == MapKind::Return && grid ? std::max<std::size_t>(1, plan.h_grid) : 1;
  const std::uint64_t per_level = grid ? plan.x_grid * h_count : plan.samples_per_level;
  if (per_level == 0)
    throw InputError("sampling plan selects no points");
  const std::uint64_t total = per_level * plan.levels.size();

  using Points = std::vector<std::array<double, 3>>;
  auto fold = [&](Points &acc, std::uint64_t i) {
    const double p0 = plan.levels[i / per_level];
    const std::uint64_t j = i % per_level;
    double x, h = 0.0;
    if (grid) {
      x = (static_cast<double>(j / h_count) + 0.5) / static_cast<double>(plan.x_grid);
      h = (static_cast<double>(j % h_count) + 0.5) / static_cast<double>(h_count);
    } else {
      SampleStream rng(seed, i);
      x = rng.uniform();
      h = rng.uniform();
    }
    bool hit;
    if (map == MapKind::Sieve)
      hit = nontypical_test(phi, alpha, std::optional{SieveState<double>{x, p0}}, N);
    else
      hit = nontypical_test(phi, alpha, std::optional{ReturnState<double>{x, p0, h}}, N);
    if (hit)
      acc.push_back({x, p0, map == MapKind::Return ? h : 0.0});
  };
  auto combine = [](Points &all, const Points &part) {
    all.insert(all.end(), part.begin(), part.end());
  };
  cloud.points = parallel_fold(total, workers, Points{}, fold, combine);
  return cloud;
}

} // namespace sievekit
