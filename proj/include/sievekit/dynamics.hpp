#pragma once

// The sieving map g on the square {(x, p)} and the first-return map of the
// 4-manifold flow on the cube {(x, p, h)}.
//
// On level p the x-axis splits into I_{p,-1} = [0, (1-p)/2),
// I_{p,0} = [(1-p)/2, (1+p)/2] and I_{p,1} = ((1+p)/2, 1]. The side pieces
// are stretched onto level q(p); the closed middle goes to the sink. The
// return map additionally contracts h by 3: h/3 on the left branch,
// 1 - h/3 on the right.

#include "sievekit/cantor.hpp"
#include "sievekit/numeric.hpp"
#include "sievekit/parallel.hpp"
#include "sievekit/qmap.hpp"
#include "sievekit/rng.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sievekit {

enum class MapKind { Sieve, Return };

enum class Branch { Left, Center, Right };

template <Scalar T> struct SieveState {
  T x{0};
  T p{0};
  bool operator==(const SieveState &) const = default;
};

template <Scalar T> struct ReturnState {
  T x{0};
  T p{0};
  T h{0};
  bool operator==(const ReturnState &) const = default;
};

/// nullopt means the point was sent to the sink.
template <typename State> using StepResult = std::optional<State>;

template <Scalar T> Branch branch_of(const T &x, const T &p) {
  if (p == 1)
    return Branch::Center;
  if (x < (T(1) - p) / 2)
    return Branch::Left;
  if (x > (T(1) + p) / 2)
    return Branch::Right;
  return Branch::Center;
}

namespace detail {

template <Scalar T> void check_unit(const T &v, const char *what) {
  if (v < 0 || v > 1)
    throw InputError(std::string(what) + " must lie in [0, 1]");
}

/// x-coordinate after a side branch.
template <Scalar T> T stretch(const T &x, const T &p, Branch b) {
  if (b == Branch::Left)
    return T(2 * x / (T(1) - p));
  return T(2 * (x - (T(1) + p) / 2) / (T(1) - p));
}

} // namespace detail

template <Scalar T> StepResult<SieveState<T>> sieve_step(const SieveState<T> &s) {
  detail::check_unit(s.x, "x");
  detail::check_unit(s.p, "p");
  const Branch b = branch_of(s.x, s.p);
  if (b == Branch::Center)
    return std::nullopt;
  return SieveState<T>{detail::stretch(s.x, s.p, b), q_map(s.p)};
}

template <Scalar T> StepResult<ReturnState<T>> return_step(const ReturnState<T> &s) {
  detail::check_unit(s.x, "x");
  detail::check_unit(s.h, "h");
  if (s.p < 0 || s.p * 2 > 1)
    throw InputError("return map levels must lie in [0, 1/2]");
  const Branch b = branch_of(s.x, s.p);
  if (b == Branch::Center)
    return std::nullopt;
  T h = b == Branch::Left ? T(s.h / 3) : T(T(1) - s.h / 3);
  return ReturnState<T>{detail::stretch(s.x, s.p, b), q_map(s.p), std::move(h)};
}

inline auto step(const SieveState<double> &s) { return sieve_step(s); }
inline auto step(const SieveState<Rational> &s) { return sieve_step(s); }
inline auto step(const ReturnState<double> &s) { return return_step(s); }
inline auto step(const ReturnState<Rational> &s) { return return_step(s); }

template <typename State> struct OrbitOutcome {
  std::optional<std::size_t> escaped_step; // g^t(s0) is the sink
  State state;                             // last alive state

  bool alive() const { return !escaped_step.has_value(); }
};

/// Iterates until the orbit reaches the sink or `depth` steps have been taken.
template <typename State>
OrbitOutcome<State> classify_orbit(const State &s0, std::size_t depth) {
  if (depth == 0)
    throw InputError("classify_orbit: depth must be at least 1");
  State s = s0;
  for (std::size_t t = 1; t <= depth; ++t) {
    auto next = step(s);
    if (!next)
      return {t, s};
    s = std::move(*next);
  }
  return {std::nullopt, s};
}

struct SurvivalEstimate {
  std::uint64_t samples = 0;
  std::uint64_t survivors = 0;
  // escape_histogram[t] = number of samples sent to the sink at step t
  // (index 0 unused).
  std::vector<std::uint64_t> escape_histogram;

  double fraction() const {
    return static_cast<double>(survivors) / static_cast<double>(samples);
  }
  double std_error() const {
    const double f = fraction();
    return std::sqrt(f * (1.0 - f) / static_cast<double>(samples));
  }
  /// Survivors past each depth k = 0..depth, reconstructed from the histogram.
  std::vector<std::uint64_t> alive_after() const {
    std::vector<std::uint64_t> out(escape_histogram.size());
    std::uint64_t alive = samples;
    out[0] = alive;
    for (std::size_t t = 1; t < escape_histogram.size(); ++t) {
      alive -= escape_histogram[t];
      out[t] = alive;
    }
    return out;
  }
};

/// Fraction of uniformly drawn x (and h, for the return map) on level p0
/// that survive `depth` steps. Sample i draws from stream (seed, i).
template <Scalar T = double>
SurvivalEstimate survivor_fraction_mc(MapKind map, double p0, std::size_t depth,
                                      std::uint64_t samples, std::uint64_t seed,
                                      unsigned workers = 1) {
  if (samples == 0)
    throw InputError("samples must be at least 1");
  if (depth == 0)
    throw InputError("depth must be at least 1");
  if (!(p0 >= 0 && p0 <= 1) || (map == MapKind::Return && p0 > 0.5))
    throw InputError("p0 out of range for the selected map");
  const T level = from_double<T>(p0);

  SurvivalEstimate init;
  init.escape_histogram.assign(depth + 1, 0);
  auto fold = [&](SurvivalEstimate &acc, std::uint64_t i) {
    SampleStream rng(seed, i);
    const double x = rng.uniform();
    std::optional<std::size_t> escaped;
    if (map == MapKind::Sieve) {
      escaped = classify_orbit(SieveState<T>{from_double<T>(x), level}, depth).escaped_step;
    } else {
      const double h = rng.uniform();
      escaped = classify_orbit(ReturnState<T>{from_double<T>(x), level, from_double<T>(h)},
                               depth)
                    .escaped_step;
    }
    ++acc.samples;
    if (escaped)
      ++acc.escape_histogram[*escaped];
    else
      ++acc.survivors;
  };
  auto combine = [](SurvivalEstimate &total, const SurvivalEstimate &part) {
    total.samples += part.samples;
    total.survivors += part.survivors;
    for (std::size_t t = 0; t < total.escape_histogram.size(); ++t)
      total.escape_histogram[t] += part.escape_histogram[t];
  };
  return parallel_fold(samples, workers, init, fold, combine);
}

template <Scalar T> struct HInterval {
  std::string word; // 'L'/'R' per step, first step first
  T lo{0};
  T hi{1};
};

/// Image of [0, 1] in h under a branch word.
template <Scalar T> HInterval<T> h_image(const std::string &word) {
  HInterval<T> iv{word, T(0), T(1)};
  for (char c : word) {
    if (c == 'L') {
      iv = {word, T(iv.lo / 3), T(iv.hi / 3)};
    } else if (c == 'R') {
      iv = {word, T(T(1) - iv.hi / 3), T(T(1) - iv.lo / 3)};
    } else {
      throw InputError("branch words use 'L' and 'R'");
    }
  }
  return iv;
}

/// h-images of all 2^n surviving branch words at depth n, words in
/// lexicographic order (L < R). Every word is realized on every level
/// p0 < 1, so the family does not depend on p0 beyond that check.
template <Scalar T = Rational>
std::vector<HInterval<T>> survivor_h_cover(double p0, std::size_t n) {
  if (!(p0 >= 0 && p0 <= 0.5))
    throw InputError("return map levels must lie in [0, 1/2]");
  if (n > 30)
    throw InputError("survivor_h_cover: depth above 30 would list more than 2^30 words");
  std::vector<HInterval<T>> out;
  out.reserve(std::size_t{1} << n);
  for (std::uint64_t w = 0; w < (std::uint64_t{1} << n); ++w) {
    std::string word(n, 'L');
    for (std::size_t i = 0; i < n; ++i)
      if (w >> (n - 1 - i) & 1u)
        word[i] = 'R';
    out.push_back(h_image<T>(word));
  }
  return out;
}

/// Follows a return-map orbit for `depth` steps, recording the branch word.
/// Returns nullopt if it reaches the sink.
template <Scalar T>
std::optional<std::pair<std::string, ReturnState<T>>>
trace_branch_word(ReturnState<T> s, std::size_t depth) {
  std::string word;
  for (std::size_t t = 0; t < depth; ++t) {
    const Branch b = branch_of(s.x, s.p);
    auto next = return_step(s);
    if (!next)
      return std::nullopt;
    word.push_back(b == Branch::Left ? 'L' : 'R');
    s = std::move(*next);
  }
  return std::make_pair(std::move(word), std::move(s));
}

} // namespace sievekit
