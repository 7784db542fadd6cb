#pragma once

// Symmetric two-branch Cantor sets C_P. At rank n every surviving interval
// of length L loses its central part of length p_n * L, leaving two
// children of length L (1 - p_n) / 2. Deleted central parts are closed, so
// gap endpoints are removed while 0 and 1 always survive.

#include "sievekit/numeric.hpp"
#include "sievekit/qmap.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sievekit {

enum class SequenceKind { Explicit, Constant, QOrbit };

/// Deletion proportions p_1, p_2, ... (1-based).
///
/// QOrbit(p0) yields p_n = q^{n-1}(p0). It is the only kind that admits
/// p = 1, and only as its first term (p0 = 1 gives the harmonic sequence
/// 1, 1/2, 1/3, ...); every other generated term lies in (0, 1).
template <Scalar T> class DeletionSequence {
public:
  static DeletionSequence explicit_list(std::vector<T> proportions) {
    for (const auto &p : proportions)
      if (!(p > 0 && p < 1))
        throw InputError("explicit proportions must lie in (0, 1)");
    DeletionSequence s(SequenceKind::Explicit);
    s.values_ = std::move(proportions);
    return s;
  }

  static DeletionSequence constant(T p) {
    if (!(p > 0 && p < 1))
      throw InputError("constant proportion must lie in (0, 1)");
    DeletionSequence s(SequenceKind::Constant);
    s.values_.push_back(std::move(p));
    return s;
  }

  static DeletionSequence q_orbit(T p0) {
    if (!(p0 > 0 && p0 <= 1))
      throw InputError("q-orbit start must lie in (0, 1]");
    DeletionSequence s(SequenceKind::QOrbit);
    s.values_.push_back(std::move(p0));
    return s;
  }

  SequenceKind kind() const { return kind_; }

  /// Initial value for QOrbit / the constant for Constant.
  const T &seed_value() const { return values_.front(); }

  /// Number of defined terms; nullopt for infinite sequences.
  std::optional<std::size_t> size() const {
    if (kind_ == SequenceKind::Explicit)
      return values_.size();
    return std::nullopt;
  }

  bool defined_up_to(std::size_t n) const {
    return kind_ != SequenceKind::Explicit || n <= values_.size();
  }

  void require(std::size_t n) const {
    if (!defined_up_to(n))
      throw InputError("deletion sequence has only " +
                       std::to_string(values_.size()) +
                       " terms, rank " + std::to_string(n) + " requested");
  }

  /// p_n, 1-based. O(n) for QOrbit; use prefix() for bulk access.
  T at(std::size_t n) const {
    if (n == 0)
      throw InputError("deletion proportions are 1-based");
    require(n);
    switch (kind_) {
    case SequenceKind::Explicit:
      return values_[n - 1];
    case SequenceKind::Constant:
      return values_.front();
    case SequenceKind::QOrbit:
      return q_iterate(values_.front(), n - 1);
    }
    return values_.front();
  }

  /// p_1 .. p_n.
  std::vector<T> prefix(std::size_t n) const {
    require(n);
    std::vector<T> out;
    out.reserve(n);
    switch (kind_) {
    case SequenceKind::Explicit:
      out.assign(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(n));
      break;
    case SequenceKind::Constant:
      out.assign(n, values_.front());
      break;
    case SequenceKind::QOrbit: {
      T p = values_.front();
      for (std::size_t i = 0; i < n; ++i) {
        out.push_back(p);
        p = q_map(p);
      }
      break;
    }
    }
    return out;
  }

  /// Same sequence with the other scalar type (exact -> double rounds).
  template <Scalar U> DeletionSequence<U> as() const {
    std::vector<U> converted;
    for (const auto &v : values_) {
      if constexpr (std::is_same_v<U, T>)
        converted.push_back(v);
      else if constexpr (std::is_same_v<U, double>)
        converted.push_back(to_double(v));
      else
        converted.push_back(from_double<U>(v));
    }
    switch (kind_) {
    case SequenceKind::Explicit:
      return DeletionSequence<U>::explicit_list(std::move(converted));
    case SequenceKind::Constant:
      return DeletionSequence<U>::constant(converted.front());
    case SequenceKind::QOrbit:
      break;
    }
    return DeletionSequence<U>::q_orbit(converted.front());
  }

private:
  explicit DeletionSequence(SequenceKind k) : kind_(k) {}

  SequenceKind kind_;
  std::vector<T> values_;
};

/// lambda_n = prod_{j<=n} (1 - p_j) / 2, the common length of rank-n intervals.
template <Scalar T> T interval_length(const DeletionSequence<T> &seq, std::size_t n) {
  seq.require(n);
  T length(1);
  for (const auto &p : seq.prefix(n))
    length *= (T(1) - p) / 2;
  return length;
}

/// log(lambda_n) accumulated in double; stays finite where lambda_n underflows.
template <Scalar T>
double log_interval_length(const DeletionSequence<T> &seq, std::size_t n) {
  seq.require(n);
  double acc = 0.0;
  for (const auto &p : seq.prefix(n))
    acc += std::log1p(-to_double(p)) - std::log(2.0);
  return acc;
}

/// Lebesgue measure of the rank-n union, prod_{j<=n} (1 - p_j).
template <Scalar T> T survivor_measure(const DeletionSequence<T> &seq, std::size_t n) {
  seq.require(n);
  T measure(1);
  for (const auto &p : seq.prefix(n))
    measure *= T(1) - p;
  return measure;
}

/// One closed rank-n interval, addressed by its descent bits
/// ('0' = left child, '1' = right child).
template <Scalar T> struct RankInterval {
  std::string address;
  T left{0};
  T right{1};

  std::size_t rank() const { return address.size(); }
  T length() const { return right - left; }

  static RankInterval unit() { return RankInterval{"", T(0), T(1)}; }
};

template <Scalar T>
RankInterval<T> child_endpoints(const RankInterval<T> &parent, const T &p_next,
                                int side) {
  if (!(p_next > 0 && p_next <= 1))
    throw InputError("child_endpoints: proportion must lie in (0, 1]");
  const T keep = (parent.right - parent.left) * (T(1) - p_next) / 2;
  if (side == 0)
    return RankInterval<T>{parent.address + '0', parent.left, T(parent.left + keep)};
  return RankInterval<T>{parent.address + '1', T(parent.right - keep), parent.right};
}

/// Interval reached by following `address` from [0, 1].
template <Scalar T>
RankInterval<T> interval_at(const DeletionSequence<T> &seq, const std::string &address) {
  auto ps = seq.prefix(address.size());
  auto node = RankInterval<T>::unit();
  for (std::size_t i = 0; i < address.size(); ++i)
    node = child_endpoints(node, ps[i], address[i] == '1' ? 1 : 0);
  return node;
}

/// Streams all rank-n intervals below `root` in address order.
template <Scalar T, typename Fn>
void for_each_interval(const DeletionSequence<T> &seq, std::size_t n, Fn &&visit,
                       RankInterval<T> root = RankInterval<T>::unit()) {
  seq.require(n);
  if (root.rank() > n)
    throw InputError("for_each_interval: root deeper than target rank");
  auto ps = seq.prefix(n);
  std::function<void(const RankInterval<T> &)> descend =
      [&](const RankInterval<T> &node) {
        if (node.rank() == n) {
          visit(node);
          return;
        }
        const T &p = ps[node.rank()];
        descend(child_endpoints(node, p, 0));
        descend(child_endpoints(node, p, 1));
      };
  descend(root);
}

template <Scalar T>
std::vector<RankInterval<T>> enumerate_intervals(const DeletionSequence<T> &seq,
                                                 std::size_t n) {
  std::vector<RankInterval<T>> out;
  if (n < 63)
    out.reserve(std::size_t{1} << n);
  for_each_interval(seq, n, [&](const RankInterval<T> &iv) { out.push_back(iv); });
  return out;
}

struct Address {
  std::string bits;
  bool operator==(const Address &) const = default;
};
/// x fell into the closed central gap removed at `rank`.
struct Deleted {
  std::size_t rank;
  bool operator==(const Deleted &) const = default;
};
using Location = std::variant<Address, Deleted>;

/// Descends n ranks from [0, 1]. Survivors occupy the half-open side pieces
/// [a, a + keep) and (b - keep, b]; the closed middle is deleted.
template <Scalar T>
Location locate(const DeletionSequence<T> &seq, const T &x, std::size_t n) {
  if (x < 0 || x > 1)
    throw InputError("locate: x must lie in [0, 1]");
  auto ps = seq.prefix(n);
  T a(0), b(1);
  std::string bits;
  bits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T keep = (b - a) * (T(1) - ps[i]) / 2;
    const T gap_left = a + keep;
    const T gap_right = b - keep;
    if (x < gap_left) {
      b = gap_left;
      bits.push_back('0');
    } else if (x > gap_right) {
      a = gap_right;
      bits.push_back('1');
    } else {
      return Deleted{i + 1};
    }
  }
  return Address{std::move(bits)};
}

/// mu_P of a rank-n interval: 2^{-n}, exact.
template <Scalar T> Rational mu_measure(const RankInterval<T> &interval) {
  return Rational(BigInt(1), BigInt(1) << interval.rank());
}

struct BracketReport {
  std::size_t n0 = 0;
  std::vector<Rational> orbit; // p0, q(p0), ..., q^{k_max}(p0)
  std::vector<std::size_t> violations;
};

/// Finds n0 with 1/(n0+1) < p0 <= 1/n0 and checks
/// 1/(n0+k+1) < q^k(p0) <= 1/(n0+k) for k = 1..k_max. Exact arithmetic.
inline BracketReport check_class_P(const Rational &p0, std::size_t k_max) {
  if (!(p0 > 0 && p0 <= 1))
    throw InputError("check_class_P: p0 must lie in (0, 1]");
  BracketReport report;
  Rational inv = 1 / p0;
  auto n0 = static_cast<std::size_t>(floor_to_int(inv));
  if (Rational(1, static_cast<long long>(n0) + 1) >= p0 ||
      p0 > Rational(1, static_cast<long long>(n0)))
    throw std::logic_error("check_class_P: bracket search failed");
  report.n0 = n0;
  Rational p = p0;
  report.orbit.push_back(p);
  for (std::size_t k = 1; k <= k_max; ++k) {
    p = q_map(p);
    report.orbit.push_back(p);
    const Rational lo(1, static_cast<long long>(n0 + k + 1));
    const Rational hi(1, static_cast<long long>(n0 + k));
    if (!(lo < p && p <= hi))
      report.violations.push_back(k);
  }
  return report;
}

} // namespace sievekit
