#pragma once

// gamma-regularity certificates for the natural measure mu_P and the
// Hausdorff dimension lower bounds they imply.
//
// A rank-n interval has mu_P-mass 2^{-n} and length lambda_n, so the
// regularity ratio at rank n is 2^{-n} / lambda_n^gamma. Once
// 2^{gamma-1} < (1 - p_j)^gamma holds for every later j, the ratio sequence
// decreases and its running maximum bounds mu(U) / |U|^gamma on rank
// intervals. Arbitrary sets U of diameter between lambda_{n+1} and lambda_n
// cost at most an extra factor 3^gamma, which the certificate folds into
// its constant. All ratios are carried in the log domain because lambda_n
// underflows a double near rank 1070.

#include "sievekit/cantor.hpp"
#include "sievekit/numeric.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace sievekit {

struct RegularityCertificate {
  double gamma = 0.0;
  std::size_t threshold = 0;    // ratio(n) is non-increasing for n > threshold
  double constant_c = 0.0;      // 3^gamma * max ratio over [0, checked_rank]
  double log_constant_c = 0.0;
  double delta = 0.0;           // lambda_{checked_rank}; may underflow to 0
  double log_delta = 0.0;
  std::size_t checked_rank = 0;
  // Leading terms equal to 1 (QOrbit(1) only) are skipped: regularity is a
  // property of the tail and a total first deletion leaves nothing to measure.
  std::size_t offset = 0;
};

struct CertifyFailure {
  std::string reason;
};

using CertifyResult = std::variant<RegularityCertificate, CertifyFailure>;

namespace detail {

inline void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw InputError("gamma must lie in (0, 1)");
}

/// p_{offset+1} .. p_{offset+n} as doubles, after dropping leading ones.
template <Scalar T>
std::vector<double> tail_prefix(const DeletionSequence<T> &seq, std::size_t n,
                                std::size_t &offset) {
  offset = 0;
  if (seq.kind() == SequenceKind::QOrbit && seq.seed_value() == 1)
    offset = 1;
  auto raw = seq.prefix(n + offset);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = offset; i < raw.size(); ++i)
    out.push_back(to_double(raw[i]));
  return out;
}

/// log ratio(n) for n = 0..ps.size().
inline std::vector<double> log_ratios(const std::vector<double> &ps, double gamma) {
  std::vector<double> out;
  out.reserve(ps.size() + 1);
  double log_lambda = 0.0;
  out.push_back(0.0);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    log_lambda += std::log1p(-ps[i]) - std::log(2.0);
    const double n = static_cast<double>(i + 1);
    out.push_back(-n * std::log(2.0) - gamma * log_lambda);
  }
  return out;
}

/// 2^{gamma-1} < (1 - p)^gamma, compared in logs.
inline bool contraction_holds(double p, double gamma) {
  return (gamma - 1.0) * std::log(2.0) < gamma * std::log1p(-p);
}

} // namespace detail

template <Scalar T>
double regularity_log_ratio(const DeletionSequence<T> &seq, double gamma, std::size_t n) {
  detail::check_gamma(gamma);
  return -static_cast<double>(n) * std::log(2.0) - gamma * log_interval_length(seq, n);
}

/// 2^{-n} / lambda_n^gamma.
template <Scalar T>
double regularity_ratio(const DeletionSequence<T> &seq, double gamma, std::size_t n) {
  return std::exp(regularity_log_ratio(seq, gamma, n));
}

template <Scalar T>
CertifyResult certify(const DeletionSequence<T> &seq, double gamma, std::size_t rank_max) {
  detail::check_gamma(gamma);
  if (rank_max == 0)
    throw InputError("certify: rank_max must be positive");
  std::size_t offset = 0;
  const auto ps = detail::tail_prefix(seq, rank_max, offset);

  // Largest failing index; the threshold sits there.
  std::size_t threshold = 0;
  for (std::size_t j = rank_max; j >= 1; --j) {
    if (!detail::contraction_holds(ps[j - 1], gamma)) {
      threshold = j;
      break;
    }
  }
  if (threshold == rank_max)
    return CertifyFailure{"no-threshold: 2^(gamma-1) < (1-p_j)^gamma fails at rank " +
                          std::to_string(rank_max)};

  const auto logs = detail::log_ratios(ps, gamma);
  const double max_log = *std::max_element(logs.begin(), logs.end());

  RegularityCertificate cert;
  cert.gamma = gamma;
  cert.threshold = threshold;
  cert.log_constant_c = gamma * std::log(3.0) + max_log;
  cert.constant_c = std::exp(cert.log_constant_c);
  double log_lambda = 0.0;
  for (double p : ps)
    log_lambda += std::log1p(-p) - std::log(2.0);
  cert.log_delta = log_lambda;
  cert.delta = std::exp(log_lambda);
  cert.checked_rank = rank_max;
  cert.offset = offset;
  return cert;
}

/// Replays a certificate against the sequence; returns the broken invariants
/// (empty when the certificate is valid).
template <Scalar T>
std::vector<std::string> validate_certificate(const DeletionSequence<T> &seq,
                                              const RegularityCertificate &cert) {
  std::vector<std::string> issues;
  detail::check_gamma(cert.gamma);
  std::size_t offset = 0;
  const auto ps = detail::tail_prefix(seq, cert.checked_rank, offset);
  if (offset != cert.offset)
    issues.push_back("offset mismatch");
  const auto logs = detail::log_ratios(ps, cert.gamma);
  // Replayed logs are recomputed in the same order; 1e-12 absorbs the
  // rounding of the stored exp/log round trip only.
  const double bound = cert.log_constant_c - cert.gamma * std::log(3.0) + 1e-12;
  for (std::size_t n = 1; n <= cert.checked_rank; ++n)
    if (logs[n] > bound) {
      issues.push_back("ratio bound exceeded at rank " + std::to_string(n));
      break;
    }
  for (std::size_t n = cert.threshold + 1; n < cert.checked_rank; ++n)
    if (logs[n + 1] > logs[n]) {
      issues.push_back("ratio increases after threshold at rank " + std::to_string(n));
      break;
    }
  for (std::size_t j = cert.threshold + 1; j <= cert.checked_rank; ++j)
    if (!detail::contraction_holds(ps[j - 1], cert.gamma)) {
      issues.push_back("contraction inequality fails at j = " + std::to_string(j));
      break;
    }
  double log_lambda = 0.0;
  for (double p : ps)
    log_lambda += std::log1p(-p) - std::log(2.0);
  if (std::abs(cert.log_delta - log_lambda) > 1e-9 * std::max(1.0, std::abs(log_lambda)))
    issues.push_back("delta does not match lambda at the checked rank");
  return issues;
}

/// Lower bound dim_H >= gamma carried with its mass-distribution witness:
/// any cover by sets of diameter below `scale` has sum |U_i|^gamma >= 1/c.
struct DimensionLowerBound {
  double gamma;
  double gamma_volume_floor; // 1 / constant_c
  double scale;              // delta
};

inline DimensionLowerBound dimension_lower_bound(const RegularityCertificate &cert) {
  return {cert.gamma, std::exp(-cert.log_constant_c), cert.delta};
}

/// Largest certificate constant over a set of q-orbit levels, with the
/// level attaining it.
struct UniformConstant {
  double constant_c = 0.0;
  double argmax_p0 = 0.0;
  bool all_certified = true;
};

inline UniformConstant uniform_constant(const std::vector<double> &levels, double gamma,
                                        std::size_t rank_max) {
  UniformConstant out;
  for (double p0 : levels) {
    auto res = certify(DeletionSequence<double>::q_orbit(p0), gamma, rank_max);
    if (auto *cert = std::get_if<RegularityCertificate>(&res)) {
      if (cert->constant_c > out.constant_c) {
        out.constant_c = cert->constant_c;
        out.argmax_p0 = p0;
      }
    } else {
      out.all_certified = false;
    }
  }
  return out;
}

inline void to_json(nlohmann::json &j, const RegularityCertificate &c) {
  j = nlohmann::json{{"gamma", c.gamma},
                     {"threshold", c.threshold},
                     {"constant_c", c.constant_c},
                     {"log_constant_c", c.log_constant_c},
                     {"delta", c.delta},
                     {"log_delta", c.log_delta},
                     {"checked_rank", c.checked_rank},
                     {"offset", c.offset}};
}

inline void from_json(const nlohmann::json &j, RegularityCertificate &c) {
  j.at("gamma").get_to(c.gamma);
  j.at("threshold").get_to(c.threshold);
  j.at("constant_c").get_to(c.constant_c);
  j.at("log_constant_c").get_to(c.log_constant_c);
  j.at("delta").get_to(c.delta);
  j.at("log_delta").get_to(c.log_delta);
  j.at("checked_rank").get_to(c.checked_rank);
  c.offset = j.value("offset", std::size_t{0});
}

} // namespace sievekit
