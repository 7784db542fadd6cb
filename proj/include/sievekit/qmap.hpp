#pragma once

#include "sievekit/numeric.hpp"

namespace sievekit {

/// The level map q(p) = p / (1 + p). Fixes 0, sends 1/n to 1/(n+1).
template <Scalar T> T q_map(const T &p) {
  if (p < 0 || p > 1)
    throw InputError("q_map: p must lie in [0, 1]");
  return T(p / (T(1) + p));
}

/// k-fold iterate of q, computed step by step so that floating results agree
/// with orbits produced by the dynamics.
template <Scalar T> T q_iterate(T p, std::size_t k) {
  for (std::size_t i = 0; i < k; ++i)
    p = q_map(p);
  return p;
}

} // namespace sievekit
