#pragma once

#include "sievekit/numeric.hpp"

#include <array>
#include <string>
#include <vector>

namespace sievekit {

/// Points in [0, 1]^d, d in {1, 2, 3}. Unused trailing coordinates are 0.
struct PointCloud {
  std::size_t dim = 1;
  std::vector<std::array<double, 3>> points;
  std::string provenance;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }

  void check() const {
    if (dim < 1 || dim > 3)
      throw InputError("point cloud dimension must be 1, 2 or 3");
    for (const auto &pt : points)
      for (std::size_t k = 0; k < dim; ++k)
        if (!(pt[k] >= 0.0 && pt[k] <= 1.0))
          throw InputError("point cloud coordinate outside [0, 1]");
  }
};

} // namespace sievekit
