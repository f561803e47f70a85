#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <vector>

#include "usara/common.hpp"

namespace usara {

// Spatial-frequency sampling points, normalized to [-pi, pi)^2. Points are
// grouped into tracks, one per antenna pair; `baseline_m` is indexed by track
// (pair) id and holds the physical baseline length in meters.
struct UVCoverage {
  std::vector<double> u, v;
  std::vector<std::uint32_t> track;
  std::vector<double> baseline_m;

  std::size_t size() const { return u.size(); }

  void validate() const {
    require(u.size() == v.size() && u.size() == track.size(),
            "uv coverage: parallel arrays must have equal length");
    for (std::size_t i = 0; i < size(); ++i)
      require(track[i] < baseline_m.size(), "uv coverage: track id out of range");
  }
};

struct VisibilitySet {
  Eigen::VectorXcd values;
  std::shared_ptr<const UVCoverage> coverage;

  Eigen::Index size() const { return values.size(); }
};

}  // namespace usara
