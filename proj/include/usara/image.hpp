#pragma once

#include <Eigen/Dense>

#include "usara/common.hpp"

namespace usara {

// Real pixel grid, row-major. `nonneg` is a semantic marker set by producers
// that guarantee elementwise nonnegativity (phantoms, projections, prox
// outputs); it is not re-checked on every operation.
struct Image {
  int width = 0;
  int height = 0;
  Eigen::ArrayXd v;
  bool nonneg = false;

  Image() = default;
  Image(int w, int h) : width(w), height(h), v(Eigen::ArrayXd::Zero(Eigen::Index(w) * h)) {
    require(w > 0 && h > 0, "image dimensions must be positive");
  }
  Image(int w, int h, Eigen::ArrayXd values, bool nonnegative = false)
      : width(w), height(h), v(std::move(values)), nonneg(nonnegative) {
    require(v.size() == Eigen::Index(w) * h, "image payload does not match dimensions");
  }

  Eigen::Index size() const { return v.size(); }
  double& at(int y, int x) { return v[Eigen::Index(y) * width + x]; }
  double at(int y, int x) const { return v[Eigen::Index(y) * width + x]; }

  double norm() const { return std::sqrt(v.square().sum()); }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
};

inline double dot(const Image& a, const Image& b) {
  require(a.same_shape(b), "image shape mismatch in dot");
  return (a.v * b.v).sum();
}

}  // namespace usara
