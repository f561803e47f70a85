#pragma once

#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "usara/uv.hpp"

namespace usara {

using SparseInterp = Eigen::SparseMatrix<std::complex<double>, Eigen::RowMajor>;

// Interpolation kernel used to sample the oversampled Fourier grid at
// non-uniform (u,v) positions. Bilinear has 2x2 support and rows that sum to
// one exactly.
struct KernelSpec {
  enum class Type { Bilinear };
  Type type = Type::Bilinear;
};

// Builds the sparse matrix mapping a row-major (grid_h x grid_w) spectrum in
// wrap-around frequency order to the coverage points. Row i interpolates the
// spectrum at point i; zero-weight taps are dropped, so a point exactly on a
// grid node yields a single unit entry.
inline SparseInterp build_interpolation(const UVCoverage& cov, const KernelSpec& kernel,
                                        int grid_w, int grid_h) {
  require(grid_w > 0 && grid_h > 0, "build_interpolation: grid dims must be positive");
  require(kernel.type == KernelSpec::Type::Bilinear, "build_interpolation: unknown kernel");
  constexpr double pi = std::numbers::pi;

  const auto m = static_cast<Eigen::Index>(cov.size());
  std::vector<Eigen::Triplet<std::complex<double>>> trips;
  trips.reserve(std::size_t(m) * 4);

  for (Eigen::Index i = 0; i < m; ++i) {
    const double u = cov.u[std::size_t(i)];
    const double v = cov.v[std::size_t(i)];
    if (!(u >= -pi && u < pi && v >= -pi && v < pi))
      throw std::invalid_argument("build_interpolation: frequency out of [-pi,pi) at point " +
                                  std::to_string(i));
    // Continuous grid coordinate in wrap-around order: frequency 2*pi*k/D at index k.
    const double gu = u / (2.0 * pi) * grid_w;
    const double gv = v / (2.0 * pi) * grid_h;
    const double fu = gu - std::floor(gu);
    const double fv = gv - std::floor(gv);
    const auto wrap = [](double base, int dim) {
      auto k = static_cast<long long>(std::floor(base));
      long long r = k % dim;
      return int(r < 0 ? r + dim : r);
    };
    const int ix0 = wrap(gu, grid_w), ix1 = (ix0 + 1) % grid_w;
    const int iy0 = wrap(gv, grid_h), iy1 = (iy0 + 1) % grid_h;
    const double wx[2] = {1.0 - fu, fu};
    const double wy[2] = {1.0 - fv, fv};
    const int xs[2] = {ix0, ix1};
    const int ys[2] = {iy0, iy1};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const double w = wy[a] * wx[b];
        if (w == 0.0) continue;
        trips.emplace_back(i, Eigen::Index(ys[a]) * grid_w + xs[b], std::complex<double>(w, 0.0));
      }
  }

  SparseInterp G(m, Eigen::Index(grid_w) * grid_h);
  G.setFromTriplets(trips.begin(), trips.end());
  G.makeCompressed();
  return G;
}

}  // namespace usara
