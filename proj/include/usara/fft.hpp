#pragma once

#include <fftw3.h>

#include <complex>
#include <memory>

#include "usara/image.hpp"

namespace usara {

// Complex Fourier grid of an image padded by an integer oversampling factor.
// The image is embedded in the top-left block; frequencies are addressed in
// wrap-around (FFT) order.
struct PaddedGrid {
  int width = 0;   // factor * image width
  int height = 0;  // factor * image height
  int factor = 1;
  Eigen::ArrayXcd v;  // row-major

  PaddedGrid() = default;
  PaddedGrid(int w, int h, int f)
      : width(w), height(h), factor(f), v(Eigen::ArrayXcd::Zero(Eigen::Index(w) * h)) {}

  Eigen::Index size() const { return v.size(); }
};

inline PaddedGrid zero_pad(const Image& x, int factor) {
  require(factor >= 1, "zero_pad: factor must be >= 1");
  PaddedGrid g(x.width * factor, x.height * factor, factor);
  for (int y = 0; y < x.height; ++y)
    for (int xx = 0; xx < x.width; ++xx)
      g.v[Eigen::Index(y) * g.width + xx] = x.at(y, xx);
  return g;
}

// Adjoint of zero_pad in the real inner product: real part of the embedded block.
inline Image adjoint_crop(const PaddedGrid& g) {
  require(g.factor >= 1 && g.width % g.factor == 0 && g.height % g.factor == 0,
          "adjoint_crop: grid dimensions not divisible by padding factor");
  const int w = g.width / g.factor, h = g.height / g.factor;
  Image x(w, h);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      x.at(y, xx) = g.v[Eigen::Index(y) * g.width + xx].real();
  return x;
}

namespace detail {

struct PlanDeleter {
  void operator()(fftw_plan p) const {
    if (p) fftw_destroy_plan(p);
  }
};
using PlanPtr = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

// Forward/backward c2c plans for one grid shape. Plans are created with
// FFTW_UNALIGNED so they can execute on any caller buffer; execution via the
// new-array interface is safe from concurrent threads.
class FftPlans {
public:
  FftPlans(int width, int height) : width_(width), height_(height) {
    Eigen::ArrayXcd scratch(Eigen::Index(width) * height);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    // fftw_plan_dft_2d takes (n0, n1) = (rows, cols) for row-major data
    forward_.reset(fftw_plan_dft_2d(height, width, p, p, FFTW_FORWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED));
    backward_.reset(fftw_plan_dft_2d(height, width, p, p, FFTW_BACKWARD,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED));
    if (!forward_ || !backward_) throw std::runtime_error("fftw plan creation failed");
  }

  // Unnormalized DFT, in place.
  void forward(Eigen::ArrayXcd& buf) const {
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_execute_dft(forward_.get(), p, p);
  }
  // Unnormalized inverse DFT (the conjugate transpose of forward), in place.
  void backward(Eigen::ArrayXcd& buf) const {
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_execute_dft(backward_.get(), p, p);
  }

  int width() const { return width_; }
  int height() const { return height_; }

private:
  int width_, height_;
  PlanPtr forward_, backward_;
};

}  // namespace detail

// Unnormalized forward 2D DFT of the grid.
inline PaddedGrid dft2(const PaddedGrid& g) {
  PaddedGrid out = g;
  detail::FftPlans plans(g.width, g.height);
  plans.forward(out.v);
  return out;
}

// Inverse 2D DFT carrying the 1/d factor, so idft2(dft2(g)) == g.
inline PaddedGrid idft2(const PaddedGrid& g) {
  PaddedGrid out = g;
  detail::FftPlans plans(g.width, g.height);
  plans.backward(out.v);
  out.v /= double(g.size());
  return out;
}

}  // namespace usara
