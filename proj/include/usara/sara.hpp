#pragma once

#include <array>
#include <concepts>

#include "usara/image.hpp"
#include "usara/wavelets.hpp"

namespace usara {

// Coefficient space of the SARA dictionary: nine contiguous blocks of length
// n each (db1..db8 in order, then the Dirac block).
struct CoefficientVector {
  Eigen::ArrayXd v;
  Eigen::Index block_len = 0;

  static constexpr int kBlocks = 9;

  CoefficientVector() = default;
  explicit CoefficientVector(Eigen::Index n) : v(Eigen::ArrayXd::Zero(n * kBlocks)), block_len(n) {}
  CoefficientVector(Eigen::ArrayXd values, Eigen::Index n) : v(std::move(values)), block_len(n) {
    require(v.size() == n * kBlocks, "coefficient vector length must be 9*n");
  }

  Eigen::Index size() const { return v.size(); }
  auto block(int b) { return v.segment(Eigen::Index(b) * block_len, block_len); }
  auto block(int b) const { return v.segment(Eigen::Index(b) * block_len, block_len); }
};

// Anything exposing a linear analysis operator into a flat coefficient array
// and its adjoint back to images. The prox and smoothing machinery is written
// against this interface; solvers use the SARA dictionary, unit tests may use
// a Dirac-only dictionary where closed forms exist.
template <typename D>
concept AnalysisDictionary = requires(const D& d, const Image& x, const Eigen::ArrayXd& c, int w,
                                      int h, Eigen::Index n) {
  { d.analysis_coeffs(x) } -> std::convertible_to<Eigen::ArrayXd>;
  { d.synthesis_coeffs(w, h, c) } -> std::convertible_to<Image>;
  { d.coeff_size(n) } -> std::convertible_to<Eigen::Index>;
};

// SARA dictionary: concatenation of the first eight Daubechies bases and the
// Dirac basis, scaled by 1/sqrt(9) so that Psi Psi* = Id (Parseval frame).
// Analysis is an exact isometry; synthesis is its adjoint.
class SaraDictionary {
public:
  static constexpr int kBlocks = CoefficientVector::kBlocks;

  explicit SaraDictionary(int decomposition_levels = 4) : levels_(decomposition_levels) {
    require(levels_ >= 1, "sara: decomposition levels must be >= 1");
    for (int order = 1; order <= 8; ++order) banks_[order - 1] = wav::make_daubechies(order);
  }

  int levels() const { return levels_; }
  Eigen::Index coeff_size(Eigen::Index n) const { return n * kBlocks; }

  void check_dims(int w, int h) const {
    const int mult = 1 << levels_;
    if (w % mult != 0 || h % mult != 0)
      throw std::invalid_argument(
          "sara: image dims " + std::to_string(w) + "x" + std::to_string(h) +
          " must be multiples of 2^levels = " + std::to_string(mult) +
          "; pad to the next multiple or lower the decomposition depth");
  }

  // Psi* x as a flat 9n array: block b = (1/3) B_b* x, Dirac block = x/3.
  Eigen::ArrayXd analysis_coeffs(const Image& x) const {
    check_dims(x.width, x.height);
    const Eigen::Index n = x.size();
    Eigen::ArrayXd c(n * kBlocks);
    for (int b = 0; b < 8; ++b) {
      auto blk = c.segment(Eigen::Index(b) * n, n);
      blk = x.v;
      wav::dwt2(blk.data(), x.width, x.height, levels_, banks_[b]);
      blk *= kNorm;
    }
    c.segment(Eigen::Index(8) * n, n) = x.v * kNorm;
    return c;
  }

  // Psi c = (1/3) sum_b B_b c_b; exact adjoint of analysis.
  Image synthesis_coeffs(int w, int h, const Eigen::ArrayXd& c) const {
    check_dims(w, h);
    const Eigen::Index n = Eigen::Index(w) * h;
    require(c.size() == n * kBlocks, "sara synthesis: coefficient length mismatch");
    Eigen::ArrayXd acc = c.segment(Eigen::Index(8) * n, n);
    Eigen::ArrayXd work(n);
    for (int b = 0; b < 8; ++b) {
      work = c.segment(Eigen::Index(b) * n, n);
      wav::idwt2(work.data(), w, h, levels_, banks_[b]);
      acc += work;
    }
    return Image(w, h, acc * kNorm);
  }

  CoefficientVector analysis(const Image& x) const {
    return CoefficientVector(analysis_coeffs(x), x.size());
  }
  Image synthesis(int w, int h, const CoefficientVector& c) const {
    return synthesis_coeffs(w, h, c.v);
  }

private:
  static constexpr double kNorm = 1.0 / 3.0;  // 1/sqrt(9)
  int levels_;
  std::array<wav::FilterBank, 8> banks_;
};

static_assert(AnalysisDictionary<SaraDictionary>);

}  // namespace usara
