#pragma once

#include "usara/image.hpp"

namespace usara {

// Reconstruction SNR in dB: 20 log10(||ref|| / ||x - ref||), capped at the
// +300 dB sentinel for an exact match.
inline double metric_snr(const Image& x, const Image& ref) {
  require(x.same_shape(ref), "metric_snr: shape mismatch");
  const double rn = ref.norm();
  require(rn > 0.0, "metric_snr: reference is zero");
  const double dn = std::sqrt((x.v - ref.v).square().sum());
  if (dn == 0.0) return 300.0;
  return std::min(300.0, 20.0 * std::log10(rn / dn));
}

// SNR after the elementwise log compression r(t) = log10(1e3 t + 1)/3, which
// emphasizes faint extended structure. Both images must be nonnegative.
inline double metric_log_snr(const Image& x, const Image& ref) {
  require(x.same_shape(ref), "metric_log_snr: shape mismatch");
  require((x.v >= 0.0).all() && (ref.v >= 0.0).all(),
          "metric_log_snr: negative pixels; project first");
  auto compress = [](const Eigen::ArrayXd& t) {
    return ((1e3 * t + 1.0).log10() / 3.0).eval();
  };
  return metric_snr(Image(x.width, x.height, compress(x.v)),
                    Image(ref.width, ref.height, compress(ref.v)));
}

}  // namespace usara
