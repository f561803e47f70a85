#pragma once

#include <cmath>
#include <numbers>

#include "usara/measurement.hpp"

namespace usara {

// Antenna positions in a local (east, north, up) frame, meters.
struct AntennaArray {
  std::vector<Eigen::Vector3d> positions;

  std::size_t count() const { return positions.size(); }
  void validate() const {
    require(count() >= 2, "antenna array: need at least 2 antennas");
    for (std::size_t i = 0; i < count(); ++i)
      for (std::size_t j = i + 1; j < count(); ++j)
        require((positions[i] - positions[j]).norm() > 0.0,
                "antenna array: positions must be distinct");
  }
};

struct ObservationSpec {
  double declination = 0.6;                  // radians
  double hour_angle_begin = -0.5;            // radians
  double hour_angle_end = 0.5;               // radians
  int samples_per_pair = 100;
  double wavelength = 0.21;                  // meters
  double max_frequency_scale = 0.95;         // coverage fits max|u|,|v| <= scale*pi

  void validate() const {
    require(hour_angle_begin < hour_angle_end, "observation: hour-angle range must be nonempty");
    require(samples_per_pair >= 1, "observation: samples per pair must be >= 1");
    require(wavelength > 0.0, "observation: wavelength must be positive");
    require(max_frequency_scale > 0.0 && max_frequency_scale < 1.0,
            "observation: max_frequency_scale must be in (0,1)");
  }
};

inline std::uint64_t expected_visibility_count(std::uint64_t n_antennas,
                                               std::uint64_t samples_per_pair) {
  return n_antennas * (n_antennas - 1) / 2 * samples_per_pair;
}

// Earth-rotation synthesis tracks: each unordered antenna pair traces an
// elliptical arc as the hour angle sweeps [h0, h1]. With baseline (Bx,By,Bz)
// in (east, north, up) and declination delta,
//   u = (Bx sin h + By cos h) / lambda
//   v = (-Bx sin(delta) cos h + By sin(delta) sin h + Bz cos(delta)) / lambda
// after which all points are rescaled globally so max(|u|,|v|) equals
// max_frequency_scale * pi. Track id = pair index in (i<j) enumeration order.
inline UVCoverage generate_tracks(const AntennaArray& array, const ObservationSpec& spec) {
  require(array.count() >= 2, "generate_tracks: need at least 2 antennas");
  spec.validate();  // coincident pairs are tolerated here: their track sits at (0,0)
  constexpr double pi = std::numbers::pi;
  const std::size_t na = array.count();
  const int s = spec.samples_per_pair;
  const double sd = std::sin(spec.declination), cd = std::cos(spec.declination);

  UVCoverage cov;
  const std::uint64_t m = expected_visibility_count(na, std::uint64_t(s));
  cov.u.reserve(m);
  cov.v.reserve(m);
  cov.track.reserve(m);

  std::uint32_t pair_id = 0;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = i + 1; j < na; ++j, ++pair_id) {
      const Eigen::Vector3d B = array.positions[j] - array.positions[i];
      cov.baseline_m.push_back(B.norm());
      for (int k = 0; k < s; ++k) {
        const double h = (s == 1) ? spec.hour_angle_begin
                                  : spec.hour_angle_begin +
                                        (spec.hour_angle_end - spec.hour_angle_begin) * k / (s - 1);
        const double sh = std::sin(h), ch = std::cos(h);
        cov.u.push_back((B.x() * sh + B.y() * ch) / spec.wavelength);
        cov.v.push_back((-B.x() * sd * ch + B.y() * sd * sh + B.z() * cd) / spec.wavelength);
        cov.track.push_back(pair_id);
      }
    }
  }

  double peak = 0.0;
  for (std::size_t k = 0; k < cov.size(); ++k)
    peak = std::max(peak, std::max(std::abs(cov.u[k]), std::abs(cov.v[k])));
  if (peak == 0.0)
    throw std::invalid_argument("generate_tracks: degenerate coverage (all baselines zero)");
  const double scale = spec.max_frequency_scale * pi / peak;
  for (std::size_t k = 0; k < cov.size(); ++k) {
    cov.u[k] *= scale;
    cov.v[k] *= scale;
  }
  return cov;
}

// Synthetic centrally-condensed array: antennas placed on a seeded spiral
// with log-spaced radii, so baseline lengths are distinct and span a wide
// range (short-spacing-rich, like physical arrays).
inline AntennaArray make_synthetic_array(int n_antennas, std::uint64_t seed,
                                         double max_radius_m = 4000.0) {
  require(n_antennas >= 2, "synthetic array: need at least 2 antennas");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  AntennaArray a;
  a.positions.reserve(std::size_t(n_antennas));
  for (int i = 0; i < n_antennas; ++i) {
    const double t = (i + 1.0) / n_antennas;
    const double r = max_radius_m * std::pow(t, 1.8) * (0.7 + 0.6 * unif(rng));
    const double th = 2.4 * i + 0.3 * unif(rng);  // golden-angle-ish spread
    a.positions.emplace_back(r * std::cos(th), r * std::sin(th), 2.0 * unif(rng));
  }
  a.validate();
  return a;
}

// Per-sample complex noise level: sigma is the standard deviation of one
// complex sample (real and imaginary parts each N(0, sigma^2/2)).
struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const { require(sigma >= 0.0, "noise: sigma must be >= 0"); }
};

// y = Phi x + eps with eps i.i.d. circular complex Gaussian; reproducible for
// a fixed seed.
inline VisibilitySet simulate_visibilities(const MeasurementOperator& op, const Image& truth,
                                           const NoiseSpec& noise) {
  noise.validate();
  VisibilitySet y = op.forward(truth);
  if (noise.sigma > 0.0) {
    Rng rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, noise.sigma / std::sqrt(2.0));
    for (Eigen::Index i = 0; i < y.values.size(); ++i)
      y.values[i] += std::complex<double>(gauss(rng), gauss(rng));
  }
  return y;
}

// sigma achieving an expected input SNR of target_snr_db:
// 20 log10(||clean|| / ||eps||) with E||eps||^2 = m sigma^2 gives
// sigma = ||clean|| / (sqrt(m) 10^(target/20)).
inline double calibrate_noise_sigma(const VisibilitySet& clean, double target_snr_db) {
  const double norm = clean.values.norm();
  require(norm > 0.0, "calibrate_noise_sigma: clean visibilities are zero");
  return norm / (std::sqrt(double(clean.size())) * std::pow(10.0, target_snr_db / 20.0));
}

// Measured input SNR of a noisy set against its clean counterpart.
inline double input_snr_db(const VisibilitySet& clean, const VisibilitySet& noisy) {
  require(clean.size() == noisy.size(), "input_snr_db: size mismatch");
  const double num = clean.values.norm();
  const double den = (noisy.values - clean.values).norm();
  require(den > 0.0, "input_snr_db: zero noise");
  return 20.0 * std::log10(num / den);
}

struct PhantomSpec {
  struct Blob {
    double cy = 0, cx = 0;       // center, pixels
    double sy = 1, sx = 1;       // principal std deviations, pixels
    double angle = 0;            // rotation of principal axes, radians
    double amplitude = 1;
  };
  struct PointSource {
    int y = 0, x = 0;
    double amplitude = 1;
  };

  int size = 128;
  std::vector<Blob> blobs;
  std::vector<PointSource> point_sources;

  void validate() const {
    require(size >= 8, "phantom: size must be >= 8");
    for (const auto& b : blobs)
      require(b.sy > 0 && b.sx > 0 && b.amplitude >= 0, "phantom: invalid blob");
    for (const auto& p : point_sources)
      require(p.y >= 0 && p.y < size && p.x >= 0 && p.x < size && p.amplitude >= 0,
              "phantom: point source out of range");
  }
};

// Random phantom: extended Gaussian blobs plus compact point sources.
inline PhantomSpec random_phantom_spec(int size, int n_blobs, int n_points, std::uint64_t seed) {
  PhantomSpec spec;
  spec.size = size;
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n_blobs; ++i) {
    PhantomSpec::Blob b;
    b.cy = size * (0.15 + 0.7 * unif(rng));
    b.cx = size * (0.15 + 0.7 * unif(rng));
    b.sy = size * (0.02 + 0.08 * unif(rng));
    b.sx = size * (0.02 + 0.08 * unif(rng));
    b.angle = std::numbers::pi * unif(rng);
    b.amplitude = 0.2 + 0.8 * unif(rng);
    spec.blobs.push_back(b);
  }
  for (int i = 0; i < n_points; ++i) {
    PhantomSpec::PointSource p;
    p.y = int(size * unif(rng)) % size;
    p.x = int(size * unif(rng)) % size;
    p.amplitude = 0.5 + 1.5 * unif(rng);
    spec.point_sources.push_back(p);
  }
  return spec;
}

// Nonnegative image, max-normalized to 1 when nonzero. An empty spec yields
// the zero image.
inline Image generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const int N = spec.size;
  Image img(N, N);
  for (const auto& b : spec.blobs) {
    const double ca = std::cos(b.angle), sa = std::sin(b.angle);
    for (int y = 0; y < N; ++y)
      for (int x = 0; x < N; ++x) {
        const double dy = y - b.cy, dx = x - b.cx;
        const double py = ca * dy - sa * dx, px = sa * dy + ca * dx;
        const double e = 0.5 * (py * py / (b.sy * b.sy) + px * px / (b.sx * b.sx));
        if (e < 40.0) img.at(y, x) += b.amplitude * std::exp(-e);
      }
  }
  for (const auto& p : spec.point_sources) img.at(p.y, p.x) += p.amplitude;
  const double peak = img.v.maxCoeff();
  if (peak > 0.0) img.v /= peak;
  img.nonneg = true;
  return img;
}

}  // namespace usara
