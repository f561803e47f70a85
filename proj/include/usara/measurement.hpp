#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>

#include "usara/fft.hpp"
#include "usara/gridding.hpp"

namespace usara {

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Power-iteration estimate of the largest eigenvalue of a symmetric positive
// semidefinite operator given as x -> A*A x. Deterministic for a fixed seed:
// the start vector is all-ones plus a small seeded perturbation.
inline NormEstimate power_iteration_norm_sq(
    const std::function<Eigen::ArrayXd(const Eigen::ArrayXd&)>& normal_op, Eigen::Index dim,
    double tol = 1e-6, int max_iter = 500, std::uint64_t seed = 0) {
  require(tol > 0, "power iteration: tol must be positive");
  require(dim > 0, "power iteration: dimension must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::ArrayXd x(dim);
  for (Eigen::Index i = 0; i < dim; ++i) x[i] = 1.0 + 0.01 * unif(rng);

  NormEstimate est;
  double prev = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::ArrayXd z = normal_op(x);
    const double xx = x.square().sum();
    const double lambda = (x * z).sum() / xx;
    est.value = lambda;
    est.iterations = it;
    const double zn = std::sqrt(z.square().sum());
    if (zn == 0.0) {  // operator annihilated the iterate: norm is 0
      est.value = 0.0;
      est.converged = true;
      return est;
    }
    x = z / zn;
    if (it > 1 && std::abs(lambda - prev) <= tol * std::abs(lambda)) {
      est.converged = true;
      return est;
    }
    prev = lambda;
  }
  return est;  // best estimate, converged == false
}

// Discretized measurement operator: sparse interpolation o DFT o zero-padding.
// Immutable after construction; forward/adjoint are safe to call concurrently.
// Apply counters are observational (relaxed atomics) for cost audits.
class MeasurementOperator {
public:
  MeasurementOperator(SparseInterp interp, std::shared_ptr<const UVCoverage> coverage,
                      int image_w, int image_h, int factor)
      : interp_(std::move(interp)),
        coverage_(std::move(coverage)),
        image_w_(image_w),
        image_h_(image_h),
        factor_(factor),
        plans_(std::make_shared<detail::FftPlans>(image_w * factor, image_h * factor)),
        forward_count_(std::make_shared<std::atomic<std::uint64_t>>(0)),
        adjoint_count_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
    require(factor_ >= 1, "measurement operator: padding factor must be >= 1");
    require(interp_.cols() == grid_size(), "measurement operator: G columns != padded grid size");
  }

  int image_width() const { return image_w_; }
  int image_height() const { return image_h_; }
  int factor() const { return factor_; }
  int grid_width() const { return image_w_ * factor_; }
  int grid_height() const { return image_h_ * factor_; }
  Eigen::Index grid_size() const { return Eigen::Index(grid_width()) * grid_height(); }
  Eigen::Index rows() const { return interp_.rows(); }
  Eigen::Index image_size() const { return Eigen::Index(image_w_) * image_h_; }
  const SparseInterp& interpolation() const { return interp_; }
  const std::shared_ptr<const UVCoverage>& coverage() const { return coverage_; }

  // G F Z x
  VisibilitySet forward(const Image& x) const {
    require(x.width == image_w_ && x.height == image_h_, "forward: image shape mismatch");
    Eigen::ArrayXcd grid = Eigen::ArrayXcd::Zero(grid_size());
    embed(x, grid);
    plans_->forward(grid);
    VisibilitySet out;
    out.values = interp_ * grid.matrix();
    out.coverage = coverage_;
    forward_count_->fetch_add(1, std::memory_order_relaxed);
    return out;
  }

  // Real part of Z* F* G* v; the exact adjoint of forward over real images.
  Image adjoint(const VisibilitySet& vis) const { return adjoint(vis.values); }
  Image adjoint(const Eigen::VectorXcd& values) const {
    require(values.size() == rows(), "adjoint: visibility count mismatch");
    Eigen::ArrayXcd grid = (interp_.adjoint() * values).array();
    plans_->backward(grid);  // unnormalized inverse = F*
    Image out(image_w_, image_h_);
    extract(grid, out);
    adjoint_count_->fetch_add(1, std::memory_order_relaxed);
    return out;
  }

  // Phi*(Phi x - y): gradient of the quadratic data-fidelity term.
  Image grad_data_fidelity(const Image& x, const VisibilitySet& y) const {
    require(y.size() == rows(), "grad_data_fidelity: shape mismatch");
    VisibilitySet r = forward(x);
    r.values -= y.values;
    return adjoint(r);
  }

  double data_fidelity(const Image& x, const VisibilitySet& y) const {
    require(y.size() == rows(), "data_fidelity: shape mismatch");
    return 0.5 * (forward(x).values - y.values).squaredNorm();
  }

  // ||Phi||^2 via power iteration on Phi*Phi; cached after the first call.
  // Idempotent and deterministic, so a rare concurrent double-compute is
  // harmless; compute once during setup before sharing across threads.
  double norm_sq(double tol = 1e-6, int max_iter = 500, std::uint64_t seed = 0) const {
    if (!norm_sq_.has_value()) {
      auto est = power_iteration_norm_sq(
          [this](const Eigen::ArrayXd& x) {
            Image xi(image_w_, image_h_, x);
            return adjoint(forward(xi)).v;
          },
          image_size(), tol, max_iter, seed);
      norm_sq_ = est.value;
      norm_converged_ = est.converged;
    }
    return *norm_sq_;
  }
  std::optional<double> cached_norm_sq() const { return norm_sq_; }
  bool norm_converged() const { return norm_converged_; }

  std::uint64_t forward_applies() const { return forward_count_->load(); }
  std::uint64_t adjoint_applies() const { return adjoint_count_->load(); }
  void reset_apply_counters() const {
    forward_count_->store(0);
    adjoint_count_->store(0);
  }

private:
  void embed(const Image& x, Eigen::ArrayXcd& grid) const {
    const int gw = grid_width();
    for (int y = 0; y < image_h_; ++y)
      for (int xx = 0; xx < image_w_; ++xx)
        grid[Eigen::Index(y) * gw + xx] = x.at(y, xx);
  }
  void extract(const Eigen::ArrayXcd& grid, Image& out) const {
    const int gw = grid_width();
    for (int y = 0; y < image_h_; ++y)
      for (int xx = 0; xx < image_w_; ++xx)
        out.at(y, xx) = grid[Eigen::Index(y) * gw + xx].real();
  }

  SparseInterp interp_;
  std::shared_ptr<const UVCoverage> coverage_;
  int image_w_, image_h_, factor_;
  std::shared_ptr<detail::FftPlans> plans_;
  mutable std::optional<double> norm_sq_;
  mutable bool norm_converged_ = false;
  std::shared_ptr<std::atomic<std::uint64_t>> forward_count_, adjoint_count_;
};

inline MeasurementOperator make_measurement_operator(std::shared_ptr<const UVCoverage> cov,
                                                     int image_w, int image_h, int factor = 2,
                                                     KernelSpec kernel = {}) {
  cov->validate();
  SparseInterp G = build_interpolation(*cov, kernel, image_w * factor, image_h * factor);
  return MeasurementOperator(std::move(G), std::move(cov), image_w, image_h, factor);
}

}  // namespace usara
