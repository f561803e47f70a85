#pragma once

#include "usara/sara.hpp"

namespace usara {

// Per-coefficient nonnegative weights for the weighted l1 analysis prior.
struct WeightVector {
  Eigen::ArrayXd w;

  WeightVector() = default;
  explicit WeightVector(Eigen::ArrayXd values) : w(std::move(values)) {
    require((w >= 0.0).all() && w.isFinite().all(), "weights must be finite and >= 0");
  }
  static WeightVector uniform(double value, Eigen::Index size) {
    require(value >= 0.0, "uniform weight must be >= 0");
    return WeightVector(Eigen::ArrayXd::Constant(size, value));
  }
  Eigen::Index size() const { return w.size(); }
};

inline CoefficientVector soft_threshold(const CoefficientVector& c, const Eigen::ArrayXd& t) {
  require(t.size() == c.size(), "soft_threshold: threshold length mismatch");
  require((t >= 0.0).all(), "soft_threshold: thresholds must be >= 0");
  CoefficientVector out(c.block_len);
  out.v = c.v.sign() * (c.v.abs() - t).max(0.0);
  return out;
}

inline Image project_positive(const Image& x) {
  Image out(x.width, x.height, x.v.max(0.0));
  out.nonneg = true;
  return out;
}

struct ProxResult {
  Image point;          // feasible primal point (elementwise >= 0)
  Eigen::ArrayXd dual;  // dual coefficients, |dual_j| <= tau*w_j
  double gap = 0.0;     // certified duality-gap bound at exit
  int iterations = 0;
  bool converged = false;
};

// Approximates prox of tau*(||W Psi* .||_1 + positivity) at x, i.e.
//   argmin_{u >= 0} (1/(2 tau)) ||u - x||^2 + ||W Psi* u||_1,
// by forward-backward iterations on the dual:
//   q   = P_+(x - Psi v)
//   v  <- clip(v + Psi* q, +-tau*w)        (unit dual step; valid, ||Psi|| = 1)
// Every returned primal iterate is feasible. The reported gap is the duality
// gap of the problem above evaluated at (q, v); it upper-bounds the true
// suboptimality and reaches zero at the solution. Stops when gap <= tol or
// after max_iter sub-iterations (then converged == false; callers may treat
// the result as an inexact prox).
template <AnalysisDictionary Dict>
inline ProxResult prox_weighted_l1_positive(const Image& x, const WeightVector& W, double tau,
                                            double tol, int max_iter, const Dict& dict,
                                            const Eigen::ArrayXd* warm_dual = nullptr) {
  require(tau > 0.0, "prox: tau must be positive");
  require(tol > 0.0, "prox: tol must be positive");
  require(max_iter >= 1, "prox: max_iter must be >= 1");
  require(W.size() == dict.coeff_size(x.size()), "prox: weight length mismatch");

  const Eigen::ArrayXd bound = tau * W.w;
  Eigen::ArrayXd v;
  if (warm_dual && warm_dual->size() == bound.size())
    v = warm_dual->min(bound).max(-bound);
  else
    v = Eigen::ArrayXd::Zero(bound.size());

  ProxResult res;
  for (int it = 1; it <= max_iter; ++it) {
    Image spread = dict.synthesis_coeffs(x.width, x.height, v);
    Image q = project_positive(Image(x.width, x.height, x.v - spread.v));
    Eigen::ArrayXd c = dict.analysis_coeffs(q);
    // gap of the (1/(2 tau))-scaled problem at (q, v); nonnegative because
    // |v_j| <= tau*w_j implies v_j c_j <= tau*w_j |c_j|.
    const double gap = (W.w * c.abs() - v * c / tau).sum();
    res.point = std::move(q);
    res.gap = gap;
    res.iterations = it;
    if (gap <= tol) {
      res.converged = true;
      break;
    }
    if (it < max_iter) v = (v + c).min(bound).max(-bound);
  }
  res.dual = std::move(v);
  return res;
}

// Gradient of the Moreau-Yosida smoothing of ||W Psi* .||_1 (parameter gamma),
// composed through the Parseval analysis: Psi h(Psi* x) with the Huber
// derivative h_j = c_j/gamma inside |c_j| <= gamma*w_j, w_j*sign(c_j) outside.
// The positivity indicator is deliberately left unsmoothed.
template <AnalysisDictionary Dict>
inline Image smooth_grad_reg(const Image& x, const WeightVector& W, double gamma,
                             const Dict& dict) {
  require(gamma > 0.0, "smooth_grad_reg: gamma must be positive");
  require(W.size() == dict.coeff_size(x.size()), "smooth_grad_reg: weight length mismatch");
  Eigen::ArrayXd c = dict.analysis_coeffs(x);
  const Eigen::ArrayXd knee = gamma * W.w;
  Eigen::ArrayXd h = (c.abs() <= knee).select(c / gamma, W.w * c.sign());
  return dict.synthesis_coeffs(x.width, x.height, h);
}

// Value of the smoothed regularizer (sum of per-coefficient Huber envelopes);
// the function smooth_grad_reg differentiates.
template <AnalysisDictionary Dict>
inline double smoothed_reg_value(const Image& x, const WeightVector& W, double gamma,
                                 const Dict& dict) {
  require(gamma > 0.0, "smoothed_reg_value: gamma must be positive");
  Eigen::ArrayXd c = dict.analysis_coeffs(x);
  const Eigen::ArrayXd a = c.abs();
  const Eigen::ArrayXd knee = gamma * W.w;
  return (a <= knee).select(a.square() / (2.0 * gamma), W.w * a - gamma * W.w.square() / 2.0).sum();
}

// Unsmoothed regularizer value ||W Psi* x||_1 (the positivity indicator is 0
// on feasible points and is not included).
template <AnalysisDictionary Dict>
inline double reg_value(const Image& x, const WeightVector& W, const Dict& dict) {
  Eigen::ArrayXd c = dict.analysis_coeffs(x);
  return (W.w * c.abs()).sum();
}

// Reweighting update w_j = lambda / (rho + |(Psi* x)_j|); entries lie in
// (0, lambda/rho].
template <AnalysisDictionary Dict>
inline WeightVector update_weights(const Image& x, double lambda, double rho, const Dict& dict) {
  require(lambda > 0.0, "update_weights: lambda must be positive");
  require(rho > 0.0, "update_weights: rho must be positive");
  Eigen::ArrayXd c = dict.analysis_coeffs(x);
  return WeightVector(lambda / (rho + c.abs()));
}

}  // namespace usara
