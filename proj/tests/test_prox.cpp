#include <catch2/catch_amalgamated.hpp>

#include "usara/prox.hpp"

using namespace usara;

namespace {

// Psi = Id: scalar closed forms exist for the prox and the Huber gradient.
struct DiracDictionary {
  Eigen::Index coeff_size(Eigen::Index n) const { return n; }
  Eigen::ArrayXd analysis_coeffs(const Image& x) const { return x.v; }
  Image synthesis_coeffs(int w, int h, const Eigen::ArrayXd& c) const { return Image(w, h, c); }
};
static_assert(AnalysisDictionary<DiracDictionary>);

Image random_image(int w, int h, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Image x(w, h);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.v[i] = g(rng);
  return x;
}

double prox_primal_value(const Image& u, const Image& x, const WeightVector& W, double tau,
                         const SaraDictionary& dict) {
  return (u.v - x.v).square().sum() / (2.0 * tau) + reg_value(u, W, dict);
}

}  // namespace

TEST_CASE("soft threshold") {
  CoefficientVector c(1);
  c.v.resize(9);
  c.v << 2.0, -0.3, 0.0, 1.0, -2.0, 0.5, -0.5, 3.0, -3.0;
  Eigen::ArrayXd t = Eigen::ArrayXd::Constant(9, 0.5);
  CoefficientVector out = soft_threshold(c, t);
  REQUIRE(out.v[0] == 1.5);
  REQUIRE(out.v[1] == 0.0);
  REQUIRE(out.v[2] == 0.0);
  REQUIRE(out.v[7] == 2.5);
  REQUIRE(out.v[8] == -2.5);

  CoefficientVector same = soft_threshold(c, Eigen::ArrayXd::Zero(9));
  REQUIRE((same.v == c.v).all());

  REQUIRE_THROWS_AS(soft_threshold(c, Eigen::ArrayXd::Constant(9, -0.1)), std::invalid_argument);
}

TEST_CASE("project positive") {
  Image x(2, 1, (Eigen::ArrayXd(2) << -1.0, 2.0).finished());
  Image p = project_positive(x);
  REQUIRE(p.v[0] == 0.0);
  REQUIRE(p.v[1] == 2.0);
  REQUIRE(p.nonneg);
  Image pp = project_positive(p);
  REQUIRE((pp.v == p.v).all());

  // projection optimality against sampled feasible points
  Image r = random_image(8, 8, 3);
  Image pr = project_positive(r);
  Rng rng(4);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    Image u(8, 8);
    for (Eigen::Index i = 0; i < u.size(); ++i) u.v[i] = unif(rng);
    REQUIRE(std::sqrt((r.v - pr.v).square().sum()) <=
            std::sqrt((r.v - u.v).square().sum()) + 1e-15);
  }
}

TEST_CASE("prox with dirac dictionary matches the scalar closed form") {
  DiracDictionary dict;
  Image x(2, 1, (Eigen::ArrayXd(2) << 3.0, -3.0).finished());
  WeightVector W = WeightVector::uniform(1.0, 2);
  ProxResult r = prox_weighted_l1_positive(x, W, 1.0, 1e-12, 10000, dict);
  REQUIRE(r.point.v[0] == Catch::Approx(2.0).margin(1e-10));
  REQUIRE(r.point.v[1] == 0.0);

  // W = 0 reduces to the positive projection in a single sub-iteration
  WeightVector zero = WeightVector::uniform(0.0, 2);
  ProxResult rz = prox_weighted_l1_positive(x, zero, 1.0, 1e-12, 10000, dict);
  REQUIRE(rz.iterations == 1);
  REQUIRE(rz.gap == 0.0);
  REQUIRE((rz.point.v == project_positive(x).v).all());
}

TEST_CASE("prox against a long-run oracle on a random 16x16 instance") {
  SaraDictionary dict(4);
  Image x = random_image(16, 16, 7, 0.4);
  const Eigen::Index cs = dict.coeff_size(x.size());
  Rng rng(8);
  std::uniform_real_distribution<double> unif(0.02, 0.12);
  Eigen::ArrayXd w(cs);
  for (Eigen::Index i = 0; i < cs; ++i) w[i] = unif(rng);
  WeightVector W{std::move(w)};
  const double tau = 0.5;

  ProxResult oracle = prox_weighted_l1_positive(x, W, tau, 1e-12, 100000, dict);
  ProxResult fast = prox_weighted_l1_positive(x, W, tau, 1e-10, 100000, dict);
  const double rel = std::sqrt((fast.point.v - oracle.point.v).square().sum()) /
                     std::sqrt(oracle.point.v.square().sum());
  REQUIRE(rel <= 1e-6);

  // reported gap upper-bounds the true suboptimality
  ProxResult loose = prox_weighted_l1_positive(x, W, tau, 1e-3, 5000, dict);
  const double subopt = prox_primal_value(loose.point, x, W, tau, dict) -
                        prox_primal_value(oracle.point, x, W, tau, dict);
  REQUIRE(loose.gap >= subopt - 1e-12);
  REQUIRE(loose.gap >= 0.0);

  // feasibility regardless of tolerance and iteration budget
  for (int budget : {1, 2, 5, 17}) {
    ProxResult r = prox_weighted_l1_positive(x, W, tau, 1e-14, budget, dict);
    REQUIRE((r.point.v >= 0.0).all());
    if (budget < 5) REQUIRE_FALSE(r.converged);
  }

  // firm nonexpansiveness (sampled, with slack for the inexactness)
  Image x2 = random_image(16, 16, 9, 1.0);
  ProxResult p1 = prox_weighted_l1_positive(x, W, tau, 1e-11, 100000, dict);
  ProxResult p2 = prox_weighted_l1_positive(x2, W, tau, 1e-11, 100000, dict);
  const double lhs = std::sqrt((p1.point.v - p2.point.v).square().sum());
  const double rhs = std::sqrt((x.v - x2.v).square().sum());
  REQUIRE(lhs <= rhs + 2e-5);
}

TEST_CASE("prox warm start helps on a nearby instance") {
  SaraDictionary dict(4);
  Image x = random_image(16, 16, 17, 1.0);
  WeightVector W = WeightVector::uniform(0.2, dict.coeff_size(x.size()));
  ProxResult cold = prox_weighted_l1_positive(x, W, 0.5, 1e-8, 100000, dict);
  Image x_shift(16, 16, x.v + 1e-4);
  ProxResult warm = prox_weighted_l1_positive(x_shift, W, 0.5, 1e-8, 100000, dict, &cold.dual);
  ProxResult cold2 = prox_weighted_l1_positive(x_shift, W, 0.5, 1e-8, 100000, dict);
  REQUIRE(warm.iterations <= cold2.iterations);
  REQUIRE((warm.point.v - cold2.point.v).abs().maxCoeff() < 1e-5);
}

TEST_CASE("huber gradient closed forms with the dirac dictionary") {
  DiracDictionary dict;
  WeightVector W = WeightVector::uniform(2.0, 2);
  Image x(2, 1, (Eigen::ArrayXd(2) << 0.3, 3.0).finished());
  Image g = smooth_grad_reg(x, W, 0.5, dict);
  REQUIRE(g.v[0] == Catch::Approx(0.6).margin(1e-15));  // inside the Huber zone
  REQUIRE(g.v[1] == Catch::Approx(2.0).margin(1e-15));  // saturated at w*sign
  REQUIRE_THROWS_AS(smooth_grad_reg(x, W, 0.0, dict), std::invalid_argument);
}

TEST_CASE("smoothed gradient matches finite differences of the envelope") {
  SaraDictionary dict(3);
  Image x = random_image(8, 8, 21, 1.0);
  const Eigen::Index cs = dict.coeff_size(x.size());
  Rng rng(22);
  std::uniform_real_distribution<double> unif(0.3, 1.5);
  Eigen::ArrayXd w(cs);
  for (Eigen::Index i = 0; i < cs; ++i) w[i] = unif(rng);
  WeightVector W{std::move(w)};
  const double gamma = 0.25;

  Image g = smooth_grad_reg(x, W, gamma, dict);
  Image fd(8, 8);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5;
    Image xp = x, xm = x;
    xp.v[i] += h;
    xm.v[i] -= h;
    fd.v[i] =
        (smoothed_reg_value(xp, W, gamma, dict) - smoothed_reg_value(xm, W, gamma, dict)) / (2 * h);
  }
  REQUIRE(std::sqrt((fd.v - g.v).square().sum()) <= 1e-6 * std::sqrt(g.v.square().sum()));

  // (1/gamma)-Lipschitz sampled ratio
  for (int t = 0; t < 5; ++t) {
    Image a = random_image(8, 8, 600 + std::uint64_t(t));
    Image b = random_image(8, 8, 700 + std::uint64_t(t));
    const double num =
        std::sqrt((smooth_grad_reg(a, W, gamma, dict).v - smooth_grad_reg(b, W, gamma, dict).v)
                      .square()
                      .sum());
    const double den = std::sqrt((a.v - b.v).square().sum());
    REQUIRE(num <= den / gamma * (1 + 1e-6));
  }

  // saturation: for |c| >> gamma*w the gradient equals Psi (w sign(c))
  Image big(8, 8, 100.0 * random_image(8, 8, 23).v);
  Eigen::ArrayXd c = dict.analysis_coeffs(big);
  const double tiny_gamma = 1e-6;
  Image gs = smooth_grad_reg(big, W, tiny_gamma, dict);
  Image expected = dict.synthesis_coeffs(8, 8, (W.w * c.sign()).eval());
  REQUIRE((gs.v - expected.v).abs().maxCoeff() <= 1e-9 * expected.v.abs().maxCoeff());
}

TEST_CASE("weight update formula and bounds") {
  SaraDictionary dict(3);
  Image zero(8, 8);
  WeightVector w0 = update_weights(zero, 2.0, 0.5, dict);
  REQUIRE((w0.w == 4.0).all());  // lambda/rho at zero coefficients

  DiracDictionary dirac;
  Image x(1, 1, (Eigen::ArrayXd(1) << 0.9).finished());
  WeightVector w1 = update_weights(x, 1.0, 0.1, dirac);
  REQUIRE(w1.w[0] == Catch::Approx(1.0).margin(1e-15));

  // strictly decreasing in |c|, bounded by lambda/rho
  Image r = random_image(8, 8, 31);
  WeightVector wr = update_weights(r, 1.3, 0.2, dict);
  REQUIRE((wr.w > 0.0).all());
  REQUIRE((wr.w <= 1.3 / 0.2 + 1e-15).all());
  Eigen::ArrayXd c = dict.analysis_coeffs(r).abs();
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index i = t * 7 % c.size(), j = (t * 13 + 5) % c.size();
    if (c[i] < c[j]) REQUIRE(wr.w[i] > wr.w[j]);
  }

  REQUIRE_THROWS_AS(update_weights(r, 0.0, 0.1, dict), std::invalid_argument);
  REQUIRE_THROWS_AS(update_weights(r, 1.0, 0.0, dict), std::invalid_argument);
}
