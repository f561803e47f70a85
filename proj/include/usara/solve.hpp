#pragma once

#include <chrono>
#include <cstdio>
#include <ostream>

#include "usara/hierarchy.hpp"
#include "usara/metrics.hpp"

namespace usara {

enum class Algorithm { kFb, kFista, kImlFista };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kFb: return "fb";
    case Algorithm::kFista: return "fista";
    case Algorithm::kImlFista: return "iml-fista";
  }
  return "?";
}

inline Algorithm algorithm_from_name(const std::string& s) {
  if (s == "fb") return Algorithm::kFb;
  if (s == "fista") return Algorithm::kFista;
  if (s == "iml-fista") return Algorithm::kImlFista;
  throw std::invalid_argument("unknown algorithm: " + s);
}

// Inertia sequence t_k = (k + a - 1)/a, alpha_k = (t_k - 1)/t_{k+1} =
// (k - 1)/(k + a); alpha_1 = 0 and alpha_k increases to 1.
inline double inertia_alpha(int k, double a) {
  require(k >= 1, "inertia_alpha: k must be >= 1");
  require(a > 2.0, "inertia_alpha: a must be > 2");
  return (k - 1.0) / (k + a);
}

// When the coarse correction fires, counted in iterations since the last
// inertia reset (k starts at 1 in every reweighting cycle).
struct MlSchedule {
  enum class Kind { kNone, kFirstR, kEveryK };
  Kind kind = Kind::kNone;
  int r = 3;  // kFirstR: iterations 1..r
  int K = 0;  // kEveryK: iterations 1, K+1, 2K+1, ...

  bool active(int k) const {
    switch (kind) {
      case Kind::kNone: return false;
      case Kind::kFirstR: return k <= r;
      case Kind::kEveryK: return K > 0 && (k - 1) % K == 0;
    }
    return false;
  }
  void validate() const {
    if (kind == Kind::kFirstR) require(r >= 0, "ml schedule: r must be >= 0");
    if (kind == Kind::kEveryK) require(K >= 1, "ml schedule: K must be >= 1");
  }
};

// A solve stops at whichever limit is hit first; all limits are optional.
struct Budget {
  std::optional<std::uint64_t> iterations;
  std::optional<double> cost_units;
  std::optional<double> seconds;
};

struct SolverConfig {
  double tau = 0.0;        // fine step; validated against 1/||Phi||^2
  double inertia_a = 4.0;  // > 2
  double gamma = 0.0;      // ML smoothing scale; 0 means "use tau"
  double prox_tol0 = 1e-6;
  int prox_budget = 50;
  MlSchedule schedule;
  Budget budget;
  int trace_every = 1;

  void validate() const {
    require(tau > 0.0, "solver: tau must be positive");
    require(inertia_a > 2.0, "solver: inertia_a must be > 2");
    require(prox_tol0 > 0.0, "solver: prox_tol0 must be positive");
    require(prox_budget >= 1, "solver: prox_budget must be >= 1");
    require(trace_every >= 1, "solver: trace_every must be >= 1");
    schedule.validate();
  }
};

struct TraceRow {
  std::int64_t k = 0;
  int cycle = 0;
  double wall_s = 0.0;
  double cost_units = 0.0;
  double objective = 0.0;
  double snr_db = 0.0;
  double log_snr_db = 0.0;
  int ml_applied = 0;
  int prox_iters = 0;
  double prox_gap = 0.0;
};

struct IterationTrace {
  std::vector<TraceRow> rows;

  static const char* csv_header() {
    return "k,cycle,wall_s,cost_units,objective,snr_db,log_snr_db,ml_applied,prox_iters,prox_gap";
  }

  void to_csv(std::ostream& os) const {
    os << csv_header() << "\n";
    char buf[352];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof(buf), "%lld,%d,%.6f,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g\n",
                    (long long)r.k, r.cycle, r.wall_s, r.cost_units, r.objective, r.snr_db,
                    r.log_snr_db, r.ml_applied, r.prox_iters, r.prox_gap);
      os << buf;
    }
  }
};

struct Problem {
  std::shared_ptr<const MeasurementOperator> op;
  VisibilitySet y;
  const SaraDictionary* dict = nullptr;
  const Image* reference = nullptr;  // ground truth for the SNR columns

  void validate() const {
    require(op != nullptr && dict != nullptr, "problem: operator and dictionary required");
    require(y.size() == op->rows(), "problem: data size mismatch");
  }
};

struct SolveResult {
  Image x;
  IterationTrace trace;
  std::vector<double> alphas;           // inertia applied at each iteration
  std::vector<MlAuditRecord> ml_audit;  // per-level coarse decrease records
  CostLedger cost;
  Eigen::ArrayXd prox_dual;
  double objective = 0.0;
  int iterations = 0;
};

struct SolveOptions {
  const Image* x0 = nullptr;  // default: zero start
  int cycle = 0;
  double cost_offset = 0.0;
  double wall_offset = 0.0;
  bool emit_initial_row = true;
  const Eigen::ArrayXd* warm_dual = nullptr;
  std::function<void(int, double, const Image&)> on_iterate;  // (k, cost, x_k)
};

namespace detail {

inline double objective_value(const Problem& p, const WeightVector& W, const Image& x) {
  return p.op->data_fidelity(x, p.y) + reg_value(x, W, *p.dict);
}

}  // namespace detail

// One inner solve at fixed weights. FB, FISTA and IML-FISTA share this loop:
// FB forces alpha = 0 and never corrects; FISTA adds inertia; IML-FISTA also
// applies the coarse correction at scheduled iterations:
//   z_bar = ML(z_k) when scheduled, else z_k
//   x_{k+1} ~= prox_{tau R(., W)}(z_bar - tau grad L(z_bar))
//   z_{k+1} = x_{k+1} + alpha_k (x_{k+1} - x_k)
// The prox tolerance tightens as tol0/(k+1)^2 so the prox errors stay
// summable; each prox is warm-started from the previous dual point.
inline SolveResult solve(const Problem& problem, const WeightVector& W, Algorithm algo,
                         const SolverConfig& config, const Hierarchy* hierarchy = nullptr,
                         const SolveOptions& opts = {}) {
  problem.validate();
  config.validate();
  const double beta = problem.op->norm_sq();
  require(config.tau <= (1.0 + 1e-9) / beta, "solver: tau exceeds 1/||Phi||^2");
  if (algo == Algorithm::kImlFista && config.schedule.kind != MlSchedule::Kind::kNone)
    require(hierarchy != nullptr, "solver: iml-fista with a schedule needs a hierarchy");
  const double gamma = config.gamma > 0.0 ? config.gamma : config.tau;

  const int w = problem.op->image_width(), h = problem.op->image_height();
  SolveResult res;
  res.x = opts.x0 ? project_positive(*opts.x0) : Image(w, h);
  res.x.nonneg = true;
  require(res.x.width == w && res.x.height == h, "solver: x0 shape mismatch");

  Image z = res.x;
  Eigen::ArrayXd dual;
  if (opts.warm_dual) dual = *opts.warm_dual;

  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&] {
    return opts.wall_offset +
           std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  auto record = [&](std::int64_t k, int ml_applied, int prox_iters, double prox_gap) {
    TraceRow row;
    row.k = k;
    row.cycle = opts.cycle;
    row.wall_s = wall();
    row.cost_units = opts.cost_offset + res.cost.units;
    row.objective = detail::objective_value(problem, W, res.x);
    if (std::isnan(row.objective))
      throw NumericalError("solver: objective is NaN at iteration " + std::to_string(k));
    row.snr_db = problem.reference ? metric_snr(res.x, *problem.reference)
                                   : std::numeric_limits<double>::quiet_NaN();
    row.log_snr_db = problem.reference ? metric_log_snr(res.x, *problem.reference)
                                       : std::numeric_limits<double>::quiet_NaN();
    row.ml_applied = ml_applied;
    row.prox_iters = prox_iters;
    row.prox_gap = prox_gap;
    res.trace.rows.push_back(row);
    res.objective = row.objective;
  };

  if (opts.emit_initial_row) record(0, 0, 0, 0.0);

  int last_ml = 0, last_prox_iters = 0;
  double last_gap = 0.0;
  int k = 1;
  for (;; ++k) {
    if (config.budget.iterations && std::uint64_t(k) > *config.budget.iterations) break;
    if (config.budget.cost_units && res.cost.units >= *config.budget.cost_units) break;
    if (config.budget.seconds && wall() - opts.wall_offset >= *config.budget.seconds) break;

    const bool ml_hit = algo == Algorithm::kImlFista && hierarchy && config.schedule.active(k);
    Image z_bar =
        ml_hit ? ml_step(*hierarchy, z, W, gamma, *problem.dict, &res.cost, &res.ml_audit) : z;

    res.cost.add(2.0);
    Image grad = problem.op->grad_data_fidelity(z_bar, problem.y);
    Image u(w, h, z_bar.v - config.tau * grad.v);

    const double tol_k = config.prox_tol0 / double((k + 1.0) * (k + 1.0));
    ProxResult pr = prox_weighted_l1_positive(u, W, config.tau, tol_k, config.prox_budget,
                                              *problem.dict, dual.size() ? &dual : nullptr);
    dual = std::move(pr.dual);

    const double alpha = (algo == Algorithm::kFb) ? 0.0 : inertia_alpha(k, config.inertia_a);
    res.alphas.push_back(alpha);
    // res.x still holds x_{k-1} here
    z = Image(w, h, pr.point.v + alpha * (pr.point.v - res.x.v));
    res.x = std::move(pr.point);
    res.iterations = k;
    last_ml = ml_hit ? 1 : 0;
    last_prox_iters = pr.iterations;
    last_gap = pr.gap;

    if (!res.x.v.isFinite().all())
      throw NumericalError("solver: non-finite iterate at iteration " + std::to_string(k));
    if (k % config.trace_every == 0) record(k, last_ml, last_prox_iters, last_gap);
    if (opts.on_iterate) opts.on_iterate(k, opts.cost_offset + res.cost.units, res.x);
  }

  if (res.iterations > 0 &&
      (res.trace.rows.empty() || res.trace.rows.back().k != res.iterations))
    record(res.iterations, last_ml, last_prox_iters, last_gap);
  res.prox_dual = std::move(dual);
  return res;
}

struct ReweightConfig {
  int max_reweights = 5;  // I: cycles run are i = 0..I inclusive
  double lambda = 0.0;
  double rho = 0.0;
  Budget cycle_budget;

  void validate() const {
    require(max_reweights >= 0, "reweight: I must be >= 0");
    require(lambda > 0.0, "reweight: lambda must be positive");
    require(rho > 0.0, "reweight: rho must be positive");
  }
};

struct ReweightState {
  int cycle = 0;
  WeightVector weights;
  Image anchor;  // warm-start image of the next cycle
};

struct ReweightResult {
  Image x;
  IterationTrace trace;
  ReweightState state;
  std::vector<double> alphas;
  std::vector<std::size_t> cycle_alpha_offsets;  // index into alphas where each cycle starts
  std::vector<MlAuditRecord> ml_audit;
  CostLedger cost;
};

// Reweighting driver: cycle i minimizes L + ||W_i Psi* .||_1 + positivity
// under the per-cycle budget, warm-started at the previous solution, then
// updates the weights from the new solution. The iteration counter (and with
// it the inertia sequence) resets at every cycle; the prox dual warm start
// does not carry across cycles because the weight bounds change.
inline ReweightResult reweighted_solve(const Problem& problem, Algorithm algo,
                                       const SolverConfig& solver_config,
                                       const ReweightConfig& rw,
                                       const Hierarchy* hierarchy = nullptr,
                                       const Image* x0 = nullptr) {
  problem.validate();
  rw.validate();
  const Eigen::Index coeffs = problem.dict->coeff_size(problem.op->image_size());

  ReweightResult out;
  out.state.weights = WeightVector::uniform(rw.lambda, coeffs);
  out.x = x0 ? project_positive(*x0) : Image(problem.op->image_width(), problem.op->image_height());

  SolverConfig cfg = solver_config;
  cfg.budget = rw.cycle_budget;
  double wall_offset = 0.0;

  for (int i = 0; i <= rw.max_reweights; ++i) {
    SolveOptions opts;
    opts.x0 = &out.x;
    opts.cycle = i;
    opts.cost_offset = out.cost.units;
    opts.wall_offset = wall_offset;
    opts.emit_initial_row = (i == 0);
    SolveResult res = solve(problem, out.state.weights, algo, cfg, hierarchy, opts);

    out.x = std::move(res.x);
    out.cycle_alpha_offsets.push_back(out.alphas.size());
    out.alphas.insert(out.alphas.end(), res.alphas.begin(), res.alphas.end());
    out.ml_audit.insert(out.ml_audit.end(), res.ml_audit.begin(), res.ml_audit.end());
    out.trace.rows.insert(out.trace.rows.end(), res.trace.rows.begin(), res.trace.rows.end());
    out.cost.units += res.cost.units;
    if (!res.trace.rows.empty()) wall_offset = res.trace.rows.back().wall_s;

    out.state.cycle = i;
    out.state.anchor = out.x;
    if (i < rw.max_reweights)
      out.state.weights = update_weights(out.x, rw.lambda, rw.rho, *problem.dict);
  }
  return out;
}

}  // namespace usara
