#pragma once

#include <filesystem>
#include <set>

#include "usara/io.hpp"
#include "usara/solve.hpp"

namespace usara {
namespace bench {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Experiment configuration (JSON). Validation is strict: unknown keys are
// rejected, types are checked, and every numeric default is overridable. The
// machine-readable schema ships in docs/config-schema.json.
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::uint64_t seed = 1;

  // phantom
  int image_size = 128;
  int blobs = 10;
  int point_sources = 20;

  // array: synthetic (antennas > 0) or loaded from csv
  int antennas = 16;
  double array_radius_m = 4000.0;
  std::string antenna_file;

  ObservationSpec observation{};  // radians internally; config uses degrees

  double target_snr_db = 19.0;

  int padding_factor = 2;
  std::string kernel = "bilinear";

  int dict_levels = 4;

  // solver
  double lambda = 0.0;      // absolute; if 0, lambda_rel applies
  double lambda_rel = 1e-3; // relative to max |Psi* Phi* y|
  double rho = 0.0;         // absolute; if 0, rho_scale * sigma ||Phi|| / sqrt(m)
  double rho_scale = 1.0;
  double gamma = 0.0;       // 0: use tau
  double inertia_a = 4.0;
  double tau_scale = 1.0;   // tau = tau_scale / beta
  double prox_tol0 = 1e-6;
  int prox_budget = 50;
  int trace_every = 1;

  HierarchyConfig hierarchy{};
  MlSchedule schedule{MlSchedule::Kind::kFirstR, 3, 0};

  Budget budget;
  int reweight_cycles = 0;  // I; cycles run are 0..I using budget as per-cycle
  std::vector<std::string> algorithms = {"fb", "fista", "iml-fista"};
  std::vector<double> checkpoints;  // cost-unit snapshot points
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& ctx) {
  require(j.is_object(), "config: " + ctx + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw std::invalid_argument("config: unknown key \"" + key + "\" in " + ctx);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("config: bad type for \"") + key + "\"");
  }
}

}  // namespace detail

inline Budget parse_budget(const json& j, const std::string& ctx) {
  detail::check_keys(j, {"iterations", "cost_units", "seconds"}, ctx);
  Budget b;
  if (j.contains("iterations")) b.iterations = j.at("iterations").get<std::uint64_t>();
  if (j.contains("cost_units")) b.cost_units = j.at("cost_units").get<double>();
  if (j.contains("seconds")) b.seconds = j.at("seconds").get<double>();
  return b;
}

inline ExperimentConfig parse_experiment_config(const json& j) {
  using detail::check_keys;
  using detail::get_or;
  check_keys(j,
             {"seed", "phantom", "array", "observation", "noise", "operator", "dictionary",
              "solver", "hierarchy", "budget", "reweight", "algorithms", "checkpoints"},
             "top level");
  ExperimentConfig c;
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);

  if (j.contains("phantom")) {
    const auto& p = j.at("phantom");
    check_keys(p, {"size", "blobs", "point_sources"}, "phantom");
    c.image_size = get_or<int>(p, "size", c.image_size);
    c.blobs = get_or<int>(p, "blobs", c.blobs);
    c.point_sources = get_or<int>(p, "point_sources", c.point_sources);
    require(c.image_size >= 8, "config: phantom.size must be >= 8");
  }
  if (j.contains("array")) {
    const auto& a = j.at("array");
    check_keys(a, {"antennas", "radius_m", "file"}, "array");
    c.antennas = get_or<int>(a, "antennas", c.antennas);
    c.array_radius_m = get_or<double>(a, "radius_m", c.array_radius_m);
    c.antenna_file = get_or<std::string>(a, "file", c.antenna_file);
  }
  if (j.contains("observation")) {
    const auto& o = j.at("observation");
    check_keys(o,
               {"declination_deg", "hour_angle_deg", "samples_per_pair", "wavelength_m",
                "coverage_fill"},
               "observation");
    constexpr double deg = std::numbers::pi / 180.0;
    c.observation.declination = get_or<double>(o, "declination_deg", 35.0) * deg;
    if (o.contains("hour_angle_deg")) {
      auto r = o.at("hour_angle_deg").get<std::vector<double>>();
      require(r.size() == 2, "config: observation.hour_angle_deg must be [begin, end]");
      c.observation.hour_angle_begin = r[0] * deg;
      c.observation.hour_angle_end = r[1] * deg;
    }
    c.observation.samples_per_pair = get_or<int>(o, "samples_per_pair", 100);
    c.observation.wavelength = get_or<double>(o, "wavelength_m", 0.21);
    c.observation.max_frequency_scale = get_or<double>(o, "coverage_fill", 0.95);
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    check_keys(n, {"target_snr_db"}, "noise");
    c.target_snr_db = get_or<double>(n, "target_snr_db", c.target_snr_db);
  }
  if (j.contains("operator")) {
    const auto& o = j.at("operator");
    check_keys(o, {"padding_factor", "kernel"}, "operator");
    c.padding_factor = get_or<int>(o, "padding_factor", c.padding_factor);
    c.kernel = get_or<std::string>(o, "kernel", c.kernel);
    require(c.kernel == "bilinear", "config: only the bilinear kernel is available");
  }
  if (j.contains("dictionary")) {
    const auto& d = j.at("dictionary");
    check_keys(d, {"levels"}, "dictionary");
    c.dict_levels = get_or<int>(d, "levels", c.dict_levels);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    check_keys(s,
               {"lambda", "lambda_rel", "rho", "rho_scale", "gamma", "inertia_a", "tau_scale",
                "prox_tol0", "prox_budget", "trace_every"},
               "solver");
    c.lambda = get_or<double>(s, "lambda", c.lambda);
    c.lambda_rel = get_or<double>(s, "lambda_rel", c.lambda_rel);
    c.rho = get_or<double>(s, "rho", c.rho);
    c.rho_scale = get_or<double>(s, "rho_scale", c.rho_scale);
    c.gamma = get_or<double>(s, "gamma", c.gamma);
    c.inertia_a = get_or<double>(s, "inertia_a", c.inertia_a);
    c.tau_scale = get_or<double>(s, "tau_scale", c.tau_scale);
    c.prox_tol0 = get_or<double>(s, "prox_tol0", c.prox_tol0);
    c.prox_budget = get_or<int>(s, "prox_budget", c.prox_budget);
    c.trace_every = get_or<int>(s, "trace_every", c.trace_every);
    require(c.tau_scale > 0.0 && c.tau_scale <= 1.0, "config: tau_scale must be in (0,1]");
  }
  if (j.contains("hierarchy")) {
    const auto& h = j.at("hierarchy");
    check_keys(h, {"depth", "fraction", "p", "alpha", "tau_safety", "schedule"}, "hierarchy");
    c.hierarchy.depth = get_or<int>(h, "depth", c.hierarchy.depth);
    c.hierarchy.fraction = get_or<double>(h, "fraction", c.hierarchy.fraction);
    c.hierarchy.p = get_or<int>(h, "p", c.hierarchy.p);
    c.hierarchy.alpha = get_or<double>(h, "alpha", c.hierarchy.alpha);
    c.hierarchy.tau_safety = get_or<double>(h, "tau_safety", c.hierarchy.tau_safety);
    if (h.contains("schedule")) {
      const auto& s = h.at("schedule");
      check_keys(s, {"kind", "r", "k"}, "hierarchy.schedule");
      const std::string kind = get_or<std::string>(s, "kind", "first-r");
      if (kind == "none")
        c.schedule.kind = MlSchedule::Kind::kNone;
      else if (kind == "first-r") {
        c.schedule.kind = MlSchedule::Kind::kFirstR;
        c.schedule.r = get_or<int>(s, "r", 3);
      } else if (kind == "every-k") {
        c.schedule.kind = MlSchedule::Kind::kEveryK;
        c.schedule.K = get_or<int>(s, "k", 10);
      } else {
        throw std::invalid_argument("config: schedule.kind must be none|first-r|every-k");
      }
    }
    c.hierarchy.validate();
  }
  if (j.contains("budget")) c.budget = parse_budget(j.at("budget"), "budget");
  if (j.contains("reweight")) {
    const auto& r = j.at("reweight");
    check_keys(r, {"cycles"}, "reweight");
    c.reweight_cycles = get_or<int>(r, "cycles", 0);
    require(c.reweight_cycles >= 0, "config: reweight.cycles must be >= 0");
  }
  if (j.contains("algorithms")) {
    c.algorithms = j.at("algorithms").get<std::vector<std::string>>();
    require(!c.algorithms.empty(), "config: algorithms must be nonempty");
    for (const auto& a : c.algorithms) algorithm_from_name(a);  // throws on bad names
  }
  if (j.contains("checkpoints")) c.checkpoints = j.at("checkpoints").get<std::vector<double>>();
  return c;
}

inline ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
  }
  return parse_experiment_config(j);
}

// ---------------------------------------------------------------------------
// Instantiated experiment: data simulated once and shared by all algorithms.
// ---------------------------------------------------------------------------

struct Instance {
  ExperimentConfig cfg;
  Image truth;
  AntennaArray array;
  std::shared_ptr<UVCoverage> coverage;
  std::shared_ptr<MeasurementOperator> op;
  SaraDictionary dict{4};
  VisibilitySet clean;
  VisibilitySet y;
  double sigma = 0.0;
  double beta = 0.0;
  double lambda = 0.0;
  double rho = 0.0;
  Problem problem;
  std::optional<Hierarchy> hierarchy;
};

inline Instance make_instance(const ExperimentConfig& cfg, bool with_hierarchy) {
  Instance inst;
  inst.cfg = cfg;
  inst.dict = SaraDictionary(cfg.dict_levels);
  inst.truth =
      generate_phantom(random_phantom_spec(cfg.image_size, cfg.blobs, cfg.point_sources, cfg.seed));

  if (!cfg.antenna_file.empty())
    inst.array = io::load_antennas(cfg.antenna_file);
  else
    inst.array = make_synthetic_array(cfg.antennas, cfg.seed + 1, cfg.array_radius_m);

  inst.coverage = std::make_shared<UVCoverage>(generate_tracks(inst.array, cfg.observation));
  inst.op = std::make_shared<MeasurementOperator>(
      make_measurement_operator(inst.coverage, cfg.image_size, cfg.image_size,
                                cfg.padding_factor));
  inst.beta = inst.op->norm_sq(1e-6, 500, cfg.seed + 2);

  inst.clean = inst.op->forward(inst.truth);
  inst.sigma = calibrate_noise_sigma(inst.clean, cfg.target_snr_db);
  inst.y = simulate_visibilities(*inst.op, inst.truth, NoiseSpec{inst.sigma, cfg.seed + 3});

  inst.lambda = cfg.lambda;
  if (inst.lambda <= 0.0) {
    Image dirty = inst.op->adjoint(inst.y);
    inst.lambda = cfg.lambda_rel * inst.dict.analysis_coeffs(dirty).abs().maxCoeff();
  }
  inst.rho = cfg.rho > 0.0
                 ? cfg.rho
                 : cfg.rho_scale * inst.sigma * std::sqrt(inst.beta) /
                       std::sqrt(double(inst.op->rows()));

  inst.problem = Problem{inst.op, inst.y, &inst.dict, &inst.truth};
  if (with_hierarchy) {
    HierarchyConfig hc = cfg.hierarchy;
    hc.seed = cfg.seed + 4;
    inst.hierarchy = build_hierarchy(inst.op, inst.y, hc);
  }
  return inst;
}

inline SolverConfig solver_config(const Instance& inst) {
  SolverConfig sc;
  sc.tau = inst.cfg.tau_scale / inst.beta;
  sc.inertia_a = inst.cfg.inertia_a;
  sc.gamma = inst.cfg.gamma;
  sc.prox_tol0 = inst.cfg.prox_tol0;
  sc.prox_budget = inst.cfg.prox_budget;
  sc.trace_every = inst.cfg.trace_every;
  sc.budget = inst.cfg.budget;
  sc.schedule = inst.cfg.schedule;
  return sc;
}

// ---------------------------------------------------------------------------
// Experiment runner: per-algorithm traces, snapshots at cost checkpoints, a
// summary of final metrics.
// ---------------------------------------------------------------------------

struct MetricsRow {
  std::string algorithm;
  double cost_units = 0.0;
  double snr_db = 0.0;
  double log_snr_db = 0.0;
  double objective = 0.0;
  double wall_s = 0.0;
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  fs::path out_dir;
};

inline json metrics_to_json(const std::vector<MetricsRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back(json{{"algorithm", r.algorithm},
                       {"cost_units", r.cost_units},
                       {"snr_db", r.snr_db},
                       {"log_snr_db", r.log_snr_db},
                       {"objective", r.objective},
                       {"wall_s", r.wall_s}});
  return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  bool any_ml = false;
  for (const auto& a : cfg.algorithms)
    any_ml = any_ml || algorithm_from_name(a) == Algorithm::kImlFista;
  Instance inst = make_instance(cfg, any_ml && cfg.schedule.kind != MlSchedule::Kind::kNone);

  io::save_image(out_dir / "truth.img", inst.truth);
  io::save_pgm16_log(out_dir / "truth.pgm", inst.truth);
  io::save_antennas(out_dir / "antennas.csv", inst.array);
  io::save_visibilities(out_dir / "visibilities.bin", inst.y);
  if (inst.hierarchy)
    for (std::size_t l = 1; l < inst.hierarchy->levels.size(); ++l)
      io::save_selector(out_dir / ("selector_level" + std::to_string(l) + ".bin"),
                        inst.hierarchy->levels[l].fine_indices);

  ExperimentResult result;
  result.out_dir = out_dir;
  for (const auto& name : cfg.algorithms) {
    const Algorithm algo = algorithm_from_name(name);
    SolverConfig sc = solver_config(inst);
    if (algo != Algorithm::kImlFista) sc.schedule.kind = MlSchedule::Kind::kNone;

    std::vector<double> pending(cfg.checkpoints.begin(), cfg.checkpoints.end());
    std::sort(pending.begin(), pending.end());
    SolveOptions opts;
    opts.on_iterate = [&](int, double cost, const Image& x) {
      while (!pending.empty() && cost >= pending.front()) {
        char label[64];
        std::snprintf(label, sizeof(label), "snapshot_%s_c%g", name.c_str(), pending.front());
        io::save_image(out_dir / (std::string(label) + ".img"), x);
        io::save_pgm16_log(out_dir / (std::string(label) + ".pgm"), x);
        pending.erase(pending.begin());
      }
    };

    IterationTrace trace;
    Image final_x;
    const Hierarchy* hier =
        (algo == Algorithm::kImlFista && inst.hierarchy) ? &*inst.hierarchy : nullptr;
    if (cfg.reweight_cycles > 0) {
      ReweightConfig rw;
      rw.max_reweights = cfg.reweight_cycles;
      rw.lambda = inst.lambda;
      rw.rho = inst.rho;
      rw.cycle_budget = cfg.budget;
      ReweightResult rr = reweighted_solve(inst.problem, algo, sc, rw, hier);
      trace = std::move(rr.trace);
      final_x = std::move(rr.x);
    } else {
      WeightVector W =
          WeightVector::uniform(inst.lambda, inst.dict.coeff_size(inst.op->image_size()));
      SolveResult sr = solve(inst.problem, W, algo, sc, hier, opts);
      trace = std::move(sr.trace);
      final_x = std::move(sr.x);
    }

    std::ofstream csv(out_dir / ("trace_" + name + ".csv"));
    trace.to_csv(csv);
    io::save_image(out_dir / ("final_" + name + ".img"), final_x);
    io::save_pgm16_log(out_dir / ("final_" + name + ".pgm"), final_x);

    const TraceRow& last = trace.rows.back();
    result.rows.push_back(MetricsRow{name, last.cost_units, last.snr_db, last.log_snr_db,
                                     last.objective, last.wall_s});
  }

  json summary;
  summary["m"] = inst.op->rows();
  summary["beta"] = inst.beta;
  summary["sigma"] = inst.sigma;
  summary["lambda"] = inst.lambda;
  summary["rho"] = inst.rho;
  summary["seed"] = cfg.seed;
  summary["metrics"] = metrics_to_json(result.rows);
  std::ofstream(out_dir / "summary.json") << summary.dump(2) << "\n";
  return result;
}

// ---------------------------------------------------------------------------
// Lambda grid search: geometric grid, 10 points per decade, scored by final
// reconstruction SNR under a short equal budget.
// ---------------------------------------------------------------------------

struct GridPoint {
  double lambda = 0.0;
  double snr_db = 0.0;
  double objective = 0.0;
};

struct GridResult {
  std::vector<GridPoint> points;
  double best_lambda = 0.0;
};

inline GridResult grid_lambda(const ExperimentConfig& cfg, Algorithm algo, double lambda_rel_min,
                              double lambda_rel_max, const fs::path& out_dir) {
  require(lambda_rel_min > 0 && lambda_rel_max > lambda_rel_min, "grid: bad lambda range");
  fs::create_directories(out_dir);
  Instance inst = make_instance(cfg, algo == Algorithm::kImlFista &&
                                         cfg.schedule.kind != MlSchedule::Kind::kNone);
  Image dirty = inst.op->adjoint(inst.y);
  const double scale = inst.dict.analysis_coeffs(dirty).abs().maxCoeff();

  GridResult res;
  double best_snr = -1e30;
  const double step = std::pow(10.0, 0.1);  // 10 points per decade
  for (double rel = lambda_rel_min; rel <= lambda_rel_max * (1 + 1e-12); rel *= step) {
    const double lam = rel * scale;
    SolverConfig sc = solver_config(inst);
    WeightVector W = WeightVector::uniform(lam, inst.dict.coeff_size(inst.op->image_size()));
    const Hierarchy* hier =
        (algo == Algorithm::kImlFista && inst.hierarchy) ? &*inst.hierarchy : nullptr;
    SolveResult sr = solve(inst.problem, W, algo, sc, hier);
    GridPoint pt{lam, sr.trace.rows.back().snr_db, sr.trace.rows.back().objective};
    res.points.push_back(pt);
    if (pt.snr_db > best_snr) {
      best_snr = pt.snr_db;
      res.best_lambda = lam;
    }
  }

  std::ofstream csv(out_dir / "lambda_grid.csv");
  csv << "lambda,snr_db,objective\n";
  char buf[128];
  for (const auto& p : res.points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.lambda, p.snr_db, p.objective);
    csv << buf;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Invariant check suites (machine-readable residual reports).
// ---------------------------------------------------------------------------

struct CheckItem {
  std::string name;
  double residual = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct CheckReport {
  std::string suite;
  std::vector<CheckItem> items;

  bool pass() const {
    for (const auto& i : items)
      if (!i.pass) return false;
    return true;
  }
  json to_json() const {
    json items_j = json::array();
    for (const auto& i : items)
      items_j.push_back(
          json{{"name", i.name}, {"residual", i.residual}, {"tol", i.tol}, {"pass", i.pass}});
    return json{{"suite", suite}, {"pass", pass()}, {"checks", items_j}};
  }
};

namespace detail {

struct CheckSetup {
  std::shared_ptr<UVCoverage> cov;
  std::shared_ptr<MeasurementOperator> op;
  SaraDictionary dict{4};
  Image truth;
  VisibilitySet y;
  WeightVector W;
  double gamma = 0.25;

  CheckSetup() {
    AntennaArray arr = make_synthetic_array(8, 12345);
    ObservationSpec spec;
    spec.samples_per_pair = 40;
    cov = std::make_shared<UVCoverage>(generate_tracks(arr, spec));
    op = std::make_shared<MeasurementOperator>(make_measurement_operator(cov, 16, 16, 2));
    truth = generate_phantom(random_phantom_spec(16, 3, 4, 777));
    y = simulate_visibilities(*op, truth,
                              NoiseSpec{calibrate_noise_sigma(op->forward(truth), 19.0), 778});
    W = WeightVector::uniform(0.02, dict.coeff_size(op->image_size()));
  }

  Image random_image(std::uint64_t seed, double scale = 0.5) const {
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    Image x(16, 16);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.v[i] = g(rng);
    return x;
  }
};

inline void add(CheckReport& rep, const std::string& name, double residual, double tol) {
  rep.items.push_back(CheckItem{name, residual, tol, residual <= tol});
}

}  // namespace detail

inline CheckReport check_adjoint() {
  detail::CheckSetup s;
  CheckReport rep{"adjoint", {}};

  Image x = s.random_image(1);
  PaddedGrid g(32, 32, 2);
  {
    Rng rng(2);
    std::normal_distribution<double> gd(0.0, 1.0);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.v[i] = {gd(rng), gd(rng)};
  }
  const double zl = (zero_pad(x, 2).v.conjugate() * g.v).sum().real();
  const double zr = dot(x, adjoint_crop(g));
  detail::add(rep, "zero_pad/adjoint_crop dot", std::abs(zl - zr) / (1 + std::abs(zl)), 1e-10);

  Eigen::ArrayXd c(s.dict.coeff_size(x.size()));
  {
    Rng rng(3);
    std::normal_distribution<double> gd(0.0, 1.0);
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = gd(rng);
  }
  const double pl = (s.dict.analysis_coeffs(x) * c).sum();
  const double pr = dot(x, s.dict.synthesis_coeffs(16, 16, c));
  detail::add(rep, "dictionary dot", std::abs(pl - pr) / (1 + std::abs(pl)), 1e-10);

  Eigen::VectorXcd v(s.op->rows());
  {
    Rng rng(4);
    std::normal_distribution<double> gd(0.0, 1.0);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = {gd(rng), gd(rng)};
  }
  const auto fx = s.op->forward(x).values;
  const double ol = (fx.conjugate().array() * v.array()).sum().real();
  const double orr = dot(x, s.op->adjoint(v));
  detail::add(rep, "measurement dot", std::abs(ol - orr) / (fx.norm() * v.norm()), 1e-10);

  LevelSelector sel = build_selector(*s.cov, 0.5);
  auto sub = std::make_shared<MeasurementOperator>(
      usara::detail::select_rows(s.op->interpolation(), sel.indices),
      std::make_shared<UVCoverage>(restrict_coverage(*s.cov, sel)), 16, 16, 2);
  Eigen::VectorXcd vs = v.head(sub->rows());
  const auto sx = sub->forward(x).values;
  const double sl = (sx.conjugate().array() * vs.array()).sum().real();
  const double sr2 = dot(x, sub->adjoint(vs));
  detail::add(rep, "restricted measurement dot", std::abs(sl - sr2) / (sx.norm() * vs.norm()),
              1e-10);
  return rep;
}

inline CheckReport check_parseval() {
  detail::CheckSetup s;
  CheckReport rep{"parseval", {}};
  double worst_iso = 0.0, worst_id = 0.0;
  for (int t = 0; t < 20; ++t) {
    Image x = s.random_image(100 + std::uint64_t(t), 1.0);
    Eigen::ArrayXd c = s.dict.analysis_coeffs(x);
    worst_iso = std::max(worst_iso,
                         std::abs(std::sqrt(c.square().sum()) - x.norm()) / x.norm());
    Image back = s.dict.synthesis_coeffs(16, 16, c);
    worst_id = std::max(worst_id, std::sqrt((back.v - x.v).square().sum()) / x.norm());
  }
  detail::add(rep, "analysis isometry", worst_iso, 1e-12);
  detail::add(rep, "synthesis(analysis) identity", worst_id, 1e-12);
  return rep;
}

inline CheckReport check_gradient() {
  detail::CheckSetup s;
  CheckReport rep{"gradient", {}};
  SaraDictionary dict3(3);
  WeightVector W8 = WeightVector::uniform(0.05, dict3.coeff_size(64));

  AntennaArray arr = make_synthetic_array(6, 54321);
  ObservationSpec spec;
  spec.samples_per_pair = 25;
  auto cov8 = std::make_shared<UVCoverage>(generate_tracks(arr, spec));
  auto op8 = std::make_shared<MeasurementOperator>(make_measurement_operator(cov8, 8, 8, 2));
  Image truth8 = generate_phantom(random_phantom_spec(8, 2, 2, 888));
  VisibilitySet y8 = op8->forward(truth8);

  Rng rng(5);
  std::normal_distribution<double> g(0.0, 0.5);
  Image x(8, 8);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.v[i] = g(rng);

  auto fd_norm = [&](auto value, const Image& grad) {
    Image fd(8, 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = 1e-5 * (1 + std::abs(x.v[i]));
      Image xp = x, xm = x;
      xp.v[i] += h;
      xm.v[i] -= h;
      fd.v[i] = (value(xp) - value(xm)) / (2 * h);
    }
    return std::sqrt((fd.v - grad.v).square().sum()) / std::sqrt(grad.v.square().sum());
  };

  detail::add(rep, "grad L vs finite differences",
              fd_norm([&](const Image& u) { return op8->data_fidelity(u, y8); },
                      op8->grad_data_fidelity(x, y8)),
              1e-6);
  detail::add(rep, "grad R_gamma vs finite differences",
              fd_norm([&](const Image& u) { return smoothed_reg_value(u, W8, s.gamma, dict3); },
                      smooth_grad_reg(x, W8, s.gamma, dict3)),
              1e-6);

  HierarchyConfig hc;
  hc.depth = 2;
  Hierarchy h = build_hierarchy(op8, y8, hc);
  Image v = coherence_vector(h.levels[0], h.levels[1], x, W8, s.gamma, dict3);
  detail::add(rep, "grad F_H vs finite differences",
              fd_norm([&](const Image& u) { return coarse_objective(h.levels[1], v, u); },
                      coarse_gradient(h.levels[1], v, x)),
              1e-6);
  return rep;
}

inline CheckReport check_coherence() {
  detail::CheckSetup s;
  CheckReport rep{"coherence", {}};
  HierarchyConfig hc;
  hc.depth = 3;
  Hierarchy h = build_hierarchy(s.op, s.y, hc);
  Image z = project_positive(s.random_image(7));
  Image fine_grad = s.op->grad_data_fidelity(z, s.y);
  fine_grad.v += smooth_grad_reg(z, s.W, s.gamma, s.dict).v;
  const double denom = 1.0 + std::sqrt(fine_grad.v.square().sum());
  for (std::size_t l = 1; l < h.levels.size(); ++l) {
    Image v = coherence_vector(h.levels[0], h.levels[l], z, s.W, s.gamma, s.dict);
    Image lhs = coarse_gradient(h.levels[l], v, z);
    detail::add(rep, "first-order coherence level " + std::to_string(l),
                std::sqrt((lhs.v - fine_grad.v).square().sum()) / denom, 1e-10);
  }
  return rep;
}

inline CheckReport check_prox() {
  detail::CheckSetup s;
  CheckReport rep{"prox", {}};
  Image x = s.random_image(11, 0.4);
  Rng rng(12);
  std::uniform_real_distribution<double> unif(0.02, 0.12);
  Eigen::ArrayXd w(s.dict.coeff_size(x.size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = unif(rng);
  WeightVector W{std::move(w)};
  ProxResult oracle = prox_weighted_l1_positive(x, W, 0.5, 1e-12, 100000, s.dict);
  ProxResult subject = prox_weighted_l1_positive(x, W, 0.5, 1e-10, 100000, s.dict);
  detail::add(rep, "prox vs long-run oracle",
              std::sqrt((subject.point.v - oracle.point.v).square().sum()) /
                  std::sqrt(oracle.point.v.square().sum()),
              1e-6);
  ProxResult rough = prox_weighted_l1_positive(x, W, 0.5, 1e-14, 3, s.dict);
  detail::add(rep, "feasibility at loose tolerance", double((rough.point.v < 0.0).count()), 0.0);
  detail::add(rep, "gap nonnegative", rough.gap >= 0.0 ? 0.0 : 1.0, 0.0);
  return rep;
}

inline CheckReport run_check_suite(const std::string& name) {
  if (name == "adjoint") return check_adjoint();
  if (name == "parseval") return check_parseval();
  if (name == "gradient") return check_gradient();
  if (name == "coherence") return check_coherence();
  if (name == "prox") return check_prox();
  throw std::invalid_argument("unknown check suite: " + name +
                              " (available: adjoint, parseval, gradient, coherence, prox)");
}

}  // namespace bench
}  // namespace usara
