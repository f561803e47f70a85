#pragma once

#include <algorithm>
#include <cassert>
#include <iostream>

#include "usara/prox.hpp"

namespace usara {

// Fine-equivalent operator-apply units: one fine forward or adjoint costs 1,
// one application at a coarse level costs m_level/m_fine.
struct CostLedger {
  double units = 0.0;
  void add(double u) { units += u; }
};

// Subset of a coverage's point indices, closed under tracks (no track is ever
// split). Indices are sorted and refer to the parent level's point order.
struct LevelSelector {
  std::vector<std::uint64_t> indices;
  double fraction = 1.0;
};

// Selects whole tracks in order of ascending baseline length (ties by pair
// id) until at least ceil(fraction*m) points are covered.
inline LevelSelector build_selector(const UVCoverage& cov, double fraction) {
  require(fraction > 0.0 && fraction <= 1.0, "build_selector: fraction must be in (0,1]");
  require(cov.size() > 0, "build_selector: empty coverage");

  std::vector<std::uint64_t> track_count(cov.baseline_m.size(), 0);
  for (auto t : cov.track) ++track_count[t];
  std::vector<std::uint32_t> order;
  for (std::uint32_t t = 0; t < track_count.size(); ++t)
    if (track_count[t] > 0) order.push_back(t);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (cov.baseline_m[a] != cov.baseline_m[b]) return cov.baseline_m[a] < cov.baseline_m[b];
    return a < b;
  });

  const auto target = std::uint64_t(std::ceil(fraction * double(cov.size())));
  std::vector<char> keep(track_count.size(), 0);
  std::uint64_t covered = 0;
  for (auto t : order) {
    if (covered >= target) break;
    keep[t] = 1;
    covered += track_count[t];
  }

  LevelSelector sel;
  sel.fraction = fraction;
  sel.indices.reserve(covered);
  for (std::uint64_t i = 0; i < cov.size(); ++i)
    if (keep[cov.track[i]]) sel.indices.push_back(i);
  return sel;
}

inline UVCoverage restrict_coverage(const UVCoverage& cov, const LevelSelector& sel) {
  UVCoverage out;
  out.baseline_m = cov.baseline_m;
  out.u.reserve(sel.indices.size());
  out.v.reserve(sel.indices.size());
  out.track.reserve(sel.indices.size());
  for (auto i : sel.indices) {
    require(i < cov.size(), "restrict_coverage: index out of range");
    out.u.push_back(cov.u[i]);
    out.v.push_back(cov.v[i]);
    out.track.push_back(cov.track[i]);
  }
  return out;
}

// One level of the data-space hierarchy: the restricted operator S Phi (rows
// J of the parent interpolation matrix), the restricted data S y, and the
// step bound tau <= 1/beta with beta an estimate of ||S Phi||^2.
struct Level {
  std::shared_ptr<const MeasurementOperator> op;
  VisibilitySet data;
  double beta = 0.0;
  double tau = 0.0;
  double cost_weight = 1.0;                // m_level / m_fine
  std::vector<std::uint64_t> fine_indices; // J as fine-level point indices
};

namespace detail {
inline SparseInterp select_rows(const SparseInterp& G, const std::vector<std::uint64_t>& rows) {
  std::vector<Eigen::Triplet<std::complex<double>>> trips;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(Eigen::Index(rows[r]) < G.rows(), "select_rows: row index out of range");
    for (SparseInterp::InnerIterator it(G, Eigen::Index(rows[r])); it; ++it)
      trips.emplace_back(Eigen::Index(r), it.col(), it.value());
  }
  SparseInterp out(Eigen::Index(rows.size()), G.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}
}  // namespace detail

// Cycle shape and per-level work of the coarse correction.
struct HierarchyConfig {
  int depth = 3;            // number of levels including the fine one
  double fraction = 0.5;    // data kept per coarsening
  int p = 5;                // gradient-descent iterations per level
  double alpha = 1.0;       // correction step
  double tau_safety = 1.0;  // tau = tau_safety / beta, must be <= 1
  double norm_tol = 1e-6;
  int norm_max_iter = 500;
  std::uint64_t seed = 0;

  void validate() const {
    require(depth >= 1, "hierarchy: depth must be >= 1");
    require(fraction > 0.0 && fraction <= 1.0, "hierarchy: fraction must be in (0,1]");
    require(p >= 1, "hierarchy: p must be >= 1");
    require(alpha >= 0.0, "hierarchy: alpha must be >= 0");
    require(tau_safety > 0.0 && tau_safety <= 1.0, "hierarchy: tau_safety must be in (0,1]");
  }
};

struct Hierarchy {
  std::vector<Level> levels;  // levels[0] is the fine level
  HierarchyConfig config;

  int depth() const { return int(levels.size()); }
};

// Builds the nested hierarchy by repeatedly selecting the shortest-baseline
// whole tracks of the previous level. Every level's beta comes from a power
// iteration on its restricted operator.
inline Hierarchy build_hierarchy(std::shared_ptr<const MeasurementOperator> fine_op,
                                 const VisibilitySet& y, const HierarchyConfig& cfg) {
  cfg.validate();
  require(fine_op != nullptr, "build_hierarchy: null operator");
  require(y.size() == fine_op->rows(), "build_hierarchy: data size mismatch");
  require(fine_op->coverage() != nullptr, "build_hierarchy: operator lacks coverage");

  Hierarchy h;
  h.config = cfg;
  const double m_fine = double(fine_op->rows());

  Level fine;
  fine.op = fine_op;
  fine.data = y;
  fine.beta = fine_op->norm_sq(cfg.norm_tol, cfg.norm_max_iter, cfg.seed);
  require(fine.beta > 0.0, "build_hierarchy: fine operator norm is zero");
  fine.tau = cfg.tau_safety / fine.beta;
  fine.cost_weight = 1.0;
  fine.fine_indices.resize(std::size_t(fine_op->rows()));
  for (std::size_t i = 0; i < fine.fine_indices.size(); ++i) fine.fine_indices[i] = i;
  h.levels.push_back(std::move(fine));

  for (int d = 1; d < cfg.depth; ++d) {
    const Level& parent = h.levels.back();
    LevelSelector sel = build_selector(*parent.op->coverage(), cfg.fraction);
    auto cov = std::make_shared<UVCoverage>(restrict_coverage(*parent.op->coverage(), sel));
    auto op = std::make_shared<MeasurementOperator>(
        detail::select_rows(parent.op->interpolation(), sel.indices), cov,
        parent.op->image_width(), parent.op->image_height(), parent.op->factor());

    Level lvl;
    lvl.data.values.resize(Eigen::Index(sel.indices.size()));
    for (std::size_t i = 0; i < sel.indices.size(); ++i)
      lvl.data.values[Eigen::Index(i)] = parent.data.values[Eigen::Index(sel.indices[i])];
    lvl.data.coverage = cov;
    lvl.beta = op->norm_sq(cfg.norm_tol, cfg.norm_max_iter, cfg.seed + std::uint64_t(d));
    require(lvl.beta > 0.0, "build_hierarchy: coarse operator norm is zero");
    lvl.tau = cfg.tau_safety / lvl.beta;
    lvl.cost_weight = double(sel.indices.size()) / m_fine;
    lvl.fine_indices.reserve(sel.indices.size());
    for (auto i : sel.indices) lvl.fine_indices.push_back(parent.fine_indices[i]);
    lvl.op = std::move(op);
    h.levels.push_back(std::move(lvl));
  }
  return h;
}

// Coarse objective F_level(x) = 0.5 ||S Phi x - S y||^2 + <v, x> and its
// gradient; v is the first-order coherence vector anchored where the level
// was entered.
inline double coarse_objective(const Level& level, const Image& v, const Image& x,
                               CostLedger* ledger = nullptr) {
  if (ledger) ledger->add(level.cost_weight);
  return level.op->data_fidelity(x, level.data) + dot(v, x);
}

inline Image coarse_gradient(const Level& level, const Image& v, const Image& x,
                             CostLedger* ledger = nullptr) {
  if (ledger) ledger->add(2.0 * level.cost_weight);
  Image g = level.op->grad_data_fidelity(x, level.data);
  g.v += v.v;
  return g;
}

// First-order coherence vector for `level` anchored at z, from the smoothed
// fine objective: v = grad L(z) + grad R_gamma(z) - grad L_level(z). At the
// anchor this makes grad F_level(z) equal the smoothed fine gradient.
template <AnalysisDictionary Dict>
inline Image coherence_vector(const Level& fine, const Level& level, const Image& z,
                              const WeightVector& W, double gamma, const Dict& dict,
                              CostLedger* ledger = nullptr) {
  if (ledger) ledger->add(2.0 + 2.0 * level.cost_weight);
  Image v = fine.op->grad_data_fidelity(z, fine.data);
  v.v += smooth_grad_reg(z, W, gamma, dict).v;
  v.v -= level.op->grad_data_fidelity(z, level.data).v;
  return v;
}

struct MlAuditRecord {
  int level = 0;
  double f_entry = 0.0;
  double f_exit = 0.0;
  bool fallback = false;   // deeper correction was discarded
  bool violation = false;  // decrease failed beyond slack (should not happen)
};

namespace detail {

// Correction at h.levels[idx] anchored at z. parent_grad is the gradient of
// the level above's objective at z; by first-order coherence it equals
// grad F_idx(z), so it seeds the next coherence vector without re-evaluation.
// The coarse objective is guaranteed non-increasing from the anchor: if the
// recursive correction below ends up above the entry value after the p
// descent steps, it is discarded and the p steps rerun from the anchor, which
// the descent lemma makes monotone for tau <= 1/beta.
inline Image ml_correct(const Hierarchy& h, std::size_t idx, const Image& z,
                        const Image& parent_grad, CostLedger* ledger,
                        std::vector<MlAuditRecord>* audit) {
  const Level& lvl = h.levels[idx];
  if (ledger) ledger->add(2.0 * lvl.cost_weight);
  Image v(z.width, z.height);
  v.v = parent_grad.v - lvl.op->grad_data_fidelity(z, lvl.data).v;

  const double f_entry = coarse_objective(lvl, v, z, ledger);

  Image zcur = z;
  if (idx + 1 < h.levels.size()) {
    Image my_grad(z.width, z.height);
    my_grad.v = parent_grad.v;  // grad F_idx(z) == parent_grad at the anchor
    zcur = ml_correct(h, idx + 1, z, my_grad, ledger, audit);
  }

  auto descend = [&](Image start) {
    for (int i = 0; i < h.config.p; ++i) {
      Image g = coarse_gradient(lvl, v, start, ledger);
      start.v -= lvl.tau * g.v;
    }
    return start;
  };

  Image zplus = descend(zcur);
  double f_exit = coarse_objective(lvl, v, zplus, ledger);
  MlAuditRecord rec{int(idx), f_entry, f_exit, false, false};
  if (f_exit > f_entry && idx + 1 < h.levels.size()) {
    zplus = descend(z);
    f_exit = coarse_objective(lvl, v, zplus, ledger);
    rec.fallback = true;
    rec.f_exit = f_exit;
  }
  const double slack = 1e-12 * (1.0 + std::abs(f_entry));
  if (f_exit > f_entry + slack) {
    rec.violation = true;
    assert(false && "ml_correct: coarse objective increased");
    std::cerr << "warning: ml_correct level " << idx << ": coarse objective increased by "
              << (f_exit - f_entry) << "\n";
  }
  if (audit) audit->push_back(rec);

  Image out = z;
  out.v += h.config.alpha * (zplus.v - z.v);
  return out;
}

}  // namespace detail

// The coarse-correction step: computes the coherence vector at the anchor z,
// descends the level hierarchy (V-cycle: each level computes its coherence
// vector, recurses once, then runs p gradient steps), and corrects z along
// the returned direction with step alpha. A depth-1 hierarchy is a no-op.
template <AnalysisDictionary Dict>
inline Image ml_step(const Hierarchy& h, const Image& z, const WeightVector& W, double gamma,
                     const Dict& dict, CostLedger* ledger = nullptr,
                     std::vector<MlAuditRecord>* audit = nullptr) {
  if (h.levels.size() < 2) return z;
  require(gamma > 0.0, "ml_step: gamma must be positive");
  const Level& fine = h.levels[0];
  if (ledger) ledger->add(2.0);
  Image smoothed_grad = fine.op->grad_data_fidelity(z, fine.data);
  smoothed_grad.v += smooth_grad_reg(z, W, gamma, dict).v;
  return detail::ml_correct(h, 1, z, smoothed_grad, ledger, audit);
}

}  // namespace usara
