/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aimc/core.hpp"
#include "aimc/input_dist.hpp"
#include "aimc/plan.hpp"
#include "aimc/rng.hpp"

/**
 * The two programming engines.
 *
 * Iterative baseline: sweep the array, read every unconverged cell through
 * the ADC path (the only read the hardware has), pulse proportionally to the
 * remaining error, and permanently retire cells once the readout is within
 * the margin. Its accuracy is bounded by that coarse read.
 *
 * GDP (gradient-descent programming): never read cells at all. Run batched
 * MVMs with random inputs, compare against the exact digital product,
 * and descend the MVM loss by pulsing every cell with the clipped negative
 * gradient. Errors below the read quantization stay visible in the loss
 * because they correlate with the inputs across a batch, which is what lets
 * GDP land weights tighter than anything read-and-correct can certify.
 *
 * Both engines are routed by a ProgrammingPlan (see plan.hpp) and execute its
 * one-time companion-slot actions on entry.
 *
 * Config values kappa, margin and eta accept kAutoValue (any negative value)
 * to derive hardware-consistent defaults at entry:
 *   kappa, eta -> weight_scale / alpha  (a pulse of 1 moves one weight unit
 *                                        in the undamped linear regime)
 *   margin     -> one decoded ADC LSB   (the tightest readable tolerance)
 */

namespace aimc {

inline constexpr double kAutoValue = -1.0;

struct IterativeConfig {
  double margin = kAutoValue;  // convergence tolerance, weight units
  double kappa = kAutoValue;   // pulse amplitude per unit weight error
  int max_sweeps = 50;
  bool bipolar_correction = true;
  int checkpoint_every = 0;  // sweeps between error checkpoints; 0 = none
};

enum class GdpInit { kNone, kSingleShot, kWarmstart };

inline const char* to_string(GdpInit init) {
  switch (init) {
    case GdpInit::kNone: return "none";
    case GdpInit::kSingleShot: return "single-shot";
    case GdpInit::kWarmstart: return "warmstart";
  }
  return "none";
}

inline GdpInit gdp_init_from_string(const std::string& s) {
  if (s == "none") return GdpInit::kNone;
  if (s == "single-shot") return GdpInit::kSingleShot;
  if (s == "warmstart") return GdpInit::kWarmstart;
  throw std::invalid_argument("unknown gdp init '" + s +
                              "' (expected none, single-shot or warmstart)");
}

struct GdpConfig {
  double eta = kAutoValue;  // pulse amplitude per unit gradient
  int batch_size = 256;
  int iterations = 500;
  InputDist input_dist;     // uniform by default
  double u_clip = 1.0;      // pulse amplitude bound per step
  GdpInit init = GdpInit::kSingleShot;
  int warmstart_sweeps = 20;
  bool fixed_pool = false;  // reuse one input batch instead of redrawing
  bool bipolar_correction = true;
  int checkpoint_every = 0;  // iterations between error checkpoints; 0 = none
};

struct LogRecord {
  int iteration = 0;
  double loss = 0.0;
  double eps_total = std::numeric_limits<double>::quiet_NaN();  // NaN = not measured
  double clock_s = 0.0;
  int converged_cells = -1;  // -1 outside the iterative engine
};

struct ProgrammingLog {
  std::vector<LogRecord> records;
};

/// Optional per-checkpoint callback; returns the eps_total to log.
using CheckpointFn = std::function<double(CrossbarCore&, int iteration)>;

inline double resolve_margin(const IterativeConfig& cfg, const CrossbarCore& core) {
  return cfg.margin >= 0.0 ? cfg.margin : lsb_weight(core);
}

inline double resolve_kappa(const IterativeConfig& cfg, const CrossbarCore& core) {
  return cfg.kappa > 0.0 ? cfg.kappa : core.weight_scale / core.device.alpha;
}

inline double resolve_eta(const GdpConfig& cfg, const CrossbarCore& core) {
  return cfg.eta >= 0.0 ? cfg.eta : core.weight_scale / core.device.alpha;
}

/**
 * Builds the routing plan for a target weight matrix (normalized domain,
 * clipped to [-1, 1]). Each polarity's conductance share goes through the
 * single- or two-device split rules; unattainable polarity targets are
 * counted, not fatal.
 */
inline ProgrammingPlan build_plan(const CrossbarCore& core, const Eigen::MatrixXd& target) {
  if (target.rows() != core.rows || target.cols() != core.cols)
    throw std::invalid_argument("build_plan: target shape mismatch");
  if (!target.allFinite())
    throw std::invalid_argument("build_plan: non-finite target");

  const bool two = core.mode == CellMode::kTwoDevice;
  ProgrammingPlan plan;
  plan.rows = core.rows;
  plan.cols = core.cols;
  plan.cells.resize(static_cast<size_t>(core.rows) * core.cols);
  for (int i = 0; i < core.rows; ++i) {
    for (int j = 0; j < core.cols; ++j) {
      const double w = std::clamp(target(i, j), -1.0, 1.0);
      const double t_pos = std::max(w, 0.0) * core.weight_scale;
      const double t_neg = std::max(-w, 0.0) * core.weight_scale;
      CellPlan& cell = plan.at(i, j);
      if (two) {
        cell.pos = plan_pair(t_pos, core.slots[kPlusA].set_cap(i, j),
                             core.slots[kPlusB].set_cap(i, j));
        cell.neg = plan_pair(t_neg, core.slots[kMinusA].set_cap(i, j),
                             core.slots[kMinusB].set_cap(i, j));
      } else {
        cell.pos = plan_single(t_pos, core.slots[kPlusA].set_cap(i, j));
        cell.neg = plan_single(t_neg, core.slots[kMinusA].set_cap(i, j));
      }
      plan.unattainable += (cell.pos.attainable ? 0 : 1) + (cell.neg.attainable ? 0 : 1);
    }
  }
  return plan;
}

/**
 * One-shot initialization: a single pulse per cell with amplitude
 * prog_target / alpha, the inverse of the noiseless update law at g = 0.
 * Expects a fresh or RESET core (the plan's fixed actions already applied).
 */
inline void init_single_shot(CrossbarCore& core, const ProgrammingPlan& plan) {
  if (plan.rows != core.rows || plan.cols != core.cols)
    throw std::invalid_argument("init_single_shot: plan shape mismatch");
  Eigen::MatrixXd u(core.rows, core.cols);
  for (int i = 0; i < core.rows; ++i)
    for (int j = 0; j < core.cols; ++j) {
      const CellPlan& cell = plan.at(i, j);
      u(i, j) = (cell.pos.prog_target_us - cell.neg.prog_target_us) / core.device.alpha;
    }
  apply_pulse_matrix(core, u, plan);
}

// Forward declaration; warmstart is the iterative engine with margin 0.
inline ProgrammingLog program_iterative(CrossbarCore& core, const Eigen::MatrixXd& target,
                                        const IterativeConfig& cfg,
                                        const ProgrammingPlan& plan,
                                        const CheckpointFn& checkpoint = nullptr);

/// A fixed number of iterative sweeps with margin 0 (no early convergence).
/// n_sweeps = 0 leaves the core untouched.
inline void init_iterative_warmstart(CrossbarCore& core, const Eigen::MatrixXd& target,
                                     int n_sweeps, const ProgrammingPlan& plan) {
  if (n_sweeps < 0) throw std::invalid_argument("warmstart: n_sweeps must be >= 0");
  if (n_sweeps == 0) return;
  IterativeConfig cfg;
  cfg.margin = 0.0;
  cfg.max_sweeps = n_sweeps;
  program_iterative(core, target, cfg, plan);
}

inline ProgrammingLog program_iterative(CrossbarCore& core, const Eigen::MatrixXd& target,
                                        const IterativeConfig& cfg,
                                        const ProgrammingPlan& plan,
                                        const CheckpointFn& checkpoint) {
  if (target.rows() != core.rows || target.cols() != core.cols)
    throw std::invalid_argument("program_iterative: target shape mismatch");
  if (cfg.max_sweeps < 1)
    throw std::invalid_argument("program_iterative: max_sweeps must be >= 1");
  const double margin = resolve_margin(cfg, core);
  const double kappa = resolve_kappa(cfg, core);
  if (!(margin >= 0.0)) throw std::invalid_argument("program_iterative: margin must be >= 0");

  apply_fixed_actions(core, plan);
  const Eigen::MatrixXd w = target.array().max(-1.0).min(1.0).matrix();
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> unconverged =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(core.rows, core.cols,
                                                                   true);
  ProgrammingLog log;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const Eigen::MatrixXd est = read_all_cells_adc(core);
    const Eigen::ArrayXXd err = (w - est).array();
    // Cells inside the margin retire now, before any pulse, and stay retired.
    unconverged = unconverged && (err.abs() > margin);
    const int active = static_cast<int>(unconverged.count());

    if (active > 0) {
      const Eigen::MatrixXd u = (kappa * err).matrix();
      apply_pulse_matrix(core, u, plan, cfg.bipolar_correction, &unconverged);
    }

    LogRecord rec;
    rec.iteration = sweep;
    rec.loss = 0.5 * err.square().sum();
    rec.clock_s = core.clock;
    rec.converged_cells = core.rows * core.cols - active;
    if (checkpoint && cfg.checkpoint_every > 0 && sweep % cfg.checkpoint_every == 0)
      rec.eps_total = checkpoint(core, sweep);
    log.records.push_back(rec);

    if (active == 0) break;
  }
  return log;
}

/**
 * Gradient-descent programming. The loop touches the core through exactly two
 * operations, batched MVMs and pulse applications; it never goes near the
 * cell read path (the warmstart initialization, when chosen, is the iterative
 * engine and reads by definition).
 */
inline ProgrammingLog program_gdp(CrossbarCore& core, const Eigen::MatrixXd& target,
                                  const GdpConfig& cfg, const ProgrammingPlan& plan,
                                  const CheckpointFn& checkpoint = nullptr) {
  if (target.rows() != core.rows || target.cols() != core.cols)
    throw std::invalid_argument("program_gdp: target shape mismatch");
  if (cfg.batch_size < 1) throw std::invalid_argument("program_gdp: batch_size must be >= 1");
  if (cfg.iterations < 1) throw std::invalid_argument("program_gdp: iterations must be >= 1");
  if (!(cfg.u_clip > 0.0)) throw std::invalid_argument("program_gdp: u_clip must be > 0");
  validate(cfg.input_dist);
  const double eta = resolve_eta(cfg, core);

  if (cfg.init == GdpInit::kWarmstart && cfg.warmstart_sweeps > 0) {
    init_iterative_warmstart(core, target, cfg.warmstart_sweeps, plan);
  } else {
    apply_fixed_actions(core, plan);
    if (cfg.init == GdpInit::kSingleShot) init_single_shot(core, plan);
  }

  const Eigen::MatrixXd w = target.array().max(-1.0).min(1.0).matrix();
  const RngStream root(core.seed);
  Eigen::MatrixXd pool;
  if (cfg.fixed_pool) {
    RngStream s = root.derive("gdp_x", 0);
    pool = draw_inputs(cfg.input_dist, core.rows, cfg.batch_size, s);
  }

  ProgrammingLog log;
  for (int t = 1; t <= cfg.iterations; ++t) {
    Eigen::MatrixXd x;
    if (cfg.fixed_pool) {
      x = pool;
    } else {
      RngStream s = root.derive("gdp_x", static_cast<std::uint64_t>(t));
      x = draw_inputs(cfg.input_dist, core.rows, cfg.batch_size, s);
    }

    const Eigen::MatrixXd y_tilde = mvm_batch(core, x);
    const Eigen::MatrixXd err = y_tilde - w.transpose() * x;  // c x B
    const double loss = err.squaredNorm() / (2.0 * cfg.batch_size);
    if (!std::isfinite(loss))
      throw std::runtime_error("program_gdp: non-finite loss at iteration " +
                               std::to_string(t) + " (learning rate too high?)");

    const Eigen::MatrixXd grad = x * err.transpose() / cfg.batch_size;  // r x c
    const Eigen::MatrixXd u =
        (-eta * grad.array()).max(-cfg.u_clip).min(cfg.u_clip).matrix();
    apply_pulse_matrix(core, u, plan, cfg.bipolar_correction);

    LogRecord rec;
    rec.iteration = t;
    rec.loss = loss;
    rec.clock_s = core.clock;
    if (checkpoint && cfg.checkpoint_every > 0 && t % cfg.checkpoint_every == 0)
      rec.eps_total = checkpoint(core, t);
    log.records.push_back(rec);
  }
  return log;
}

}  // namespace aimc
