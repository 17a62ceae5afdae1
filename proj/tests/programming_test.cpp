/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#include "aimc/programming.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace aimc {
namespace {

DeviceParams exact_devices() {
  DeviceParams p = pcm1();
  p.sigma_prog = 0.0;
  p.sigma_read_rel = 0.0;
  p.nu_mean = 0.0;
  p.nu_std = 0.0;
  p.set_cap_std = 0.0;
  return p;
}

AdcParams fine_adc(double i_max) {
  AdcParams a;
  a.n_bits = 16;
  a.i_max = i_max;
  a.beta_nl = 0.0;
  return a;
}

Eigen::MatrixXd random_weights(int rows, int cols, std::uint64_t seed, double scale) {
  RngStream rng(seed);
  Eigen::MatrixXd w(rows, cols);
  for (int i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-scale, scale);
  return w;
}

TEST(PlanSingle, FlagsUnattainableTargets) {
  const PolarityPlan ok = plan_single(10.0, 22.0);
  EXPECT_EQ(ok.prog_slot, 0);
  EXPECT_EQ(ok.fixed_action, FixedAction::kNone);
  EXPECT_DOUBLE_EQ(ok.prog_target_us, 10.0);
  EXPECT_TRUE(ok.attainable);

  const PolarityPlan over = plan_single(25.0, 22.0);
  EXPECT_FALSE(over.attainable);
  EXPECT_THROW(plan_single(-1.0, 22.0), std::invalid_argument);
}

TEST(PlanPair, CoversAllThreeBranches) {
  // Fits in the larger slot: program it, reset the companion.
  const PolarityPlan fits = plan_pair(10.0, 20.0, 24.0);
  EXPECT_EQ(fits.prog_slot, 1);  // slot b has the larger cap
  EXPECT_EQ(fits.fixed_action, FixedAction::kReset);
  EXPECT_DOUBLE_EQ(fits.prog_target_us, 10.0);
  EXPECT_TRUE(fits.attainable);

  // Needs both: set the larger slot to its cap, program the remainder.
  const PolarityPlan split = plan_pair(30.0, 20.0, 24.0);
  EXPECT_EQ(split.prog_slot, 0);
  EXPECT_EQ(split.fixed_action, FixedAction::kSet);
  EXPECT_DOUBLE_EQ(split.prog_target_us, 30.0 - 24.0);
  EXPECT_TRUE(split.attainable);

  // Exceeds both combined: saturate and mark unattainable.
  const PolarityPlan over = plan_pair(50.0, 20.0, 24.0);
  EXPECT_EQ(over.prog_slot, 0);
  EXPECT_EQ(over.fixed_action, FixedAction::kSet);
  EXPECT_DOUBLE_EQ(over.prog_target_us, 20.0);
  EXPECT_FALSE(over.attainable);

  // Ties pick slot a as the high slot.
  EXPECT_EQ(plan_pair(5.0, 22.0, 22.0).prog_slot, 0);
}

TEST(BuildPlan, ClipsTargetsAndCountsUnattainable) {
  CrossbarCore core = build_core(2, 2, exact_devices(), fine_adc(50.0), InputEncoding{},
                                 CellMode::kSingleDevice, 1);
  Eigen::MatrixXd w(2, 2);
  w << 0.5, -0.5, 3.0, -3.0;  // out-of-range entries clip to +-1
  const ProgrammingPlan plan = build_plan(core, w);
  EXPECT_DOUBLE_EQ(plan.at(0, 0).pos.prog_target_us, 0.5 * 22.0);
  EXPECT_DOUBLE_EQ(plan.at(0, 1).neg.prog_target_us, 0.5 * 22.0);
  EXPECT_DOUBLE_EQ(plan.at(1, 0).pos.prog_target_us, 22.0);
  EXPECT_DOUBLE_EQ(plan.at(1, 1).neg.prog_target_us, 22.0);
  EXPECT_EQ(plan.unattainable, 0);

  // A single-device cell cannot hold a full-scale weight if its cap drew
  // below the array mean.
  CrossbarCore tight = core;
  tight.slots[kPlusA].set_cap(1, 0) = 20.0;  // cell whose target is 22 uS
  const ProgrammingPlan plan2 = build_plan(tight, w);
  EXPECT_EQ(plan2.unattainable, 1);

  EXPECT_THROW(build_plan(core, Eigen::MatrixXd::Zero(3, 2)), std::invalid_argument);
}

TEST(AutoDefaults, ResolveFromCoreGeometry) {
  CrossbarCore core = build_core(4, 4, pcm1(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 1);
  IterativeConfig icfg;
  EXPECT_DOUBLE_EQ(resolve_margin(icfg, core), lsb_weight(core));
  EXPECT_DOUBLE_EQ(resolve_kappa(icfg, core), 22.0 / 2.0);
  icfg.margin = 0.0;
  icfg.kappa = 3.0;
  EXPECT_DOUBLE_EQ(resolve_margin(icfg, core), 0.0);
  EXPECT_DOUBLE_EQ(resolve_kappa(icfg, core), 3.0);

  GdpConfig gcfg;
  EXPECT_DOUBLE_EQ(resolve_eta(gcfg, core), 11.0);
  gcfg.eta = 0.5;
  EXPECT_DOUBLE_EQ(resolve_eta(gcfg, core), 0.5);
}

TEST(GdpInitNames, RoundTrip) {
  EXPECT_EQ(gdp_init_from_string("none"), GdpInit::kNone);
  EXPECT_EQ(gdp_init_from_string("single-shot"), GdpInit::kSingleShot);
  EXPECT_EQ(gdp_init_from_string("warmstart"), GdpInit::kWarmstart);
  EXPECT_STREQ(to_string(GdpInit::kWarmstart), "warmstart");
  EXPECT_THROW(gdp_init_from_string("coldstart"), std::invalid_argument);
}

// Noiseless single-shot lands exactly on target: at g = 0 the SET damping is
// 1, so one pulse of prog_target/alpha programs prog_target exactly.
TEST(SingleShot, ExactOnNoiselessCore) {
  for (CellMode mode : {CellMode::kSingleDevice, CellMode::kTwoDevice}) {
    CrossbarCore core =
        build_core(6, 6, exact_devices(), fine_adc(2000.0), InputEncoding{}, mode, 5);
    const Eigen::MatrixXd w = random_weights(6, 6, 11, 0.45);
    const ProgrammingPlan plan = build_plan(core, w);
    apply_fixed_actions(core, plan);
    init_single_shot(core, plan);
    EXPECT_LE((true_weights(core) - w).array().abs().maxCoeff(), 1e-12)
        << "mode " << to_string(mode);
  }
}

TEST(Warmstart, ZeroSweepsLeaveCoreUntouched) {
  CrossbarCore core = build_core(4, 4, pcm1(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 7);
  const Eigen::MatrixXd w = random_weights(4, 4, 3, 0.5);
  const ProgrammingPlan plan = build_plan(core, w);
  init_iterative_warmstart(core, w, 0, plan);
  EXPECT_EQ(core.pulse_counter, 0u);
  EXPECT_DOUBLE_EQ(core.clock, 0.0);
  EXPECT_THROW(init_iterative_warmstart(core, w, -1, plan), std::invalid_argument);
}

TEST(Warmstart, RunsExactlyNSweeps) {
  CrossbarCore core = build_core(4, 4, pcm1(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 7);
  core.t_prog_step = 1.0;
  const Eigen::MatrixXd w = random_weights(4, 4, 3, 0.5);
  const ProgrammingPlan plan = build_plan(core, w);
  init_iterative_warmstart(core, w, 5, plan);
  // Margin 0 never converges, so each sweep pulses once: 5 pulse rounds at
  // one second each, plus the (empty) fixed-action invocation on entry.
  EXPECT_EQ(core.pulse_counter, 6u);
  EXPECT_DOUBLE_EQ(core.clock, 5.0);
}

// On a noiseless core with a fine ADC, read-compare-pulse must converge for
// small weights within 3 sweeps: the only nonideality is SET damping, which
// second and third sweeps correct geometrically.
TEST(Iterative, ConvergesInThreeSweepsNoiseless) {
  InputEncoding enc;
  enc.n_in_bits = 12;
  CrossbarCore core =
      build_core(8, 8, exact_devices(), fine_adc(30.0), enc, CellMode::kSingleDevice, 13);
  const Eigen::MatrixXd w = random_weights(8, 8, 17, 0.05);
  const ProgrammingPlan plan = build_plan(core, w);
  IterativeConfig cfg;
  cfg.margin = 1e-4;
  const ProgrammingLog log = program_iterative(core, w, cfg, plan);
  EXPECT_LE(log.records.size(), 3u);
  EXPECT_EQ(log.records.back().converged_cells, 64);
  EXPECT_LE((true_weights(core) - w).array().abs().maxCoeff(), 1e-4 + 1e-12);
}

TEST(Iterative, HugeMarginMeansInstantConvergence) {
  CrossbarCore core = build_core(4, 4, pcm1(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 19);
  const Eigen::MatrixXd w = random_weights(4, 4, 23, 0.5);
  const ProgrammingPlan plan = build_plan(core, w);
  IterativeConfig cfg;
  cfg.margin = 10.0;  // everything is instantly within tolerance
  const ProgrammingLog log = program_iterative(core, w, cfg, plan);
  EXPECT_EQ(log.records.size(), 1u);
  EXPECT_EQ(log.records[0].converged_cells, 16);
  // No pulses were applied: every device is still reset and the clock never
  // moved (the counter registers the empty fixed-action invocation only).
  EXPECT_DOUBLE_EQ(core.clock, 0.0);
  EXPECT_EQ(core.pulse_counter, 1u);
  for (int s = 0; s < 4; ++s) EXPECT_TRUE((core.slots[s].g_prog == 0.0).all());
}

TEST(Iterative, RetiredCellsAreNeverPulsedAgain) {
  DeviceParams dev = exact_devices();
  dev.sigma_prog = 0.4;  // write noise makes later sweeps want to re-touch
  InputEncoding enc;
  enc.n_in_bits = 10;
  CrossbarCore core =
      build_core(6, 6, dev, fine_adc(30.0), enc, CellMode::kSingleDevice, 29);
  const Eigen::MatrixXd w = random_weights(6, 6, 31, 0.4);
  const ProgrammingPlan plan = build_plan(core, w);

  IterativeConfig cfg;
  cfg.margin = 0.05;
  cfg.max_sweeps = 2;
  program_iterative(core, w, cfg, plan);
  // Cells converged by now keep their last-programmed time from here on.
  const Eigen::ArrayXXd est = (true_weights(core)).array();
  const Eigen::ArrayXXd err = (w.array() - est).abs();
  const Eigen::ArrayXXd t_before = core.slots[kPlusA].t_prog;
  const Eigen::ArrayXXd tn_before = core.slots[kMinusA].t_prog;

  IterativeConfig more = cfg;
  more.max_sweeps = 10;
  CrossbarCore fresh = core;  // continue programming on a copy
  program_iterative(fresh, w, more, plan);
  int checked = 0;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (err(i, j) <= 0.02) {  // clearly inside margin, read noise aside
        EXPECT_DOUBLE_EQ(fresh.slots[kPlusA].t_prog(i, j), t_before(i, j));
        EXPECT_DOUBLE_EQ(fresh.slots[kMinusA].t_prog(i, j), tn_before(i, j));
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Iterative, ValidatesConfigAndShapes) {
  CrossbarCore core = build_core(3, 3, pcm1(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 1);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Constant(3, 3, 0.2);
  const ProgrammingPlan plan = build_plan(core, w);
  IterativeConfig cfg;
  cfg.max_sweeps = 0;
  EXPECT_THROW(program_iterative(core, w, cfg, plan), std::invalid_argument);
  cfg.max_sweeps = 5;
  EXPECT_THROW(program_iterative(core, Eigen::MatrixXd::Zero(2, 3), cfg, plan),
               std::invalid_argument);
}

TEST(Iterative, CheckpointCallbackFiresOnSchedule) {
  CrossbarCore core = build_core(4, 4, pcm1(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 37);
  const Eigen::MatrixXd w = random_weights(4, 4, 41, 0.5);
  const ProgrammingPlan plan = build_plan(core, w);
  IterativeConfig cfg;
  cfg.margin = 0.0;  // run all sweeps
  cfg.max_sweeps = 6;
  cfg.checkpoint_every = 2;
  int calls = 0;
  const ProgrammingLog log =
      program_iterative(core, w, cfg, plan, [&](CrossbarCore&, int) {
        ++calls;
        return 42.0;
      });
  EXPECT_EQ(calls, 3);
  ASSERT_EQ(log.records.size(), 6u);
  for (const LogRecord& rec : log.records) {
    if (rec.iteration % 2 == 0)
      EXPECT_DOUBLE_EQ(rec.eps_total, 42.0);
    else
      EXPECT_TRUE(std::isnan(rec.eps_total));
    EXPECT_EQ(rec.converged_cells, 0);
  }
}

TEST(Gdp, ZeroEtaLeavesWeightsUntouched) {
  CrossbarCore core = build_core(6, 6, exact_devices(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 43);
  const Eigen::MatrixXd w = random_weights(6, 6, 47, 0.4);
  const ProgrammingPlan plan = build_plan(core, w);
  GdpConfig cfg;
  cfg.eta = 0.0;
  cfg.init = GdpInit::kNone;
  cfg.iterations = 5;
  cfg.batch_size = 8;
  program_gdp(core, w, cfg, plan);
  // Zero-amplitude pulses re-anchor drift but change no conductance. The
  // counter sees five pulse rounds plus the empty fixed-action invocation.
  EXPECT_TRUE((true_weights(core).array() == 0.0).all());
  EXPECT_EQ(core.pulse_counter, 6u);
}

TEST(Gdp, NeverTouchesTheCellReadPath) {
  CrossbarCore core = build_core(8, 8, pcm1(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 53);
  const Eigen::MatrixXd w = random_weights(8, 8, 59, 0.5);
  const ProgrammingPlan plan = build_plan(core, w);
  GdpConfig cfg;
  cfg.iterations = 20;
  cfg.batch_size = 16;
  program_gdp(core, w, cfg, plan);
  EXPECT_EQ(core.unit_read_counter, 0u);

  // The warmstart variant is the documented exception: it reads by design.
  CrossbarCore warm = build_core(8, 8, pcm1(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 53);
  cfg.init = GdpInit::kWarmstart;
  cfg.warmstart_sweeps = 2;
  program_gdp(warm, w, cfg, plan);
  EXPECT_EQ(warm.unit_read_counter, 2u * 64u);
}

// Convex quadratic sanity: on the differentiable surrogate (no noise, no
// quantization, no compression), gradient descent must drive the loss to a
// tiny fraction of its starting value and keep it non-increasing.
TEST(Gdp, LossDecreasesMonotonicallyOnSurrogate) {
  CrossbarCore core = build_core(8, 8, exact_devices(), fine_adc(50.0), InputEncoding{},
                                 CellMode::kSingleDevice, 61);
  core.bypass_input_quant = true;
  core.bypass_adc = true;
  const Eigen::MatrixXd w = random_weights(8, 8, 67, 0.5);
  const ProgrammingPlan plan = build_plan(core, w);
  GdpConfig cfg;
  cfg.init = GdpInit::kNone;
  cfg.eta = 0.25 * 11.0;
  cfg.iterations = 120;
  cfg.batch_size = 64;
  cfg.fixed_pool = true;  // deterministic quadratic in the weights
  const ProgrammingLog log = program_gdp(core, w, cfg, plan);
  for (size_t k = 1; k < log.records.size(); ++k)
    EXPECT_LE(log.records[k].loss, log.records[k - 1].loss + 1e-15);
  EXPECT_LT(log.records.back().loss, 1e-6 * log.records.front().loss);
}

// The engine's digital gradient X E^T / B against central finite differences
// of the loss on the surrogate core.
TEST(Gdp, GradientMatchesFiniteDifferences) {
  const int r = 8, c = 8, batch = 32;
  CrossbarCore core = build_core(r, c, exact_devices(), fine_adc(50.0), InputEncoding{},
                                 CellMode::kSingleDevice, 71);
  core.bypass_input_quant = true;
  core.bypass_adc = true;
  const Eigen::MatrixXd w0 = random_weights(r, c, 73, 0.4);    // current weights
  const Eigen::MatrixXd tgt = random_weights(r, c, 79, 0.4);   // programming target
  inject_weights(core, w0);
  RngStream rng(83);
  Eigen::MatrixXd x(r, batch);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);

  // Engine gradient at w0.
  const Eigen::MatrixXd err = mvm_batch(core, x) - tgt.transpose() * x;
  const Eigen::MatrixXd grad = x * err.transpose() / batch;

  // Finite differences of L(w) = ||w^T x - tgt^T x||^2 / 2B around w0.
  auto loss_at = [&](const Eigen::MatrixXd& w) {
    CrossbarCore probe = core;
    inject_weights(probe, w);
    const Eigen::MatrixXd e = mvm_batch(probe, x) - tgt.transpose() * x;
    return e.squaredNorm() / (2.0 * batch);
  };
  const double delta = 1e-6;
  Eigen::MatrixXd fd(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      Eigen::MatrixXd wp = w0, wm = w0;
      wp(i, j) += delta;
      wm(i, j) -= delta;
      fd(i, j) = (loss_at(wp) - loss_at(wm)) / (2.0 * delta);
    }
  }
  EXPECT_LT((grad - fd).norm() / fd.norm(), 1e-4);
}

TEST(Gdp, FixedPoolReusesTheSameBatch) {
  auto run = [](bool fixed) {
    CrossbarCore core = build_core(6, 6, exact_devices(), AdcParams{}, InputEncoding{},
                                   CellMode::kSingleDevice, 89);
    const Eigen::MatrixXd w = random_weights(6, 6, 97, 0.4);
    const ProgrammingPlan plan = build_plan(core, w);
    GdpConfig cfg;
    cfg.eta = 0.0;  // weights frozen, so loss differences come from inputs only
    cfg.init = GdpInit::kNone;
    cfg.iterations = 4;
    cfg.batch_size = 8;
    cfg.fixed_pool = fixed;
    return program_gdp(core, w, cfg, plan);
  };
  const ProgrammingLog fixed = run(true);
  for (const LogRecord& rec : fixed.records)
    EXPECT_DOUBLE_EQ(rec.loss, fixed.records[0].loss);
  const ProgrammingLog drawn = run(false);
  EXPECT_NE(drawn.records[0].loss, drawn.records[1].loss);
}

TEST(Gdp, ValidatesConfig) {
  CrossbarCore core = build_core(3, 3, pcm1(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 1);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Constant(3, 3, 0.2);
  const ProgrammingPlan plan = build_plan(core, w);
  GdpConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(program_gdp(core, w, cfg, plan), std::invalid_argument);
  cfg.batch_size = 8;
  cfg.iterations = 0;
  EXPECT_THROW(program_gdp(core, w, cfg, plan), std::invalid_argument);
  cfg.iterations = 5;
  cfg.u_clip = 0.0;
  EXPECT_THROW(program_gdp(core, w, cfg, plan), std::invalid_argument);
}

TEST(Gdp, CheckpointCallbackFiresOnSchedule) {
  CrossbarCore core = build_core(4, 4, pcm1(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 101);
  const Eigen::MatrixXd w = random_weights(4, 4, 103, 0.5);
  const ProgrammingPlan plan = build_plan(core, w);
  GdpConfig cfg;
  cfg.iterations = 10;
  cfg.batch_size = 8;
  cfg.checkpoint_every = 5;
  int calls = 0;
  const ProgrammingLog log = program_gdp(core, w, cfg, plan,
                                         [&](CrossbarCore&, int iteration) {
                                           ++calls;
                                           return double(iteration);
                                         });
  EXPECT_EQ(calls, 2);
  ASSERT_EQ(log.records.size(), 10u);
  EXPECT_DOUBLE_EQ(log.records[4].eps_total, 5.0);
  EXPECT_DOUBLE_EQ(log.records[9].eps_total, 10.0);
  EXPECT_TRUE(std::isnan(log.records[0].eps_total));
  EXPECT_EQ(log.records[0].converged_cells, -1);
}

TEST(Gdp, LogClockTracksPulseCost) {
  CrossbarCore core = build_core(4, 4, pcm1(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 107);
  core.t_prog_step = 0.1;
  const Eigen::MatrixXd w = random_weights(4, 4, 109, 0.5);
  const ProgrammingPlan plan = build_plan(core, w);
  GdpConfig cfg;
  cfg.iterations = 7;
  cfg.batch_size = 4;
  cfg.init = GdpInit::kNone;
  const ProgrammingLog log = program_gdp(core, w, cfg, plan);
  ASSERT_EQ(log.records.size(), 7u);
  for (int t = 0; t < 7; ++t)
    EXPECT_NEAR(log.records[t].clock_s, 0.1 * (t + 1), 1e-12);
}

// Programming accuracy on realistic noise: gdp lands weights tighter than
// what the coarse ADC read can certify, the effect the engine exists for.
TEST(Gdp, BeatsReadQuantizationOnNoisyCore) {
  CrossbarCore core = build_core(16, 16, pcm1(), AdcParams{}, InputEncoding{},
                                 CellMode::kSingleDevice, 113);
  const Eigen::MatrixXd w = random_weights(16, 16, 127, 0.8);
  const ProgrammingPlan plan = build_plan(core, w);
  GdpConfig cfg;
  cfg.iterations = 300;
  cfg.batch_size = 256;
  program_gdp(core, w, cfg, plan);
  const double rms_err =
      std::sqrt((true_weights(core) - w).array().square().mean());
  // One ADC LSB in weight units is the read floor; GDP should land well under.
  EXPECT_LT(rms_err, lsb_weight(core));
}

}  // namespace
}  // namespace aimc
