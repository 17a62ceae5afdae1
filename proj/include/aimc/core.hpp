/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "aimc/device.hpp"
#include "aimc/plan.hpp"
#include "aimc/rng.hpp"

/**
 * Crossbar core: an r x c grid of four-device unit cells behind a shared
 * input encoder and per-column ADC.
 *
 * Signal path of one matrix-vector multiply, per column j and batch item b:
 *
 *   1. quantize inputs to n_in_bits (mid-tread over [-1, 1]);
 *   2. accumulate s = sum_i x_i * (g+(i,j) - g-(i,j)) with per-device
 *      multiplicative read noise at the current clock;
 *   3. compress s' = s * (1 - beta_nl * (s / i_max)^2);
 *   4. clip to [-i_max, i_max];
 *   5. quantize to n_bits (mid-tread);
 *   6. divide by weight_scale to return to the weight domain.
 *
 * The cubic compression stands in for the lumped ADC-path nonlinearity. It
 * is monotone only up to |s| = i_max / sqrt(3 * beta_nl); the clip in step 4
 * keeps the model sane beyond that, but configurations driving columns that
 * far past full scale are outside the model's intended regime.
 *
 * Read noise is drawn in aggregated form: the sum of the per-device
 * multiplicative noise terms in step 2 is Gaussian with variance
 * sigma_read_rel^2 * sum_i x_i^2 * sum_slots g(slot,i,j)^2, so one keyed
 * draw per (column, batch item) reproduces the per-device-draw distribution
 * exactly (device clipping at zero is immaterial at percent-level noise)
 * while staying independent of accumulation order and worker count.
 *
 * Weight convention: normalized weights in [-1, 1] map to differential
 * conductance via weight_scale [uS per unit weight]. Single-device mode
 * scales by the mean SET cap; two-device mode has twice the conductance
 * headroom per polarity and scales by twice the mean SET cap, which also
 * doubles the column currents the ADC must absorb.
 */

namespace aimc {

struct AdcParams {
  int n_bits = 8;          // ADC resolution
  double i_max = 320.0;    // full-scale accumulated column signal [uS * input units]
  double beta_nl = 0.005;  // cubic compression coefficient
};

struct InputEncoding {
  int n_in_bits = 8;  // input quantization over [-1, 1]
};

inline void validate(const AdcParams& p) {
  if (p.n_bits < 4 || p.n_bits > 16)
    throw std::invalid_argument("AdcParams: n_bits must be in [4, 16]");
  if (!(p.i_max > 0.0)) throw std::invalid_argument("AdcParams: i_max must be > 0");
  if (!(p.beta_nl >= 0.0 && p.beta_nl < 0.5))
    throw std::invalid_argument("AdcParams: beta_nl must be in [0, 0.5)");
}

inline void validate(const InputEncoding& e) {
  if (e.n_in_bits < 1 || e.n_in_bits > 12)
    throw std::invalid_argument("InputEncoding: n_in_bits must be in [1, 12]");
}

enum class CellMode { kSingleDevice, kTwoDevice };

inline const char* to_string(CellMode m) {
  return m == CellMode::kSingleDevice ? "single-device" : "two-device";
}

inline CellMode cell_mode_from_string(const std::string& s) {
  if (s == "single-device") return CellMode::kSingleDevice;
  if (s == "two-device") return CellMode::kTwoDevice;
  throw std::invalid_argument("unknown cell mode '" + s +
                              "' (expected single-device or two-device)");
}

// Device slot indices within a unit cell.
inline constexpr int kPlusA = 0;
inline constexpr int kPlusB = 1;
inline constexpr int kMinusA = 2;
inline constexpr int kMinusB = 3;

/// One device slot across the whole array (structure-of-arrays layout).
struct DeviceGrid {
  Eigen::ArrayXXd g_prog;
  Eigen::ArrayXXd t_prog;
  Eigen::ArrayXXd nu;
  Eigen::ArrayXXd set_cap;
};

struct CrossbarCore {
  int rows = 0;
  int cols = 0;
  CellMode mode = CellMode::kSingleDevice;
  DeviceParams device;
  AdcParams adc;
  InputEncoding encoding;
  double clock = 0.0;         // simulation time [s], monotone
  double weight_scale = 0.0;  // uS per unit weight
  double t_prog_step = 1.0;   // clock cost of one full-array pulse application [s]
  std::uint64_t seed = 0;
  std::uint64_t mvm_counter = 0;        // MVM invocations (keys read noise)
  std::uint64_t pulse_counter = 0;      // pulse-matrix applications (keys write noise)
  std::uint64_t unit_read_counter = 0;  // cell reads taken through the ADC path

  // Test instrumentation: not reachable from configs, not serialized.
  bool bypass_input_quant = false;
  bool bypass_adc = false;  // skip compression, clipping and output quantization

  std::array<DeviceGrid, 4> slots;  // kPlusA, kPlusB, kMinusA, kMinusB

  int slots_per_polarity() const { return mode == CellMode::kTwoDevice ? 2 : 1; }
};

/// Inputs and decoded outputs of one batched MVM, for logging.
struct MvmTrace {
  Eigen::MatrixXd inputs;   // r x B
  Eigen::MatrixXd outputs;  // c x B
  double timestamp = 0.0;
};

inline int input_levels(const InputEncoding& e) {
  return std::max(1, (1 << (e.n_in_bits - 1)) - 1);
}

inline int adc_levels(const AdcParams& p) {
  return std::max(1, (1 << (p.n_bits - 1)) - 1);
}

/// Decoded weight-domain step between adjacent ADC codes.
inline double lsb_weight(const CrossbarCore& core) {
  return core.adc.i_max / (adc_levels(core.adc) * core.weight_scale);
}

inline double default_weight_scale(const DeviceParams& d, CellMode mode) {
  return mode == CellMode::kTwoDevice ? 2.0 * d.set_cap_mean : d.set_cap_mean;
}

inline DeviceState device_state_at(const CrossbarCore& core, int slot, int i, int j) {
  const DeviceGrid& g = core.slots[slot];
  return DeviceState{g.g_prog(i, j), g.t_prog(i, j), g.nu(i, j), g.set_cap(i, j)};
}

inline void set_device_state(CrossbarCore& core, int slot, int i, int j,
                             const DeviceState& st) {
  DeviceGrid& g = core.slots[slot];
  g.g_prog(i, j) = st.g_prog;
  g.t_prog(i, j) = st.t_prog;
  g.nu(i, j) = st.nu;
  g.set_cap(i, j) = st.set_cap;
}

/**
 * Builds a core with all four device populations sampled from per-device
 * derived streams, fully RESET, clock at zero. The same seed always yields
 * the same population. weight_scale follows the mode (see file comment).
 */
inline CrossbarCore build_core(int rows, int cols, const DeviceParams& device,
                               const AdcParams& adc, const InputEncoding& encoding,
                               CellMode mode, std::uint64_t seed) {
  validate(device);
  validate(adc);
  validate(encoding);
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("build_core: rows and cols must be >= 1");

  CrossbarCore core;
  core.rows = rows;
  core.cols = cols;
  core.mode = mode;
  core.device = device;
  core.adc = adc;
  core.encoding = encoding;
  core.seed = seed;
  core.weight_scale = default_weight_scale(device, mode);

  const RngStream root(seed);
  for (int s = 0; s < 4; ++s) {
    DeviceGrid& grid = core.slots[s];
    grid.g_prog = Eigen::ArrayXXd::Zero(rows, cols);
    grid.t_prog = Eigen::ArrayXXd::Zero(rows, cols);
    grid.nu = Eigen::ArrayXXd::Zero(rows, cols);
    grid.set_cap = Eigen::ArrayXXd::Zero(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        RngStream r = root.derive({hash_label("device"), static_cast<std::uint64_t>(s),
                                   static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(j)});
        set_device_state(core, s, i, j, sample_device(device, r));
      }
    }
  }
  return core;
}

/// Noiseless drifted conductance of one slot across the array at time t.
/// (t - t_prog + t0)/t0 >= 1 whenever t >= every t_prog, so pow() is safe.
inline Eigen::ArrayXXd slot_conductance_at(const CrossbarCore& core, int slot, double t) {
  const DeviceGrid& g = core.slots[slot];
  return g.g_prog * ((t - g.t_prog + core.device.t0) / core.device.t0).pow(-g.nu);
}

inline Eigen::ArrayXXd differential_conductance_at(const CrossbarCore& core, double t) {
  if (!(t >= core.clock))
    throw std::invalid_argument("differential_conductance_at: t precedes the core clock");
  Eigen::ArrayXXd d =
      slot_conductance_at(core, kPlusA, t) - slot_conductance_at(core, kMinusA, t);
  if (core.mode == CellMode::kTwoDevice)
    d += slot_conductance_at(core, kPlusB, t) - slot_conductance_at(core, kMinusB, t);
  return d;
}

/// Noiseless effective weights at time t (>= clock), weight domain.
inline Eigen::MatrixXd true_weights_at(const CrossbarCore& core, double t) {
  return (differential_conductance_at(core, t) / core.weight_scale).matrix();
}

inline Eigen::MatrixXd true_weights(const CrossbarCore& core) {
  return true_weights_at(core, core.clock);
}

namespace detail {

/// Sum of squared participating conductances per cell; the per-unit-input
/// read-noise variance of cell (i,j) is sigma_read_rel^2 times this.
inline Eigen::ArrayXXd squared_conductance_sum(const CrossbarCore& core) {
  Eigen::ArrayXXd q = slot_conductance_at(core, kPlusA, core.clock).square() +
                      slot_conductance_at(core, kMinusA, core.clock).square();
  if (core.mode == CellMode::kTwoDevice)
    q += slot_conductance_at(core, kPlusB, core.clock).square() +
         slot_conductance_at(core, kMinusB, core.clock).square();
  return q;
}

}  // namespace detail

/**
 * Batched MVM through the full signal path. Devices and clock are untouched;
 * the invocation counter advances so repeated calls see fresh read noise.
 * Bit-identical for a given (state, clock, seed, input) regardless of how the
 * caller schedules work, since every noise draw is keyed by
 * (seed, clock, invocation, column, batch item).
 */
inline Eigen::MatrixXd mvm_batch(CrossbarCore& core, const Eigen::MatrixXd& x) {
  if (x.rows() != core.rows)
    throw std::invalid_argument("mvm_batch: input rows do not match core rows");
  if (x.cols() < 1) throw std::invalid_argument("mvm_batch: empty batch");
  if (!x.allFinite()) throw std::invalid_argument("mvm_batch: non-finite input");
  if ((x.array().abs() > 1.0 + 1e-9).any())
    throw std::invalid_argument("mvm_batch: inputs must lie in [-1, 1]");

  const int batch = static_cast<int>(x.cols());
  Eigen::MatrixXd xq;
  if (core.bypass_input_quant) {
    xq = x.array().max(-1.0).min(1.0).matrix();
  } else {
    const double s = input_levels(core.encoding);
    xq = ((x.array().max(-1.0).min(1.0) * s).round() / s).matrix();
  }

  Eigen::MatrixXd sig =
      differential_conductance_at(core, core.clock).matrix().transpose() * xq;

  const std::uint64_t invocation = core.mvm_counter++;
  if (core.device.sigma_read_rel > 0.0) {
    const Eigen::MatrixXd var =
        detail::squared_conductance_sum(core).matrix().transpose() *
        xq.array().square().matrix();
    const RngStream root(core.seed);
    const std::uint64_t clock_bits = std::bit_cast<std::uint64_t>(core.clock);
    const std::uint64_t tag = hash_label("mvm");
    for (int j = 0; j < core.cols; ++j) {
      for (int b = 0; b < batch; ++b) {
        const std::uint64_t key =
            root.derive({tag, clock_bits, invocation, static_cast<std::uint64_t>(j),
                         static_cast<std::uint64_t>(b)})
                .key();
        sig(j, b) += core.device.sigma_read_rel * std::sqrt(var(j, b)) *
                     gaussian_from_key(key);
      }
    }
  }

  if (core.bypass_adc) return sig / core.weight_scale;

  const double i_max = core.adc.i_max;
  const double beta = core.adc.beta_nl;
  Eigen::ArrayXXd s = sig.array();
  if (beta != 0.0) s = s * (1.0 - beta * (s / i_max).square());
  s = s.max(-i_max).min(i_max);
  const double levels = adc_levels(core.adc);
  const double decode = i_max / levels / core.weight_scale;
  return s.unaryExpr([&](double v) {
            return static_cast<double>(std::llround(v / i_max * levels)) * decode;
          })
      .matrix();
}

/**
 * The on-chip read of one cell: a one-hot MVM, returning entry j. This is the
 * only weight readout the hardware offers, so it carries the ADC's coarse
 * quantization at single-device signal levels.
 */
inline double read_unit_cell_adc(CrossbarCore& core, int i, int j) {
  if (i < 0 || i >= core.rows || j < 0 || j >= core.cols)
    throw std::out_of_range("read_unit_cell_adc: cell index out of range");
  core.unit_read_counter += 1;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(core.rows, 1);
  x(i, 0) = 1.0;
  return mvm_batch(core, x)(j, 0);
}

/// All r*c cell reads as one identity-input batch (same path as above).
inline Eigen::MatrixXd read_all_cells_adc(CrossbarCore& core) {
  core.unit_read_counter +=
      static_cast<std::uint64_t>(core.rows) * static_cast<std::uint64_t>(core.cols);
  return mvm_batch(core, Eigen::MatrixXd::Identity(core.rows, core.rows)).transpose();
}

/**
 * Applies one full-array pulse update and advances the clock by t_prog_step.
 *
 * Routing per cell, one pulse per step: with bipolar_correction (the default)
 * a requested weight change first drains the opposing polarity's programmable
 * device with a RESET-direction pulse while it holds charge, and only then
 * fills the primary device with a SET-direction pulse. Draining first keeps
 * charge from accumulating on both polarities of an oscillating cell, which
 * would otherwise inflate read noise and erode the SET gain headroom, and it
 * keeps the magnitude of a step bounded by one device's response in each
 * direction. Without bipolar_correction the amplitude always goes to the
 * matching polarity's device as a SET pulse. Zero amplitude sends a null
 * pulse to the positive device, which re-anchors its drift reference without
 * changing conductance.
 *
 * Cells where mask is false are skipped entirely (no pulses, no re-anchor).
 */
inline void apply_pulse_matrix(
    CrossbarCore& core, const Eigen::MatrixXd& u, const ProgrammingPlan& plan,
    bool bipolar_correction = true,
    const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>* mask = nullptr) {
  if (u.rows() != core.rows || u.cols() != core.cols)
    throw std::invalid_argument("apply_pulse_matrix: amplitude shape mismatch");
  if (plan.rows != core.rows || plan.cols != core.cols)
    throw std::invalid_argument("apply_pulse_matrix: plan shape mismatch");
  if (mask && (mask->rows() != core.rows || mask->cols() != core.cols))
    throw std::invalid_argument("apply_pulse_matrix: mask shape mismatch");
  if (!u.allFinite())
    throw std::invalid_argument("apply_pulse_matrix: non-finite amplitude");

  const std::uint64_t invocation = core.pulse_counter++;
  const RngStream root(core.seed);
  const std::uint64_t tag = hash_label("pulse");
  const bool redraw = core.device.redraw_nu_on_program;

  auto pulse_device = [&](int slot, int i, int j, double amp) {
    RngStream r = root.derive({tag, invocation, static_cast<std::uint64_t>(slot),
                               static_cast<std::uint64_t>(i),
                               static_cast<std::uint64_t>(j)});
    DeviceState st = device_state_at(core, slot, i, j);
    set_device_state(core, slot, i, j,
                     apply_pulse(st, amp, core.clock, r, core.device, redraw));
  };

  for (int i = 0; i < core.rows; ++i) {
    for (int j = 0; j < core.cols; ++j) {
      if (mask && !(*mask)(i, j)) continue;
      const CellPlan& pc = plan.at(i, j);
      const int pos_slot = kPlusA + pc.pos.prog_slot;
      const int neg_slot = kMinusA + pc.neg.prog_slot;
      const double v = u(i, j);
      if (v > 0.0) {
        if (bipolar_correction && core.slots[neg_slot].g_prog(i, j) > 0.0)
          pulse_device(neg_slot, i, j, -v);
        else
          pulse_device(pos_slot, i, j, v);
      } else if (v < 0.0) {
        if (bipolar_correction && core.slots[pos_slot].g_prog(i, j) > 0.0)
          pulse_device(pos_slot, i, j, v);
        else
          pulse_device(neg_slot, i, j, -v);
      } else {
        pulse_device(pos_slot, i, j, 0.0);
      }
    }
  }
  core.clock += core.t_prog_step;
}

/**
 * Executes the plan's one-time fixed actions (companion-slot RESET or SET)
 * as ordinary pulses. A SET uses amplitude set_cap/alpha, which lands on the
 * cap exactly up to programming noise; a RESET overdrives at twice that so
 * noise cannot leave residual conductance. Advances the clock by t_prog_step
 * if anything was pulsed.
 */
inline void apply_fixed_actions(CrossbarCore& core, const ProgrammingPlan& plan) {
  if (plan.rows != core.rows || plan.cols != core.cols)
    throw std::invalid_argument("apply_fixed_actions: plan shape mismatch");

  const std::uint64_t invocation = core.pulse_counter++;
  const RngStream root(core.seed);
  const std::uint64_t tag = hash_label("pulse");
  bool any = false;

  auto run = [&](const PolarityPlan& pp, int slot_base, int i, int j) {
    if (pp.fixed_action == FixedAction::kNone) return;
    const int slot = slot_base + (1 - pp.prog_slot);
    DeviceState st = device_state_at(core, slot, i, j);
    const double amp = pp.fixed_action == FixedAction::kSet
                           ? st.set_cap / core.device.alpha
                           : -2.0 * st.set_cap / core.device.alpha;
    RngStream r = root.derive({tag, invocation, static_cast<std::uint64_t>(slot),
                               static_cast<std::uint64_t>(i),
                               static_cast<std::uint64_t>(j)});
    set_device_state(
        core, slot, i, j,
        apply_pulse(st, amp, core.clock, r, core.device, core.device.redraw_nu_on_program));
    any = true;
  };

  for (int i = 0; i < core.rows; ++i) {
    for (int j = 0; j < core.cols; ++j) {
      const CellPlan& pc = plan.at(i, j);
      run(pc.pos, kPlusA, i, j);
      run(pc.neg, kMinusA, i, j);
    }
  }
  if (any) core.clock += core.t_prog_step;
}

inline void advance_clock(CrossbarCore& core, double dt) {
  if (!std::isfinite(dt) || dt < 0.0)
    throw std::invalid_argument("advance_clock: dt must be finite and >= 0");
  core.clock += dt;
}

/**
 * Test instrumentation: writes conductances directly so that true_weights
 * equals w wherever the caps allow it, bypassing the pulse path entirely.
 * Per polarity, slot a takes the target up to its cap and (in two-device
 * mode) slot b the remainder. All drift references re-anchor to the clock.
 */
inline void inject_weights(CrossbarCore& core, const Eigen::MatrixXd& w) {
  if (w.rows() != core.rows || w.cols() != core.cols)
    throw std::invalid_argument("inject_weights: shape mismatch");
  if (!w.allFinite()) throw std::invalid_argument("inject_weights: non-finite weights");

  const bool two = core.mode == CellMode::kTwoDevice;
  for (int i = 0; i < core.rows; ++i) {
    for (int j = 0; j < core.cols; ++j) {
      const double target = w(i, j) * core.weight_scale;
      const double want_pos = std::max(target, 0.0);
      const double want_neg = std::max(-target, 0.0);
      auto fill = [&](int slot_a, int slot_b, double amount) {
        DeviceGrid& a = core.slots[slot_a];
        const double ga = std::min(amount, a.set_cap(i, j));
        a.g_prog(i, j) = ga;
        a.t_prog(i, j) = core.clock;
        DeviceGrid& b = core.slots[slot_b];
        b.g_prog(i, j) = two ? std::min(amount - ga, b.set_cap(i, j)) : 0.0;
        b.t_prog(i, j) = core.clock;
      };
      fill(kPlusA, kPlusB, want_pos);
      fill(kMinusA, kMinusB, want_neg);
    }
  }
}

}  // namespace aimc
