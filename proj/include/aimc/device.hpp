/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "aimc/rng.hpp"

/**
 * Phase-change memory device model.
 *
 * A device is described by the conductance it was last programmed to and the
 * time that programming happened. Between programming events the conductance
 * decays with the usual power law,
 *
 *     g(t) = g_prog * ((t - t_prog + t0) / t0)^(-nu),
 *
 * where nu is frozen per device at array build time (drift variability is a
 * device property, not a per-read effect). Reads multiply by (1 + read noise).
 *
 * Programming is modeled at the pulse level: a signed amplitude moves the
 * conductance by alpha * amplitude, with the SET direction (amplitude > 0)
 * damped by (1 - g/set_cap) so devices saturate smoothly at their individual
 * cap, and the RESET direction (amplitude < 0) undamped. Programming noise
 * grows with the size of the induced change, saturating at sigma_prog for
 * amplitudes at or above sigma_prog_ref_amp. Conductance is clamped to
 * [0, set_cap] after every pulse.
 *
 * All conductances are in microsiemens, times in seconds.
 */

namespace aimc {

struct DeviceParams {
  double g_max = 25.0;          // hard upper bound on any conductance [uS]
  double alpha = 2.0;           // conductance change per unit pulse amplitude [uS]
  double sigma_prog = 0.4;      // programming noise at full reference amplitude [uS]
  double sigma_prog_ref_amp = 1.0;  // amplitude at which programming noise saturates
  double sigma_read_rel = 0.03;     // relative (multiplicative) read noise
  double nu_mean = 0.05;        // drift exponent population mean
  double nu_std = 0.02;         // drift exponent population spread
  double t0 = 20.0;             // drift reference time [s]
  double set_cap_mean = 22.0;   // per-device SET saturation level, mean [uS]
  double set_cap_std = 2.0;     // per-device SET saturation level, spread [uS]
  bool redraw_nu_on_program = false;  // re-sample nu at every programming event
};

struct DeviceState {
  double g_prog = 0.0;   // conductance at the last programming event [uS]
  double t_prog = 0.0;   // time of the last programming event [s]
  double nu = 0.0;       // drift exponent of this device
  double set_cap = 0.0;  // SET saturation level of this device [uS]
};

inline void validate(const DeviceParams& p) {
  auto bad = [](const std::string& what) {
    throw std::invalid_argument("DeviceParams: " + what);
  };
  if (!(p.g_max > 0.0)) bad("g_max must be > 0");
  if (!(p.alpha > 0.0)) bad("alpha must be > 0");
  if (!(p.sigma_prog >= 0.0)) bad("sigma_prog must be >= 0");
  if (!(p.sigma_prog_ref_amp > 0.0)) bad("sigma_prog_ref_amp must be > 0");
  if (!(p.sigma_read_rel >= 0.0)) bad("sigma_read_rel must be >= 0");
  if (!(p.nu_mean >= 0.0)) bad("nu_mean must be >= 0");
  if (!(p.nu_std >= 0.0)) bad("nu_std must be >= 0");
  if (!(p.t0 > 0.0)) bad("t0 must be > 0");
  if (!(p.set_cap_mean > 0.0 && p.set_cap_mean <= p.g_max))
    bad("set_cap_mean must be in (0, g_max]");
  if (!(p.set_cap_std >= 0.0)) bad("set_cap_std must be >= 0");
}

/// Calibrated high-conductance device family (PCM-I in the reports).
inline DeviceParams pcm1() { return DeviceParams{}; }

/// Calibrated low-conductance family (PCM-II): 5x smaller conductance window
/// and proportionally smaller pulse response and programming noise.
inline DeviceParams pcm2() {
  DeviceParams p;
  p.g_max = 5.0;
  p.alpha = 0.4;
  p.sigma_prog = 0.08;
  p.set_cap_mean = 4.4;
  p.set_cap_std = 0.4;
  return p;
}

inline DeviceParams device_preset(const std::string& name) {
  if (name == "pcm1") return pcm1();
  if (name == "pcm2") return pcm2();
  throw std::invalid_argument("unknown device preset '" + name +
                              "' (expected pcm1 or pcm2)");
}

/// Normal draw rejected until non-negative (true truncation, not clamping).
inline double truncated_normal_nonneg(RngStream& rng, double mean, double stddev) {
  if (stddev == 0.0) return mean;
  for (;;) {
    const double v = rng.normal(mean, stddev);
    if (v >= 0.0) return v;
  }
}

/// Draws a fresh, fully RESET device from the population described by params.
inline DeviceState sample_device(const DeviceParams& params, RngStream& rng) {
  DeviceState s;
  s.g_prog = 0.0;
  s.t_prog = 0.0;
  s.nu = truncated_normal_nonneg(rng, params.nu_mean, params.nu_std);
  s.set_cap =
      std::clamp(rng.normal(params.set_cap_mean, params.set_cap_std), 1e-9, params.g_max);
  return s;
}

/// Drifted conductance at time t (noiseless). t must not precede the last
/// programming event.
inline double conductance_at(const DeviceState& s, double t, const DeviceParams& params) {
  if (!(t >= s.t_prog))
    throw std::invalid_argument("conductance_at: t precedes the last programming event");
  if (s.g_prog == 0.0) return 0.0;
  if (s.nu == 0.0) return s.g_prog;
  return s.g_prog * std::pow((t - s.t_prog + params.t0) / params.t0, -s.nu);
}

/// Programming-noise scale for a pulse of the given amplitude.
inline double write_noise_sigma(const DeviceParams& params, double amplitude) {
  if (params.sigma_prog == 0.0 || amplitude == 0.0) return 0.0;
  const double rel = std::min(1.0, std::abs(amplitude) / params.sigma_prog_ref_amp);
  return params.sigma_prog * std::sqrt(rel);
}

/**
 * Applies one programming pulse at time `now`. The update acts on the drifted
 * conductance, and the pulse re-anchors the drift reference (t_prog = now),
 * so a zero-amplitude noiseless pulse folds accumulated drift into g_prog
 * without changing the observable conductance.
 */
inline DeviceState apply_pulse(const DeviceState& s, double amplitude, double now,
                               RngStream& rng, const DeviceParams& params,
                               bool redraw_nu = false) {
  if (!std::isfinite(amplitude))
    throw std::invalid_argument("apply_pulse: non-finite amplitude");
  const double g_now = conductance_at(s, now, params);
  const double gain = amplitude > 0.0 ? (1.0 - g_now / s.set_cap) : 1.0;
  double g_new = g_now + params.alpha * amplitude * gain;
  const double sigma = write_noise_sigma(params, amplitude);
  if (sigma > 0.0) g_new += sigma * rng.normal();
  DeviceState out = s;
  out.g_prog = std::clamp(g_new, 0.0, s.set_cap);
  out.t_prog = now;
  if (redraw_nu) out.nu = truncated_normal_nonneg(rng, params.nu_mean, params.nu_std);
  return out;
}

/// One noisy read at time t: multiplicative Gaussian noise, clipped at zero.
inline double noisy_read(const DeviceState& s, double t, RngStream& rng,
                         const DeviceParams& params) {
  const double g = conductance_at(s, t, params);
  if (g == 0.0) return 0.0;
  if (params.sigma_read_rel == 0.0) return g;
  return std::max(0.0, g * (1.0 + params.sigma_read_rel * rng.normal()));
}

}  // namespace aimc
