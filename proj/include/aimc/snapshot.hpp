/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "aimc/core.hpp"
#include "aimc/version.hpp"

/**
 * Core snapshots: a small binary format for experiment checkpointing.
 *
 * Layout (all multi-byte values little-endian):
 *
 *   bytes 0..7   magic "AIMCSNAP"
 *   u32          format version (currently 1)
 *   u32 u32      rows, cols
 *   u8           cell mode (0 single-device, 1 two-device)
 *   i32 f64 f64  ADC: n_bits, i_max, beta_nl
 *   i32          input encoding: n_in_bits
 *   f64 f64 f64  clock, weight_scale, t_prog_step
 *   u64 x4       seed, mvm_counter, pulse_counter, unit_read_counter
 *   f64 x10 u8   device params (g_max, alpha, sigma_prog, sigma_prog_ref_amp,
 *                sigma_read_rel, nu_mean, nu_std, t0, set_cap_mean,
 *                set_cap_std), redraw_nu_on_program
 *   then r*c cell records, row-major; each cell holds four device records in
 *   slot order (plus_a, plus_b, minus_a, minus_b), each record being
 *   f64 g_prog, f64 t_prog, f64 nu, f64 set_cap.
 *
 * The test-only bypass switches are deliberately not stored: a snapshot
 * captures simulated hardware state, not instrumentation.
 */

namespace aimc {

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

namespace detail {

inline constexpr char kSnapshotMagic[8] = {'A', 'I', 'M', 'C', 'S', 'N', 'A', 'P'};

template <class T>
void put(std::ostream& os, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(buf, sizeof(T));
}

template <class T>
T get(std::istream& is) {
  char buf[sizeof(T)];
  is.read(buf, sizeof(T));
  if (!is) throw std::runtime_error("snapshot: truncated input");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace detail

inline void write_snapshot(const CrossbarCore& core, std::ostream& os) {
  using detail::put;
  os.write(detail::kSnapshotMagic, sizeof(detail::kSnapshotMagic));
  put<std::uint32_t>(os, kSnapshotFormatVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(core.rows));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(core.cols));
  put<std::uint8_t>(os, core.mode == CellMode::kTwoDevice ? 1 : 0);
  put<std::int32_t>(os, core.adc.n_bits);
  put<double>(os, core.adc.i_max);
  put<double>(os, core.adc.beta_nl);
  put<std::int32_t>(os, core.encoding.n_in_bits);
  put<double>(os, core.clock);
  put<double>(os, core.weight_scale);
  put<double>(os, core.t_prog_step);
  put<std::uint64_t>(os, core.seed);
  put<std::uint64_t>(os, core.mvm_counter);
  put<std::uint64_t>(os, core.pulse_counter);
  put<std::uint64_t>(os, core.unit_read_counter);
  const DeviceParams& d = core.device;
  for (double v : {d.g_max, d.alpha, d.sigma_prog, d.sigma_prog_ref_amp,
                   d.sigma_read_rel, d.nu_mean, d.nu_std, d.t0, d.set_cap_mean,
                   d.set_cap_std})
    put<double>(os, v);
  put<std::uint8_t>(os, d.redraw_nu_on_program ? 1 : 0);
  for (int i = 0; i < core.rows; ++i) {
    for (int j = 0; j < core.cols; ++j) {
      for (int s = 0; s < 4; ++s) {
        const DeviceGrid& g = core.slots[s];
        put<double>(os, g.g_prog(i, j));
        put<double>(os, g.t_prog(i, j));
        put<double>(os, g.nu(i, j));
        put<double>(os, g.set_cap(i, j));
      }
    }
  }
  if (!os) throw std::runtime_error("snapshot: write failed");
}

inline CrossbarCore read_snapshot(std::istream& is) {
  using detail::get;
  char magic[sizeof(detail::kSnapshotMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, detail::kSnapshotMagic, sizeof(magic)) != 0)
    throw std::runtime_error("snapshot: bad magic (not a core snapshot)");
  const auto version = get<std::uint32_t>(is);
  if (version != kSnapshotFormatVersion)
    throw std::runtime_error("snapshot: unsupported format version " +
                             std::to_string(version));

  CrossbarCore core;
  core.rows = static_cast<int>(get<std::uint32_t>(is));
  core.cols = static_cast<int>(get<std::uint32_t>(is));
  core.mode = get<std::uint8_t>(is) ? CellMode::kTwoDevice : CellMode::kSingleDevice;
  core.adc.n_bits = get<std::int32_t>(is);
  core.adc.i_max = get<double>(is);
  core.adc.beta_nl = get<double>(is);
  core.encoding.n_in_bits = get<std::int32_t>(is);
  core.clock = get<double>(is);
  core.weight_scale = get<double>(is);
  core.t_prog_step = get<double>(is);
  core.seed = get<std::uint64_t>(is);
  core.mvm_counter = get<std::uint64_t>(is);
  core.pulse_counter = get<std::uint64_t>(is);
  core.unit_read_counter = get<std::uint64_t>(is);
  DeviceParams& d = core.device;
  for (double* v : {&d.g_max, &d.alpha, &d.sigma_prog, &d.sigma_prog_ref_amp,
                    &d.sigma_read_rel, &d.nu_mean, &d.nu_std, &d.t0, &d.set_cap_mean,
                    &d.set_cap_std})
    *v = get<double>(is);
  d.redraw_nu_on_program = get<std::uint8_t>(is) != 0;

  if (core.rows < 1 || core.cols < 1)
    throw std::runtime_error("snapshot: invalid dimensions");
  validate(core.device);
  validate(core.adc);
  validate(core.encoding);

  for (int s = 0; s < 4; ++s) {
    DeviceGrid& g = core.slots[s];
    g.g_prog.resize(core.rows, core.cols);
    g.t_prog.resize(core.rows, core.cols);
    g.nu.resize(core.rows, core.cols);
    g.set_cap.resize(core.rows, core.cols);
  }
  for (int i = 0; i < core.rows; ++i) {
    for (int j = 0; j < core.cols; ++j) {
      for (int s = 0; s < 4; ++s) {
        DeviceGrid& g = core.slots[s];
        g.g_prog(i, j) = get<double>(is);
        g.t_prog(i, j) = get<double>(is);
        g.nu(i, j) = get<double>(is);
        g.set_cap(i, j) = get<double>(is);
      }
    }
  }
  return core;
}

inline void save_snapshot(const CrossbarCore& core, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("snapshot: cannot open '" + path + "' for writing");
  write_snapshot(core, os);
}

inline CrossbarCore load_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("snapshot: cannot open '" + path + "'");
  return read_snapshot(is);
}

}  // namespace aimc
