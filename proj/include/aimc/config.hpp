/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "aimc/characterization.hpp"
#include "aimc/core.hpp"
#include "aimc/device.hpp"
#include "aimc/experiments.hpp"
#include "aimc/input_dist.hpp"
#include "aimc/programming.hpp"
#include "aimc/version.hpp"

/**
 * JSON run configuration for the CLI. The schema is strict: unknown keys are
 * rejected so typos cannot silently fall back to defaults, and every numeric
 * default in the library is reachable from here (device physics, converter
 * settings, engine knobs, probe counts). A profile picks the base values and
 * the config file overrides individual fields on top of it:
 *
 *   desk   64 x 64 cores, 8-bit ADC with i_max 320
 *   paper  256 x 256 cores, 8-bit ADC with i_max 640
 *
 * Fields accepting "auto" ("iterative.margin", "iterative.kappa", "gdp.eta")
 * resolve against the built core as documented in programming.hpp.
 */

namespace aimc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CoreConfig {
  int rows = 64;
  int cols = 64;
  CellMode mode = CellMode::kSingleDevice;
  DeviceParams device = pcm1();
  std::string device_preset_name = "pcm1";
  AdcParams adc;
  InputEncoding encoding;
  double t_prog_step = 1.0;
  double weight_scale_override = kAutoValue;  // negative keeps the mode rule
};

struct ProgramSection {
  std::string method = "gdp";    // "gdp" or "iterative"
  std::string target = "uniform";  // "uniform" or "zeros"
  bool save_snapshot = true;
};

struct CharacterizeSection {
  std::string snapshot;          // optional: characterize a saved core
  std::string target = "uniform";
};

struct ScenarioSection {
  std::string name;
  std::vector<double> sweep;     // empty keeps the scenario default
};

struct InferSection {
  std::string mlp;
  std::string dataset;
  std::vector<std::string> methods = {"iterative", "gdp"};
};

struct RunConfig {
  std::string profile = "desk";
  CoreConfig core;
  IterativeConfig iterative;
  GdpConfig gdp;
  CharacterizationConfig characterization;
  std::vector<std::uint64_t> seeds = {1};
  int threads = 1;
  ProgramSection program;
  CharacterizeSection characterize;
  ScenarioSection scenario;
  InferSection infer;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& file, const std::string& what) {
  throw ConfigError("config '" + file + "': " + what);
}

inline void check_keys(const nlohmann::json& obj, const std::string& file,
                       const std::string& prefix,
                       std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      config_fail(file, "unknown key '" + (prefix.empty() ? "" : prefix + ".") +
                            item.key() + "'");
  }
}

inline double get_double(const nlohmann::json& obj, const char* key, const std::string& file,
                         const std::string& prefix, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) config_fail(file, "field '" + prefix + "." + key + "' must be a number");
  return v.get<double>();
}

inline int get_int(const nlohmann::json& obj, const char* key, const std::string& file,
                   const std::string& prefix, int fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer())
    config_fail(file, "field '" + prefix + "." + key + "' must be an integer");
  return v.get<int>();
}

inline bool get_bool(const nlohmann::json& obj, const char* key, const std::string& file,
                     const std::string& prefix, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean())
    config_fail(file, "field '" + prefix + "." + key + "' must be a boolean");
  return v.get<bool>();
}

inline std::string get_string(const nlohmann::json& obj, const char* key,
                              const std::string& file, const std::string& prefix,
                              const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string())
    config_fail(file, "field '" + prefix + "." + key + "' must be a string");
  return v.get<std::string>();
}

/// "auto" or a number; used by margin, kappa, and eta.
inline double get_auto(const nlohmann::json& obj, const char* key, const std::string& file,
                       const std::string& prefix, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() == "auto") return kAutoValue;
    config_fail(file, "field '" + prefix + "." + key + "' must be \"auto\" or a number");
  }
  if (!v.is_number())
    config_fail(file, "field '" + prefix + "." + key + "' must be \"auto\" or a number");
  return v.get<double>();
}

inline InputDist parse_input_dist(const nlohmann::json& obj, const std::string& file,
                                  const std::string& prefix, InputDist fallback) {
  if (!obj.is_object()) config_fail(file, "field '" + prefix + "' must be an object");
  check_keys(obj, file, prefix, {"kind", "sparsity", "stddev"});
  InputDist dist = fallback;
  const std::string kind =
      get_string(obj, "kind", file, prefix, to_string(fallback.kind));
  try {
    dist.kind = input_dist_kind_from_string(kind);
  } catch (const std::invalid_argument& e) {
    config_fail(file, "field '" + prefix + ".kind': " + e.what());
  }
  dist.sparsity = get_double(obj, "sparsity", file, prefix, fallback.sparsity);
  dist.stddev = get_double(obj, "stddev", file, prefix, fallback.stddev);
  try {
    validate(dist);
  } catch (const std::invalid_argument& e) {
    config_fail(file, "field '" + prefix + "': " + e.what());
  }
  return dist;
}

inline void parse_device(const nlohmann::json& v, const std::string& file, CoreConfig& core) {
  if (v.is_string()) {
    try {
      core.device = device_preset(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      config_fail(file, std::string("field 'core.device': ") + e.what());
    }
    core.device_preset_name = v.get<std::string>();
    return;
  }
  if (!v.is_object())
    config_fail(file, "field 'core.device' must be a preset name or an object");
  check_keys(v, file, "core.device",
             {"preset", "g_max", "alpha", "sigma_prog", "sigma_prog_ref_amp",
              "sigma_read_rel", "nu_mean", "nu_std", "t0", "set_cap_mean", "set_cap_std",
              "redraw_nu_on_program"});
  const std::string preset = get_string(v, "preset", file, "core.device", "pcm1");
  DeviceParams d;
  try {
    d = device_preset(preset);
  } catch (const std::invalid_argument& e) {
    config_fail(file, std::string("field 'core.device.preset': ") + e.what());
  }
  const std::string p = "core.device";
  d.g_max = get_double(v, "g_max", file, p, d.g_max);
  d.alpha = get_double(v, "alpha", file, p, d.alpha);
  d.sigma_prog = get_double(v, "sigma_prog", file, p, d.sigma_prog);
  d.sigma_prog_ref_amp = get_double(v, "sigma_prog_ref_amp", file, p, d.sigma_prog_ref_amp);
  d.sigma_read_rel = get_double(v, "sigma_read_rel", file, p, d.sigma_read_rel);
  d.nu_mean = get_double(v, "nu_mean", file, p, d.nu_mean);
  d.nu_std = get_double(v, "nu_std", file, p, d.nu_std);
  d.t0 = get_double(v, "t0", file, p, d.t0);
  d.set_cap_mean = get_double(v, "set_cap_mean", file, p, d.set_cap_mean);
  d.set_cap_std = get_double(v, "set_cap_std", file, p, d.set_cap_std);
  d.redraw_nu_on_program =
      get_bool(v, "redraw_nu_on_program", file, p, d.redraw_nu_on_program);
  core.device = d;
  core.device_preset_name = v.size() > (v.contains("preset") ? 1u : 0u)
                                ? preset + "-custom"
                                : preset;
}

}  // namespace detail

inline void apply_profile(RunConfig& cfg, const std::string& profile,
                          const std::string& file = "<none>") {
  if (profile == "desk") {
    cfg.core.rows = 64;
    cfg.core.cols = 64;
    cfg.core.adc = AdcParams{8, 320.0, 0.005};
    cfg.core.encoding.n_in_bits = 8;
    cfg.core.t_prog_step = 0.1;
  } else if (profile == "paper") {
    cfg.core.rows = 256;
    cfg.core.cols = 256;
    cfg.core.adc = AdcParams{8, 640.0, 0.005};
    cfg.core.encoding.n_in_bits = 8;
    cfg.core.t_prog_step = 0.1;
  } else {
    detail::config_fail(file, "unknown profile '" + profile + "' (desk, paper)");
  }
  cfg.profile = profile;
}

/// Parses and validates a config file. `profile_flag` is the value of the
/// command-line --profile option; empty defers to the file (default "desk").
inline RunConfig load_config(const std::string& path, const std::string& profile_flag = "") {
  std::ifstream is(path);
  if (!is) throw ConfigError("config '" + path + "': cannot open file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  if (!j.is_object()) detail::config_fail(path, "top level must be an object");
  detail::check_keys(j, path, "",
                     {"schema_version", "profile", "core", "iterative", "gdp",
                      "characterization", "seeds", "threads", "program", "characterize",
                      "scenario", "infer"});
  if (!j.contains("schema_version"))
    detail::config_fail(path, "missing required field 'schema_version'");
  if (!j.at("schema_version").is_number_integer() ||
      j.at("schema_version").get<int>() != kConfigSchemaVersion)
    detail::config_fail(path, "unsupported schema_version (expected " +
                                  std::to_string(kConfigSchemaVersion) + ")");

  RunConfig cfg;
  const std::string profile =
      !profile_flag.empty() ? profile_flag
                            : detail::get_string(j, "profile", path, "", "desk");
  apply_profile(cfg, profile, path);

  if (j.contains("core")) {
    const auto& jc = j.at("core");
    if (!jc.is_object()) detail::config_fail(path, "field 'core' must be an object");
    detail::check_keys(jc, path, "core",
                       {"rows", "cols", "mode", "device", "adc", "encoding", "t_prog_step",
                        "weight_scale"});
    cfg.core.rows = detail::get_int(jc, "rows", path, "core", cfg.core.rows);
    cfg.core.cols = detail::get_int(jc, "cols", path, "core", cfg.core.cols);
    if (jc.contains("mode")) {
      try {
        cfg.core.mode = cell_mode_from_string(jc.at("mode").get<std::string>());
      } catch (const std::exception& e) {
        detail::config_fail(path, std::string("field 'core.mode': ") + e.what());
      }
    }
    if (jc.contains("device")) detail::parse_device(jc.at("device"), path, cfg.core);
    if (jc.contains("adc")) {
      const auto& ja = jc.at("adc");
      if (!ja.is_object()) detail::config_fail(path, "field 'core.adc' must be an object");
      detail::check_keys(ja, path, "core.adc", {"n_bits", "i_max", "beta_nl"});
      cfg.core.adc.n_bits = detail::get_int(ja, "n_bits", path, "core.adc", cfg.core.adc.n_bits);
      cfg.core.adc.i_max = detail::get_double(ja, "i_max", path, "core.adc", cfg.core.adc.i_max);
      cfg.core.adc.beta_nl =
          detail::get_double(ja, "beta_nl", path, "core.adc", cfg.core.adc.beta_nl);
    }
    if (jc.contains("encoding")) {
      const auto& je = jc.at("encoding");
      if (!je.is_object())
        detail::config_fail(path, "field 'core.encoding' must be an object");
      detail::check_keys(je, path, "core.encoding", {"n_in_bits"});
      cfg.core.encoding.n_in_bits =
          detail::get_int(je, "n_in_bits", path, "core.encoding", cfg.core.encoding.n_in_bits);
    }
    cfg.core.t_prog_step =
        detail::get_double(jc, "t_prog_step", path, "core", cfg.core.t_prog_step);
    cfg.core.weight_scale_override =
        detail::get_auto(jc, "weight_scale", path, "core", cfg.core.weight_scale_override);
  }

  if (j.contains("iterative")) {
    const auto& ji = j.at("iterative");
    if (!ji.is_object()) detail::config_fail(path, "field 'iterative' must be an object");
    detail::check_keys(ji, path, "iterative",
                       {"margin", "kappa", "max_sweeps", "bipolar_correction",
                        "checkpoint_every"});
    cfg.iterative.margin = detail::get_auto(ji, "margin", path, "iterative", cfg.iterative.margin);
    cfg.iterative.kappa = detail::get_auto(ji, "kappa", path, "iterative", cfg.iterative.kappa);
    cfg.iterative.max_sweeps =
        detail::get_int(ji, "max_sweeps", path, "iterative", cfg.iterative.max_sweeps);
    cfg.iterative.bipolar_correction = detail::get_bool(ji, "bipolar_correction", path,
                                                        "iterative", cfg.iterative.bipolar_correction);
    cfg.iterative.checkpoint_every =
        detail::get_int(ji, "checkpoint_every", path, "iterative", cfg.iterative.checkpoint_every);
  }

  if (j.contains("gdp")) {
    const auto& jg = j.at("gdp");
    if (!jg.is_object()) detail::config_fail(path, "field 'gdp' must be an object");
    detail::check_keys(jg, path, "gdp",
                       {"eta", "batch_size", "iterations", "input", "u_clip", "init",
                        "warmstart_sweeps", "fixed_pool", "bipolar_correction",
                        "checkpoint_every"});
    cfg.gdp.eta = detail::get_auto(jg, "eta", path, "gdp", cfg.gdp.eta);
    cfg.gdp.batch_size = detail::get_int(jg, "batch_size", path, "gdp", cfg.gdp.batch_size);
    cfg.gdp.iterations = detail::get_int(jg, "iterations", path, "gdp", cfg.gdp.iterations);
    if (jg.contains("input"))
      cfg.gdp.input_dist = detail::parse_input_dist(jg.at("input"), path, "gdp.input",
                                                    cfg.gdp.input_dist);
    cfg.gdp.u_clip = detail::get_double(jg, "u_clip", path, "gdp", cfg.gdp.u_clip);
    if (jg.contains("init")) {
      try {
        cfg.gdp.init = gdp_init_from_string(jg.at("init").get<std::string>());
      } catch (const std::exception& e) {
        detail::config_fail(path, std::string("field 'gdp.init': ") + e.what());
      }
    }
    cfg.gdp.warmstart_sweeps =
        detail::get_int(jg, "warmstart_sweeps", path, "gdp", cfg.gdp.warmstart_sweeps);
    cfg.gdp.fixed_pool = detail::get_bool(jg, "fixed_pool", path, "gdp", cfg.gdp.fixed_pool);
    cfg.gdp.bipolar_correction =
        detail::get_bool(jg, "bipolar_correction", path, "gdp", cfg.gdp.bipolar_correction);
    cfg.gdp.checkpoint_every =
        detail::get_int(jg, "checkpoint_every", path, "gdp", cfg.gdp.checkpoint_every);
  }

  if (j.contains("characterization")) {
    const auto& jc = j.at("characterization");
    if (!jc.is_object())
      detail::config_fail(path, "field 'characterization' must be an object");
    detail::check_keys(jc, path, "characterization", {"n_inputs", "input", "ridge"});
    cfg.characterization.n_inputs =
        detail::get_int(jc, "n_inputs", path, "characterization", cfg.characterization.n_inputs);
    if (jc.contains("input"))
      cfg.characterization.input_dist = detail::parse_input_dist(
          jc.at("input"), path, "characterization.input", cfg.characterization.input_dist);
    cfg.characterization.ridge =
        detail::get_double(jc, "ridge", path, "characterization", cfg.characterization.ridge);
  }

  if (j.contains("seeds")) {
    const auto& js = j.at("seeds");
    if (!js.is_array() || js.empty())
      detail::config_fail(path, "field 'seeds' must be a non-empty array of integers");
    cfg.seeds.clear();
    for (const auto& v : js) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        detail::config_fail(path, "field 'seeds' must contain non-negative integers");
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  cfg.threads = detail::get_int(j, "threads", path, "", cfg.threads);
  if (cfg.threads < 1) detail::config_fail(path, "field 'threads' must be at least 1");

  if (j.contains("program")) {
    const auto& jp = j.at("program");
    if (!jp.is_object()) detail::config_fail(path, "field 'program' must be an object");
    detail::check_keys(jp, path, "program", {"method", "target", "save_snapshot"});
    cfg.program.method = detail::get_string(jp, "method", path, "program", cfg.program.method);
    if (cfg.program.method != "gdp" && cfg.program.method != "iterative")
      detail::config_fail(path, "field 'program.method' must be \"gdp\" or \"iterative\"");
    cfg.program.target = detail::get_string(jp, "target", path, "program", cfg.program.target);
    if (cfg.program.target != "uniform" && cfg.program.target != "zeros")
      detail::config_fail(path, "field 'program.target' must be \"uniform\" or \"zeros\"");
    cfg.program.save_snapshot =
        detail::get_bool(jp, "save_snapshot", path, "program", cfg.program.save_snapshot);
  }

  if (j.contains("characterize")) {
    const auto& jc = j.at("characterize");
    if (!jc.is_object()) detail::config_fail(path, "field 'characterize' must be an object");
    detail::check_keys(jc, path, "characterize", {"snapshot", "target"});
    cfg.characterize.snapshot =
        detail::get_string(jc, "snapshot", path, "characterize", cfg.characterize.snapshot);
    cfg.characterize.target =
        detail::get_string(jc, "target", path, "characterize", cfg.characterize.target);
    if (cfg.characterize.target != "uniform" && cfg.characterize.target != "zeros")
      detail::config_fail(path, "field 'characterize.target' must be \"uniform\" or \"zeros\"");
  }

  if (j.contains("scenario")) {
    const auto& js = j.at("scenario");
    if (!js.is_object()) detail::config_fail(path, "field 'scenario' must be an object");
    detail::check_keys(js, path, "scenario", {"name", "sweep"});
    cfg.scenario.name = detail::get_string(js, "name", path, "scenario", cfg.scenario.name);
    if (!cfg.scenario.name.empty()) {
      const auto names = scenario_names();
      bool known = false;
      for (const auto& n : names) known |= (n == cfg.scenario.name);
      if (!known)
        detail::config_fail(path, "field 'scenario.name': unknown scenario '" +
                                      cfg.scenario.name + "'");
    }
    if (js.contains("sweep")) {
      const auto& sw = js.at("sweep");
      if (!sw.is_array())
        detail::config_fail(path, "field 'scenario.sweep' must be an array of numbers");
      cfg.scenario.sweep.clear();
      for (const auto& v : sw) {
        if (!v.is_number())
          detail::config_fail(path, "field 'scenario.sweep' must be an array of numbers");
        cfg.scenario.sweep.push_back(v.get<double>());
      }
    }
  }

  if (j.contains("infer")) {
    const auto& ji = j.at("infer");
    if (!ji.is_object()) detail::config_fail(path, "field 'infer' must be an object");
    detail::check_keys(ji, path, "infer", {"mlp", "dataset", "methods"});
    cfg.infer.mlp = detail::get_string(ji, "mlp", path, "infer", cfg.infer.mlp);
    cfg.infer.dataset = detail::get_string(ji, "dataset", path, "infer", cfg.infer.dataset);
    if (ji.contains("methods")) {
      const auto& jm = ji.at("methods");
      if (!jm.is_array() || jm.empty())
        detail::config_fail(path, "field 'infer.methods' must be a non-empty array");
      cfg.infer.methods.clear();
      for (const auto& v : jm) {
        if (!v.is_string() ||
            (v.get<std::string>() != "iterative" && v.get<std::string>() != "gdp"))
          detail::config_fail(path, "field 'infer.methods' entries must be \"iterative\" or \"gdp\"");
        cfg.infer.methods.push_back(v.get<std::string>());
      }
    }
  }

  try {
    validate(cfg.core.device);
    validate(cfg.core.adc);
    validate(cfg.core.encoding);
    validate(cfg.characterization);
    if (cfg.core.rows < 1 || cfg.core.cols < 1)
      throw std::invalid_argument("core.rows and core.cols must be at least 1");
    if (!(cfg.core.t_prog_step > 0))
      throw std::invalid_argument("core.t_prog_step must be positive");
  } catch (const std::invalid_argument& e) {
    detail::config_fail(path, e.what());
  }
  return cfg;
}

/// Command-line seed syntax: a plain integer N means seeds 1..N, a
/// comma-separated list is taken verbatim ("7," is the one-seed list {7}).
inline std::vector<std::uint64_t> parse_seeds_flag(const std::string& text) {
  if (text.empty()) throw ConfigError("--seeds: empty argument");
  std::vector<std::uint64_t> seeds;
  const bool is_list = text.find(',') != std::string::npos;
  try {
    if (is_list) {
      std::size_t start = 0;
      while (start < text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string::npos) end = text.size();
        const std::string tok = text.substr(start, end - start);
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
        start = end + 1;
      }
      if (seeds.empty()) throw ConfigError("--seeds: empty list");
    } else {
      const long long n = std::stoll(text);
      if (n < 1) throw ConfigError("--seeds: count must be at least 1");
      for (long long s = 1; s <= n; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("--seeds: expected an integer count or a comma-separated list, got '" +
                      text + "'");
  }
  return seeds;
}

/// Builds the experiments harness spec from a run config.
inline ScenarioSpec to_scenario_spec(const RunConfig& cfg, const std::string& name) {
  ScenarioSpec spec;
  spec.name = name;
  spec.rows = cfg.core.rows;
  spec.cols = cfg.core.cols;
  spec.device = cfg.core.device;
  spec.device_preset_name = cfg.core.device_preset_name;
  spec.adc = cfg.core.adc;
  spec.encoding = cfg.core.encoding;
  spec.t_prog_step = cfg.core.t_prog_step;
  spec.iterative = cfg.iterative;
  spec.gdp = cfg.gdp;
  spec.characterization = cfg.characterization;
  spec.seeds = cfg.seeds;
  spec.sweep = cfg.scenario.sweep;
  spec.threads = cfg.threads;
  return spec;
}

}  // namespace aimc
