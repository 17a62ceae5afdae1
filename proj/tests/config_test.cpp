/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#include "aimc/config.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace aimc {
namespace {

// Writes the body to a temp file for the duration of one parse call.
class TempConfig {
 public:
  explicit TempConfig(const std::string& body)
      : path_((std::filesystem::temp_directory_path() / "aimc_config_test.json").string()) {
    std::ofstream os(path_, std::ios::binary);
    os << body;
  }
  ~TempConfig() { std::remove(path_.c_str()); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

RunConfig parse(const std::string& body, const std::string& profile_flag = "") {
  TempConfig file(body);
  return load_config(file.path(), profile_flag);
}

void expect_rejected(const std::string& body) {
  TempConfig file(body);
  EXPECT_THROW(load_config(file.path()), ConfigError) << body;
}

TEST(ApplyProfile, DeskProfilePinsBenchSizedCore) {
  RunConfig cfg;
  apply_profile(cfg, "desk");
  EXPECT_EQ(cfg.profile, "desk");
  EXPECT_EQ(cfg.core.rows, 64);
  EXPECT_EQ(cfg.core.cols, 64);
  EXPECT_EQ(cfg.core.adc.n_bits, 8);
  EXPECT_DOUBLE_EQ(cfg.core.adc.i_max, 320.0);
  EXPECT_DOUBLE_EQ(cfg.core.adc.beta_nl, 0.005);
  EXPECT_EQ(cfg.core.encoding.n_in_bits, 8);
  EXPECT_DOUBLE_EQ(cfg.core.t_prog_step, 0.1);
}

TEST(ApplyProfile, PaperProfileScalesTheArrayAndConverter) {
  RunConfig cfg;
  apply_profile(cfg, "paper");
  EXPECT_EQ(cfg.core.rows, 256);
  EXPECT_EQ(cfg.core.cols, 256);
  EXPECT_EQ(cfg.core.adc.n_bits, 8);
  EXPECT_DOUBLE_EQ(cfg.core.adc.i_max, 640.0);
  EXPECT_DOUBLE_EQ(cfg.core.adc.beta_nl, 0.005);
  EXPECT_EQ(cfg.core.encoding.n_in_bits, 8);
  EXPECT_DOUBLE_EQ(cfg.core.t_prog_step, 0.1);
}

TEST(ApplyProfile, UnknownProfileFails) {
  RunConfig cfg;
  EXPECT_THROW(apply_profile(cfg, "pocket"), ConfigError);
}

TEST(LoadConfig, MinimalFileKeepsLibraryDefaults) {
  const RunConfig cfg = parse(R"({"schema_version": 1})");
  EXPECT_EQ(cfg.profile, "desk");
  EXPECT_EQ(cfg.core.rows, 64);
  EXPECT_EQ(cfg.core.mode, CellMode::kSingleDevice);
  EXPECT_EQ(cfg.core.device_preset_name, "pcm1");
  EXPECT_DOUBLE_EQ(cfg.core.device.set_cap_mean, 22.0);
  EXPECT_DOUBLE_EQ(cfg.gdp.eta, kAutoValue);
  EXPECT_DOUBLE_EQ(cfg.iterative.margin, kAutoValue);
  EXPECT_EQ(cfg.gdp.batch_size, 256);
  EXPECT_EQ(cfg.gdp.iterations, 500);
  EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{1}));
  EXPECT_EQ(cfg.threads, 1);
  EXPECT_EQ(cfg.program.method, "gdp");
  EXPECT_TRUE(cfg.program.save_snapshot);
  EXPECT_EQ(cfg.infer.methods, (std::vector<std::string>{"iterative", "gdp"}));
}

TEST(LoadConfig, SchemaVersionIsRequiredAndPinned) {
  expect_rejected(R"({})");
  expect_rejected(R"({"schema_version": 2})");
  expect_rejected(R"({"schema_version": "1"})");
}

TEST(LoadConfig, MissingFileAndMalformedJsonFail) {
  EXPECT_THROW(load_config("/nonexistent/run.json"), ConfigError);
  expect_rejected("{ not json");
  expect_rejected(R"(["schema_version", 1])");
}

TEST(LoadConfig, UnknownKeysAreRejectedAtEveryLevel) {
  expect_rejected(R"({"schema_version": 1, "scenari": {"name": "batch_sweep"}})");
  expect_rejected(R"({"schema_version": 1, "core": {"rows": 8, "colz": 8}})");
  expect_rejected(R"({"schema_version": 1, "core": {"adc": {"imax": 100}}})");
  expect_rejected(R"({"schema_version": 1, "core": {"device": {"gmax": 20}}})");
  expect_rejected(R"({"schema_version": 1, "core": {"encoding": {"bits": 8}}})");
  expect_rejected(R"({"schema_version": 1, "iterative": {"margn": 0.1}})");
  expect_rejected(R"({"schema_version": 1, "gdp": {"learning_rate": 1.0}})");
  expect_rejected(R"({"schema_version": 1, "gdp": {"input": {"kindd": "uniform"}}})");
  expect_rejected(R"({"schema_version": 1, "characterization": {"probes": 10}})");
  expect_rejected(R"({"schema_version": 1, "program": {"engine": "gdp"}})");
  expect_rejected(R"({"schema_version": 1, "scenario": {"label": "x"}})");
  expect_rejected(R"({"schema_version": 1, "infer": {"model": "a.json"}})");
}

TEST(LoadConfig, ProfileFlagBeatsTheFileProfile) {
  const std::string body = R"({"schema_version": 1, "profile": "paper"})";
  EXPECT_EQ(parse(body).core.rows, 256);
  EXPECT_EQ(parse(body, "desk").core.rows, 64);
  EXPECT_THROW(parse(body, "pocket"), ConfigError);
}

TEST(LoadConfig, CoreOverridesApplyOnTopOfTheProfile) {
  const RunConfig cfg = parse(R"({
    "schema_version": 1,
    "profile": "paper",
    "core": {"rows": 128, "mode": "TD", "t_prog_step": 0.5,
             "adc": {"i_max": 500.0}, "encoding": {"n_in_bits": 10},
             "weight_scale": 50.0}
  })");
  EXPECT_EQ(cfg.core.rows, 128);
  EXPECT_EQ(cfg.core.cols, 256);
  EXPECT_EQ(cfg.core.mode, CellMode::kTwoDevice);
  EXPECT_DOUBLE_EQ(cfg.core.t_prog_step, 0.5);
  EXPECT_DOUBLE_EQ(cfg.core.adc.i_max, 500.0);
  EXPECT_EQ(cfg.core.adc.n_bits, 8);
  EXPECT_EQ(cfg.core.encoding.n_in_bits, 10);
  EXPECT_DOUBLE_EQ(cfg.core.weight_scale_override, 50.0);

  expect_rejected(R"({"schema_version": 1, "core": {"mode": "QD"}})");
}

TEST(LoadConfig, AutoFieldsAcceptAutoOrNumbers) {
  const RunConfig auto_cfg = parse(R"({
    "schema_version": 1,
    "iterative": {"margin": "auto", "kappa": "auto"},
    "gdp": {"eta": "auto"},
    "core": {"weight_scale": "auto"}
  })");
  EXPECT_DOUBLE_EQ(auto_cfg.gdp.eta, kAutoValue);
  EXPECT_DOUBLE_EQ(auto_cfg.iterative.margin, kAutoValue);
  EXPECT_DOUBLE_EQ(auto_cfg.iterative.kappa, kAutoValue);
  EXPECT_DOUBLE_EQ(auto_cfg.core.weight_scale_override, kAutoValue);

  const RunConfig numeric = parse(R"({
    "schema_version": 1,
    "iterative": {"margin": 0.01},
    "gdp": {"eta": 2.75}
  })");
  EXPECT_DOUBLE_EQ(numeric.gdp.eta, 2.75);
  EXPECT_DOUBLE_EQ(numeric.iterative.margin, 0.01);

  expect_rejected(R"({"schema_version": 1, "gdp": {"eta": "fast"}})");
  expect_rejected(R"({"schema_version": 1, "gdp": {"eta": true}})");
}

TEST(LoadConfig, DevicePresetStringSelectsKnownPresets) {
  const RunConfig cfg = parse(R"({"schema_version": 1, "core": {"device": "pcm2"}})");
  EXPECT_EQ(cfg.core.device_preset_name, "pcm2");
  EXPECT_DOUBLE_EQ(cfg.core.device.g_max, 5.0);
  EXPECT_DOUBLE_EQ(cfg.core.device.set_cap_mean, 4.4);
  EXPECT_DOUBLE_EQ(cfg.core.device.sigma_prog, 0.08);

  expect_rejected(R"({"schema_version": 1, "core": {"device": "pcm9"}})");
  expect_rejected(R"({"schema_version": 1, "core": {"device": 7}})");
}

TEST(LoadConfig, DeviceObjectOverridesAreNamedCustom) {
  const RunConfig plain = parse(
      R"({"schema_version": 1, "core": {"device": {"preset": "pcm2"}}})");
  EXPECT_EQ(plain.core.device_preset_name, "pcm2");
  EXPECT_DOUBLE_EQ(plain.core.device.g_max, 5.0);

  const RunConfig tweaked = parse(R"({
    "schema_version": 1,
    "core": {"device": {"preset": "pcm1", "sigma_prog": 0.2, "redraw_nu_on_program": true}}
  })");
  EXPECT_EQ(tweaked.core.device_preset_name, "pcm1-custom");
  EXPECT_DOUBLE_EQ(tweaked.core.device.sigma_prog, 0.2);
  EXPECT_TRUE(tweaked.core.device.redraw_nu_on_program);
  EXPECT_DOUBLE_EQ(tweaked.core.device.g_max, 25.0);

  const RunConfig implicit = parse(
      R"({"schema_version": 1, "core": {"device": {"g_max": 30.0}}})");
  EXPECT_EQ(implicit.core.device_preset_name, "pcm1-custom");
  EXPECT_DOUBLE_EQ(implicit.core.device.g_max, 30.0);
}

TEST(LoadConfig, OutOfRangeValuesFailFinalValidation) {
  expect_rejected(R"({"schema_version": 1, "core": {"rows": 0}})");
  expect_rejected(R"({"schema_version": 1, "core": {"t_prog_step": 0.0}})");
  expect_rejected(R"({"schema_version": 1, "core": {"adc": {"n_bits": 2}}})");
  expect_rejected(R"({"schema_version": 1, "core": {"device": {"t0": -1.0}}})");
  expect_rejected(R"({"schema_version": 1, "characterization": {"ridge": -0.5}})");
}

TEST(LoadConfig, SeedsMustBeNonNegativeIntegers) {
  EXPECT_EQ(parse(R"({"schema_version": 1, "seeds": [3, 9]})").seeds,
            (std::vector<std::uint64_t>{3, 9}));
  expect_rejected(R"({"schema_version": 1, "seeds": []})");
  expect_rejected(R"({"schema_version": 1, "seeds": [-1]})");
  expect_rejected(R"({"schema_version": 1, "seeds": [1.5]})");
  expect_rejected(R"({"schema_version": 1, "seeds": 5})");
}

TEST(LoadConfig, ThreadsMustBePositive) {
  EXPECT_EQ(parse(R"({"schema_version": 1, "threads": 4})").threads, 4);
  expect_rejected(R"({"schema_version": 1, "threads": 0})");
}

TEST(LoadConfig, ScenarioSectionValidatesNameAndSweep) {
  const RunConfig cfg = parse(R"({
    "schema_version": 1,
    "scenario": {"name": "batch_sweep", "sweep": [64, 128]}
  })");
  EXPECT_EQ(cfg.scenario.name, "batch_sweep");
  EXPECT_EQ(cfg.scenario.sweep, (std::vector<double>{64.0, 128.0}));

  expect_rejected(R"({"schema_version": 1, "scenario": {"name": "warp_drive"}})");
  expect_rejected(R"({"schema_version": 1, "scenario": {"name": "lr_sweep", "sweep": 2}})");
  expect_rejected(
      R"({"schema_version": 1, "scenario": {"name": "lr_sweep", "sweep": ["x"]}})");
}

TEST(LoadConfig, ProgramSectionValidatesMethodAndTarget) {
  const RunConfig cfg = parse(R"({
    "schema_version": 1,
    "program": {"method": "iterative", "target": "zeros", "save_snapshot": false}
  })");
  EXPECT_EQ(cfg.program.method, "iterative");
  EXPECT_EQ(cfg.program.target, "zeros");
  EXPECT_FALSE(cfg.program.save_snapshot);

  expect_rejected(R"({"schema_version": 1, "program": {"method": "anneal"}})");
  expect_rejected(R"({"schema_version": 1, "program": {"target": "ones"}})");
}

TEST(LoadConfig, InferSectionValidatesMethodList) {
  const RunConfig cfg = parse(R"({
    "schema_version": 1,
    "infer": {"mlp": "net.json", "dataset": "test.csv", "methods": ["gdp"]}
  })");
  EXPECT_EQ(cfg.infer.mlp, "net.json");
  EXPECT_EQ(cfg.infer.dataset, "test.csv");
  EXPECT_EQ(cfg.infer.methods, (std::vector<std::string>{"gdp"}));

  expect_rejected(R"({"schema_version": 1, "infer": {"methods": []}})");
  expect_rejected(R"({"schema_version": 1, "infer": {"methods": ["sgd"]}})");
}

TEST(LoadConfig, InputDistributionsParseAndValidate) {
  const RunConfig cfg = parse(R"({
    "schema_version": 1,
    "gdp": {"input": {"kind": "sparse-uniform", "sparsity": 0.5}},
    "characterization": {"input": {"kind": "gaussian", "stddev": 0.25}}
  })");
  EXPECT_EQ(cfg.gdp.input_dist.kind, InputDist::Kind::kSparseUniform);
  EXPECT_DOUBLE_EQ(cfg.gdp.input_dist.sparsity, 0.5);
  EXPECT_EQ(cfg.characterization.input_dist.kind, InputDist::Kind::kGaussian);
  EXPECT_DOUBLE_EQ(cfg.characterization.input_dist.stddev, 0.25);

  expect_rejected(R"({"schema_version": 1, "gdp": {"input": {"kind": "weird"}}})");
  expect_rejected(
      R"({"schema_version": 1, "gdp": {"input": {"kind": "sparse-uniform", "sparsity": 1.0}}})");
}

TEST(ParseSeedsFlag, CountFormExpandsToOneThroughN) {
  EXPECT_EQ(parse_seeds_flag("5"), (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
  EXPECT_EQ(parse_seeds_flag("1"), (std::vector<std::uint64_t>{1}));
}

TEST(ParseSeedsFlag, ListFormIsTakenVerbatim) {
  EXPECT_EQ(parse_seeds_flag("3,9"), (std::vector<std::uint64_t>{3, 9}));
  EXPECT_EQ(parse_seeds_flag("7,"), (std::vector<std::uint64_t>{7}));
  EXPECT_EQ(parse_seeds_flag(",5"), (std::vector<std::uint64_t>{5}));
  EXPECT_EQ(parse_seeds_flag("2,2,2"), (std::vector<std::uint64_t>{2, 2, 2}));
}

TEST(ParseSeedsFlag, RejectsEmptyZeroAndGarbage) {
  EXPECT_THROW(parse_seeds_flag(""), ConfigError);
  EXPECT_THROW(parse_seeds_flag("0"), ConfigError);
  EXPECT_THROW(parse_seeds_flag("-3"), ConfigError);
  EXPECT_THROW(parse_seeds_flag("abc"), ConfigError);
  EXPECT_THROW(parse_seeds_flag(",,"), ConfigError);
}

TEST(ToScenarioSpec, CopiesEveryFieldTheHarnessNeeds) {
  const RunConfig cfg = parse(R"({
    "schema_version": 1,
    "profile": "paper",
    "core": {"device": "pcm2", "t_prog_step": 0.2},
    "iterative": {"max_sweeps": 7},
    "gdp": {"eta": 1.25, "batch_size": 32, "iterations": 40},
    "characterization": {"n_inputs": 96},
    "seeds": [4, 5],
    "threads": 2,
    "scenario": {"name": "batch_sweep", "sweep": [16]}
  })");
  const ScenarioSpec spec = to_scenario_spec(cfg, cfg.scenario.name);

  EXPECT_EQ(spec.name, "batch_sweep");
  EXPECT_EQ(spec.rows, 256);
  EXPECT_EQ(spec.cols, 256);
  EXPECT_EQ(spec.device_preset_name, "pcm2");
  EXPECT_DOUBLE_EQ(spec.device.set_cap_mean, 4.4);
  EXPECT_DOUBLE_EQ(spec.adc.i_max, 640.0);
  EXPECT_EQ(spec.encoding.n_in_bits, 8);
  EXPECT_DOUBLE_EQ(spec.t_prog_step, 0.2);
  EXPECT_EQ(spec.iterative.max_sweeps, 7);
  EXPECT_DOUBLE_EQ(spec.gdp.eta, 1.25);
  EXPECT_EQ(spec.gdp.batch_size, 32);
  EXPECT_EQ(spec.gdp.iterations, 40);
  EXPECT_EQ(spec.characterization.n_inputs, 96);
  EXPECT_EQ(spec.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_EQ(spec.sweep, (std::vector<double>{16.0}));
  EXPECT_EQ(spec.threads, 2);
  EXPECT_NO_THROW(validate_scenario(spec));
}

}  // namespace
}  // namespace aimc
