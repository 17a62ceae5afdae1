/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

// aimcsim: command-line front end for the crossbar simulator.
//
//   aimcsim program      --config run.json    program cores, write logs/snapshots
//   aimcsim characterize --config run.json    measure weight and output errors
//   aimcsim sweep        --config run.json    run the configured scenario
//   aimcsim drift        --config run.json    retention scenario (drift_24h)
//   aimcsim infer        --config run.json    MLP inference demo
//   aimcsim --replay out/manifest.json        rerun a recorded invocation
//
// Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aimc/aimc.hpp"

namespace fs = std::filesystem;

namespace {

struct CliOptions {
  std::string subcommand;
  std::string config_path;
  std::string seeds_flag;
  std::string out_dir;
  std::string profile;
  std::string replay_path;
  int threads = 0;  // 0 keeps the config value
  bool quiet = false;
};

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("AIMCSIM_OUT_DIR"); env && *env) return env;
  return ".";
}

void note(const CliOptions& opts, const std::string& msg) {
  if (!opts.quiet) std::cout << msg << "\n";
}

aimc::CrossbarCore build_core_from(const aimc::RunConfig& cfg, std::uint64_t seed) {
  aimc::CrossbarCore core =
      aimc::build_core(cfg.core.rows, cfg.core.cols, cfg.core.device, cfg.core.adc,
                       cfg.core.encoding, cfg.core.mode, seed);
  core.t_prog_step = cfg.core.t_prog_step;
  if (cfg.core.weight_scale_override > 0.0)
    core.weight_scale = cfg.core.weight_scale_override;
  return core;
}

Eigen::MatrixXd target_matrix(const std::string& kind, int rows, int cols,
                              std::uint64_t seed) {
  if (kind == "zeros") return Eigen::MatrixXd::Zero(rows, cols);
  aimc::RngStream s = aimc::RngStream(seed).derive("target");
  return aimc::draw_inputs(aimc::InputDist::uniform(), rows, cols, s);
}

aimc::Manifest start_manifest(const CliOptions& opts, const aimc::RunConfig& cfg) {
  aimc::Manifest m;
  m.artifact_version = aimc::kVersion;
  m.subcommand = opts.subcommand;
  m.config_path = opts.config_path;
  m.config_hash = aimc::hash_file(opts.config_path);
  m.profile = cfg.profile;
  m.seeds = cfg.seeds;
  m.device_presets = {cfg.core.device_preset_name};
  m.threads = opts.threads > 0 ? opts.threads : cfg.threads;
  m.timestamp_utc = aimc::utc_timestamp();
  return m;
}

void finish_manifest(const CliOptions& opts, aimc::Manifest& m, const fs::path& out) {
  const fs::path path = out / "manifest.json";
  aimc::write_manifest(path.string(), m);
  note(opts, "wrote " + path.string());
}

int run_program(const CliOptions& opts, const aimc::RunConfig& cfg, const fs::path& out) {
  aimc::Manifest manifest = start_manifest(opts, cfg);
  for (std::uint64_t seed : cfg.seeds) {
    aimc::CrossbarCore core = build_core_from(cfg, seed);
    const Eigen::MatrixXd target =
        target_matrix(cfg.program.target, cfg.core.rows, cfg.core.cols, seed);
    const aimc::ProgrammingPlan plan = aimc::build_plan(core, target);
    const aimc::CheckpointFn checkpoint = [&](aimc::CrossbarCore& c, int iter) {
      return aimc::characterize(c, target, cfg.characterization,
                                aimc::detail::char_stream(seed, static_cast<std::uint64_t>(iter)))
          .eps_total;
    };
    aimc::ProgrammingLog log;
    if (cfg.program.method == "gdp")
      log = aimc::program_gdp(core, target, cfg.gdp, plan, checkpoint);
    else
      log = aimc::program_iterative(core, target, cfg.iterative, plan, checkpoint);

    const std::string log_name = "program_log_seed" + std::to_string(seed) + ".csv";
    aimc::save_programming_log_csv((out / log_name).string(), log);
    manifest.outputs.push_back(log_name);
    note(opts, "wrote " + (out / log_name).string());
    if (cfg.program.save_snapshot) {
      const std::string snap_name = "core_seed" + std::to_string(seed) + ".snap";
      aimc::save_snapshot(core, (out / snap_name).string());
      manifest.outputs.push_back(snap_name);
      note(opts, "wrote " + (out / snap_name).string());
    }
  }
  finish_manifest(opts, manifest, out);
  return 0;
}

int run_characterize(const CliOptions& opts, const aimc::RunConfig& cfg, const fs::path& out) {
  aimc::Manifest manifest = start_manifest(opts, cfg);
  std::string csv = "seed,eps_total,eps_nonlinear,eps_weight,n_inputs,clock_s\n";
  for (std::uint64_t seed : cfg.seeds) {
    aimc::CrossbarCore core = cfg.characterize.snapshot.empty()
                                  ? build_core_from(cfg, seed)
                                  : aimc::load_snapshot(cfg.characterize.snapshot);
    const Eigen::MatrixXd target =
        target_matrix(cfg.characterize.target, core.rows, core.cols, seed);
    const aimc::CharacterizationReport rep = aimc::characterize(
        core, target, cfg.characterization, aimc::detail::char_stream(seed, 0));
    csv += std::to_string(seed) + ',' + aimc::format_double(rep.eps_total) + ',' +
           aimc::format_double(rep.eps_nonlinear) + ',' + aimc::format_double(rep.eps_weight) +
           ',' + std::to_string(rep.n_inputs) + ',' + aimc::format_double(rep.timestamp) + "\n";
  }
  const fs::path path = out / "characterization.csv";
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    os << csv;
  }
  manifest.outputs.push_back("characterization.csv");
  note(opts, "wrote " + path.string());
  finish_manifest(opts, manifest, out);
  return 0;
}

int run_sweep(const CliOptions& opts, const aimc::RunConfig& cfg, const fs::path& out,
              const std::string& forced_scenario) {
  std::string name = forced_scenario.empty() ? cfg.scenario.name : forced_scenario;
  if (name.empty())
    throw aimc::ConfigError("config '" + opts.config_path +
                            "': the sweep subcommand needs scenario.name");
  aimc::ScenarioSpec spec = aimc::to_scenario_spec(cfg, name);
  if (opts.threads > 0) spec.threads = opts.threads;
  try {
    aimc::validate_scenario(spec);
  } catch (const std::invalid_argument& e) {
    throw aimc::ConfigError("config '" + opts.config_path + "': " + e.what());
  }

  aimc::Manifest manifest = start_manifest(opts, cfg);
  if (name == "device_types") manifest.device_presets = {"pcm1", "pcm2"};
  const std::vector<aimc::ResultRecord> records = aimc::run_scenario(spec);
  aimc::save_results_csv((out / "results.csv").string(), records);
  note(opts, "wrote " + (out / "results.csv").string());
  aimc::save_summary_csv((out / "summary.csv").string(), name, aimc::summarize(records));
  note(opts, "wrote " + (out / "summary.csv").string());
  manifest.outputs = {"results.csv", "summary.csv"};
  finish_manifest(opts, manifest, out);
  return 0;
}

int run_infer(const CliOptions& opts, const aimc::RunConfig& cfg, const fs::path& out) {
  if (cfg.infer.mlp.empty() || cfg.infer.dataset.empty())
    throw aimc::ConfigError("config '" + opts.config_path +
                            "': the infer subcommand needs infer.mlp and infer.dataset");
  const aimc::MlpSpec mlp = aimc::load_mlp(cfg.infer.mlp);
  const aimc::Dataset ds = aimc::load_dataset_csv(cfg.infer.dataset);
  aimc::validate(mlp, ds);

  aimc::InferenceSetup setup;
  setup.device = cfg.core.device;
  setup.adc = cfg.core.adc;
  setup.encoding = cfg.core.encoding;
  setup.mode = cfg.core.mode;
  setup.t_prog_step = cfg.core.t_prog_step;
  setup.iterative = cfg.iterative;
  setup.gdp = cfg.gdp;
  setup.characterization = cfg.characterization;

  aimc::Manifest manifest = start_manifest(opts, cfg);
  std::vector<aimc::MethodEvaluation> evals;
  for (const std::string& method : cfg.infer.methods)
    for (std::uint64_t seed : cfg.seeds)
      evals.push_back(aimc::evaluate_method(mlp, ds, setup, method == "gdp", seed));
  aimc::save_inference_csv((out / "inference.csv").string(), evals);
  note(opts, "wrote " + (out / "inference.csv").string());
  manifest.outputs = {"inference.csv"};
  finish_manifest(opts, manifest, out);
  return 0;
}

int dispatch(CliOptions opts) {
  const fs::path out = resolve_out_dir(opts.out_dir);
  fs::create_directories(out);
  aimc::RunConfig cfg = aimc::load_config(opts.config_path, opts.profile);
  if (!opts.seeds_flag.empty()) cfg.seeds = aimc::parse_seeds_flag(opts.seeds_flag);
  if (opts.threads > 0) cfg.threads = opts.threads;

  if (opts.subcommand == "program") return run_program(opts, cfg, out);
  if (opts.subcommand == "characterize") return run_characterize(opts, cfg, out);
  if (opts.subcommand == "sweep") return run_sweep(opts, cfg, out, "");
  if (opts.subcommand == "drift") {
    if (!cfg.scenario.sweep.empty())
      throw aimc::ConfigError("config '" + opts.config_path +
                              "': the drift scenario takes no sweep values");
    return run_sweep(opts, cfg, out, "drift_24h");
  }
  if (opts.subcommand == "infer") return run_infer(opts, cfg, out);
  throw aimc::ConfigError("unknown subcommand '" + opts.subcommand + "'");
}

int replay(CliOptions opts) {
  const aimc::Manifest m = aimc::read_manifest(opts.replay_path);
  fs::path config = m.config_path;
  if (!fs::exists(config)) {
    const fs::path beside = fs::path(opts.replay_path).parent_path() / config.filename();
    if (fs::exists(beside)) config = beside;
  }
  const std::string hash = aimc::hash_file(config.string());
  if (hash != m.config_hash)
    std::cerr << "warning: '" << config.string()
              << "' changed since the manifest was written (hash " << hash
              << ", manifest has " << m.config_hash << "); replaying with current contents\n";

  opts.subcommand = m.subcommand;
  opts.config_path = config.string();
  opts.profile = m.profile;
  // The manifest's seed list wins over the config file; the trailing comma
  // forces list form even for a single seed.
  opts.seeds_flag.clear();
  for (std::uint64_t s : m.seeds) opts.seeds_flag += std::to_string(s) + ',';
  if (opts.threads == 0) opts.threads = m.threads;
  return dispatch(std::move(opts));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analog in-memory crossbar simulator"};
  app.require_subcommand(0, 1);

  CliOptions opts;
  app.add_option("--replay", opts.replay_path,
                 "Rerun the invocation recorded in a manifest.json");
  app.add_option("--out", opts.out_dir,
                 "Output directory (default: $AIMCSIM_OUT_DIR, then the current directory)");
  app.add_option("--threads", opts.threads, "Worker threads for seed replication");
  app.add_flag("--quiet", opts.quiet, "Suppress progress output");

  const std::vector<std::pair<const char*, const char*>> subs = {
      {"program", "Program cores and write per-seed logs and snapshots"},
      {"characterize", "Estimate weights and report error metrics"},
      {"sweep", "Run the scenario named in the config"},
      {"drift", "Run the 24 h retention scenario"},
      {"infer", "Run the MLP-on-cores inference demo"},
  };
  for (const auto& [name, help] : subs) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->add_option("--config", opts.config_path, "JSON run configuration")->required();
    sub->add_option("--seeds", opts.seeds_flag,
                    "Seed count N (runs 1..N) or comma-separated list");
    sub->add_option("--profile", opts.profile, "Base parameter profile")
        ->check(CLI::IsMember({"desk", "paper"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!opts.replay_path.empty()) return replay(opts);
    const auto chosen = app.get_subcommands();
    if (chosen.empty()) {
      std::cerr << app.help();
      return 1;
    }
    opts.subcommand = chosen.front()->get_name();
    return dispatch(std::move(opts));
  } catch (const aimc::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
