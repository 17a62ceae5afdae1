/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "aimc/characterization.hpp"
#include "aimc/core.hpp"
#include "aimc/programming.hpp"
#include "aimc/rng.hpp"
#include "aimc/version.hpp"

/**
 * Inference demo: run a small pretrained MLP with every matrix product on
 * simulated cores and everything else (scaling, biases, activations, argmax)
 * in software.
 *
 * Mapping scheme, per layer:
 *   - weights are normalized by their max-abs value; the normalized matrix is
 *     the programming target and the scale is restored digitally after each
 *     MVM (the fixture stores full-precision weights);
 *   - inputs to a layer are scaled per sample by 1/max(1, max|a|) so they fit
 *     the encoder range, and scaled back afterwards;
 *   - one core per layer, sized to the layer.
 *
 * Layers whose weights are all zero cannot be characterized (degenerate
 * target); they are programmed to zero and their error entries are NaN.
 */

namespace aimc {

struct MlpLayer {
  Eigen::MatrixXd weights;  // in x out
  Eigen::VectorXd bias;     // out
};

struct MlpSpec {
  std::vector<MlpLayer> layers;
  std::string activation = "relu";  // hidden-layer activation
  int n_classes = 0;
  double reference_accuracy = 0.0;  // software accuracy on the companion test set, %
};

struct Dataset {
  Eigen::MatrixXd features;  // n_samples x n_features, in [-1, 1]
  std::vector<int> labels;
};

inline void validate(const MlpSpec& mlp) {
  if (mlp.layers.empty()) throw std::invalid_argument("MlpSpec: no layers");
  if (mlp.activation != "relu")
    throw std::invalid_argument("MlpSpec: unsupported activation '" + mlp.activation + "'");
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const MlpLayer& layer = mlp.layers[l];
    if (layer.weights.size() == 0)
      throw std::invalid_argument("MlpSpec: empty weight matrix");
    if (layer.bias.size() != layer.weights.cols())
      throw std::invalid_argument("MlpSpec: bias size mismatch");
    if (l > 0 && mlp.layers[l - 1].weights.cols() != layer.weights.rows())
      throw std::invalid_argument("MlpSpec: consecutive layer dimensions do not chain");
  }
  if (mlp.n_classes != mlp.layers.back().weights.cols())
    throw std::invalid_argument("MlpSpec: n_classes does not match the last layer");
}

inline void validate(const MlpSpec& mlp, const Dataset& ds) {
  if (ds.features.rows() == 0) throw std::invalid_argument("Dataset: empty");
  if (ds.features.cols() != mlp.layers.front().weights.rows())
    throw std::invalid_argument("Dataset: feature count does not match the first layer");
  if (static_cast<std::size_t>(ds.features.rows()) != ds.labels.size())
    throw std::invalid_argument("Dataset: label count mismatch");
  for (int y : ds.labels)
    if (y < 0 || y >= mlp.n_classes)
      throw std::invalid_argument("Dataset: label out of range");
}

inline MlpSpec load_mlp(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("mlp fixture: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("mlp fixture '" + path + "': " + e.what());
  }
  if (j.value("schema_version", -1) != kFixtureFormatVersion)
    throw std::runtime_error("mlp fixture '" + path + "': unsupported schema_version");

  MlpSpec mlp;
  mlp.activation = j.value("activation", "relu");
  mlp.n_classes = j.at("n_classes").get<int>();
  mlp.reference_accuracy = j.at("reference_accuracy").get<double>();
  for (const auto& jl : j.at("layers")) {
    MlpLayer layer;
    const int rows = jl.at("rows").get<int>();
    const int cols = jl.at("cols").get<int>();
    const auto w = jl.at("weights").get<std::vector<double>>();
    const auto b = jl.at("bias").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != rows * cols ||
        static_cast<int>(b.size()) != cols)
      throw std::runtime_error("mlp fixture '" + path + "': layer size mismatch");
    layer.weights.resize(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < cols; ++k) layer.weights(i, k) = w[static_cast<size_t>(i) * cols + k];
    layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), cols);
    mlp.layers.push_back(std::move(layer));
  }
  validate(mlp);
  return mlp;
}

inline Dataset load_dataset_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("dataset: cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (vals.size() < 2) throw std::runtime_error("dataset '" + path + "': short row");
    labels.push_back(static_cast<int>(vals.back()));
    vals.pop_back();
    if (!rows.empty() && rows.front().size() != vals.size())
      throw std::runtime_error("dataset '" + path + "': ragged rows");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::runtime_error("dataset '" + path + "': empty");
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  ds.labels = std::move(labels);
  return ds;
}

/// Full-precision forward pass; x is d x n, returns classes x n logits.
inline Eigen::MatrixXd forward_software(const MlpSpec& mlp, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const MlpLayer& layer = mlp.layers[l];
    Eigen::MatrixXd z = layer.weights.transpose() * a;
    z.colwise() += layer.bias;
    a = l + 1 < mlp.layers.size() ? z.cwiseMax(0.0) : z;
  }
  return a;
}

/// Argmax per column; ties go to the lowest class index.
inline std::vector<int> predict(const Eigen::MatrixXd& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    Eigen::Index best = 0;
    logits.col(j).maxCoeff(&best);
    out[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return out;
}

inline double accuracy_percent(const std::vector<int>& predictions,
                               const std::vector<int>& labels) {
  if (predictions.size() != labels.size() || labels.empty())
    throw std::invalid_argument("accuracy_percent: size mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (predictions[i] == labels[i]) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(labels.size());
}

struct InferenceSetup {
  DeviceParams device = pcm1();
  AdcParams adc;
  InputEncoding encoding;
  CellMode mode = CellMode::kSingleDevice;
  double t_prog_step = 1.0;
  IterativeConfig iterative;
  GdpConfig gdp;
  CharacterizationConfig characterization;
};

struct LayerMapping {
  CrossbarCore core;
  Eigen::MatrixXd target;  // normalized weights actually programmed
  double scale = 1.0;      // restores the layer's weight magnitude digitally
};

/// Programs one core per layer with the chosen engine. Deterministic in
/// (mlp, setup, method, seed).
inline std::vector<LayerMapping> map_layers(const MlpSpec& mlp, const InferenceSetup& setup,
                                            bool use_gdp, std::uint64_t seed) {
  validate(mlp);
  std::vector<LayerMapping> out;
  const RngStream root(seed);
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const MlpLayer& layer = mlp.layers[l];
    LayerMapping m;
    m.scale = layer.weights.cwiseAbs().maxCoeff();
    if (m.scale == 0.0) m.scale = 1.0;
    m.target = layer.weights / m.scale;
    m.core = build_core(static_cast<int>(layer.weights.rows()),
                        static_cast<int>(layer.weights.cols()), setup.device, setup.adc,
                        setup.encoding, setup.mode,
                        root.derive("layer", static_cast<std::uint64_t>(l)).key());
    m.core.t_prog_step = setup.t_prog_step;
    const ProgrammingPlan plan = build_plan(m.core, m.target);
    if (use_gdp)
      program_gdp(m.core, m.target, setup.gdp, plan);
    else
      program_iterative(m.core, m.target, setup.iterative, plan);
    out.push_back(std::move(m));
  }
  return out;
}

/// Forward pass with every matrix product on the mapped cores; features are
/// n x d (dataset layout), the return is classes x n logits.
inline Eigen::MatrixXd forward_on_cores(std::vector<LayerMapping>& mapped,
                                        const MlpSpec& mlp, const Eigen::MatrixXd& features) {
  if (mapped.size() != mlp.layers.size())
    throw std::invalid_argument("forward_on_cores: mapping/layer count mismatch");
  Eigen::MatrixXd a = features.transpose();  // d x n
  for (std::size_t l = 0; l < mapped.size(); ++l) {
    LayerMapping& m = mapped[l];
    // Per-sample scale so the encoder sees [-1, 1]; undone right after.
    Eigen::RowVectorXd sample_scale =
        a.cwiseAbs().colwise().maxCoeff().cwiseMax(1.0);
    const Eigen::MatrixXd x = a.array().rowwise() / sample_scale.array();
    Eigen::MatrixXd z = mvm_batch(m.core, x);
    z = z.array().rowwise() * (m.scale * sample_scale.array());
    z.colwise() += mlp.layers[l].bias;
    a = l + 1 < mapped.size() ? z.cwiseMax(0.0) : z;
  }
  return a;
}

inline double infer_accuracy(std::vector<LayerMapping>& mapped, const MlpSpec& mlp,
                             const Dataset& ds) {
  validate(mlp, ds);
  return accuracy_percent(predict(forward_on_cores(mapped, mlp, ds.features)), ds.labels);
}

struct MethodEvaluation {
  std::string method;
  std::uint64_t seed = 0;
  double accuracy = 0.0;  // %
  std::vector<double> layer_eps_total;      // NaN where the layer is degenerate
  std::vector<double> layer_eps_nonlinear;
  std::vector<double> layer_eps_weight;
};

/// Maps, characterizes each layer core (probe streams keyed by (seed, layer),
/// never by method), and measures end-to-end accuracy.
inline MethodEvaluation evaluate_method(const MlpSpec& mlp, const Dataset& ds,
                                        const InferenceSetup& setup, bool use_gdp,
                                        std::uint64_t seed) {
  MethodEvaluation ev;
  ev.method = std::string(use_gdp ? "gdp-" : "iterative-") +
              (setup.mode == CellMode::kTwoDevice ? "TD" : "SD");
  ev.seed = seed;
  std::vector<LayerMapping> mapped = map_layers(mlp, setup, use_gdp, seed);
  for (std::size_t l = 0; l < mapped.size(); ++l) {
    if (mapped[l].target.norm() == 0.0) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      ev.layer_eps_total.push_back(nan);
      ev.layer_eps_nonlinear.push_back(nan);
      ev.layer_eps_weight.push_back(nan);
      continue;
    }
    const CharacterizationReport rep = characterize(
        mapped[l].core, mapped[l].target, setup.characterization,
        RngStream(seed).derive("char_layer", static_cast<std::uint64_t>(l)));
    ev.layer_eps_total.push_back(rep.eps_total);
    ev.layer_eps_nonlinear.push_back(rep.eps_nonlinear);
    ev.layer_eps_weight.push_back(rep.eps_weight);
  }
  ev.accuracy = infer_accuracy(mapped, mlp, ds);
  return ev;
}

}  // namespace aimc
