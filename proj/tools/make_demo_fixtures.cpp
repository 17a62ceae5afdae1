/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

// Generates the inference demo fixtures: a two-moons style dataset lifted to
// eight smooth features and a small 8-16-16-2 ReLU classifier trained on it
// with full-batch Adam. Everything is keyed off fixed seeds, so rerunning the
// tool reproduces the committed files byte for byte.
//
//   make_demo_fixtures [out_dir]     (default: fixtures)
//
// Writes mlp_demo.json, moons_train.csv, moons_test.csv. The tool refuses to
// emit fixtures whose test-set logit margins are tiny, since downstream
// checks compare simulated and software predictions sample by sample.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "aimc/csv.hpp"
#include "aimc/rng.hpp"
#include "aimc/version.hpp"

namespace {

constexpr int kTrain = 512;
constexpr int kTest = 256;
constexpr int kFeatures = 8;
constexpr double kNoise = 0.08;
constexpr int kEpochs = 3000;
constexpr double kMinLogitGap = 0.02;

struct Raw {
  Eigen::MatrixXd xy;  // 2 x n
  std::vector<int> labels;
};

Raw sample_moons(int n, aimc::RngStream rng) {
  Raw raw;
  raw.xy.resize(2, n);
  raw.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int cls = i % 2;
    const double t = rng.uniform(0.0, M_PI);
    double x = cls == 0 ? std::cos(t) : 1.0 - std::cos(t);
    double y = cls == 0 ? std::sin(t) : 0.5 - std::sin(t);
    x += rng.normal(0.0, kNoise);
    y += rng.normal(0.0, kNoise);
    raw.xy(0, i) = x;
    raw.xy(1, i) = y;
    raw.labels[i] = cls;
  }
  return raw;
}

/// Smooth deterministic lift from (x, y) to eight features.
Eigen::MatrixXd lift(const Eigen::MatrixXd& xy) {
  Eigen::MatrixXd f(kFeatures, xy.cols());
  for (Eigen::Index i = 0; i < xy.cols(); ++i) {
    const double x = xy(0, i), y = xy(1, i);
    f(0, i) = x;
    f(1, i) = y;
    f(2, i) = x * y;
    f(3, i) = x * x;
    f(4, i) = y * y;
    f(5, i) = std::sin(M_PI * x);
    f(6, i) = std::sin(M_PI * y);
    f(7, i) = std::cos(M_PI * x * y);
  }
  return f;
}

struct Mlp {
  Eigen::MatrixXd w1, w2, w3;  // in x out
  Eigen::VectorXd b1, b2, b3;
};

Eigen::MatrixXd init_weights(int in, int out, aimc::RngStream rng) {
  Eigen::MatrixXd w(in, out);
  const double bound = std::sqrt(6.0 / in);
  for (int i = 0; i < in; ++i)
    for (int j = 0; j < out; ++j) w(i, j) = rng.uniform(-bound, bound);
  return w;
}

struct AdamState {
  Eigen::MatrixXd m, v;
  explicit AdamState(const Eigen::MatrixXd& shape)
      : m(Eigen::MatrixXd::Zero(shape.rows(), shape.cols())),
        v(Eigen::MatrixXd::Zero(shape.rows(), shape.cols())) {}
  void step(Eigen::MatrixXd& p, const Eigen::MatrixXd& g, int t, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v.array().matrix() + (1 - b2) * g.array().square().matrix();
    const double mc = 1 - std::pow(b1, t), vc = 1 - std::pow(b2, t);
    p.array() -= lr * (m.array() / mc) / ((v.array() / vc).sqrt() + eps);
  }
};

Eigen::MatrixXd softmax(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p = z;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    Eigen::ArrayXd col = z.col(j).array() - z.col(j).maxCoeff();
    col = col.exp();
    p.col(j) = col / col.sum();
  }
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out_dir = argc > 1 ? argv[1] : "fixtures";
  std::filesystem::create_directories(out_dir);

  const Raw train_raw = sample_moons(kTrain, aimc::RngStream(2024).derive("train"));
  const Raw test_raw = sample_moons(kTest, aimc::RngStream(2024).derive("test"));

  Eigen::MatrixXd xtr = lift(train_raw.xy);
  Eigen::MatrixXd xte = lift(test_raw.xy);

  // Per-feature affine map to [-1, 1], fit on the training set.
  for (int f = 0; f < kFeatures; ++f) {
    const double lo = xtr.row(f).minCoeff(), hi = xtr.row(f).maxCoeff();
    const double mid = 0.5 * (hi + lo), half = std::max(0.5 * (hi - lo), 1e-12);
    xtr.row(f) = (xtr.row(f).array() - mid) / half;
    xte.row(f) = ((xte.row(f).array() - mid) / half).min(1.0).max(-1.0);
  }

  Mlp net;
  const aimc::RngStream root(7);
  net.w1 = init_weights(8, 16, root.derive("w1"));
  net.w2 = init_weights(16, 16, root.derive("w2"));
  net.w3 = init_weights(16, 2, root.derive("w3"));
  net.b1 = Eigen::VectorXd::Zero(16);
  net.b2 = Eigen::VectorXd::Zero(16);
  net.b3 = Eigen::VectorXd::Zero(2);

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(2, kTrain);
  for (int i = 0; i < kTrain; ++i) onehot(train_raw.labels[i], i) = 1.0;

  AdamState aw1(net.w1), aw2(net.w2), aw3(net.w3);
  AdamState ab1(net.b1), ab2(net.b2), ab3(net.b3);
  const double lr = 0.01;

  for (int epoch = 1; epoch <= kEpochs; ++epoch) {
    const Eigen::MatrixXd z1 = (net.w1.transpose() * xtr).colwise() + net.b1;
    const Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
    const Eigen::MatrixXd z2 = (net.w2.transpose() * a1).colwise() + net.b2;
    const Eigen::MatrixXd a2 = z2.cwiseMax(0.0);
    const Eigen::MatrixXd z3 = (net.w3.transpose() * a2).colwise() + net.b3;
    const Eigen::MatrixXd p = softmax(z3);

    const Eigen::MatrixXd dz3 = (p - onehot) / kTrain;
    const Eigen::MatrixXd dw3 = a2 * dz3.transpose();
    const Eigen::VectorXd db3 = dz3.rowwise().sum();
    const Eigen::MatrixXd da2 = net.w3 * dz3;
    const Eigen::MatrixXd dz2 =
        da2.array() * (z2.array() > 0.0).cast<double>();
    const Eigen::MatrixXd dw2 = a1 * dz2.transpose();
    const Eigen::VectorXd db2 = dz2.rowwise().sum();
    const Eigen::MatrixXd da1 = net.w2 * dz2;
    const Eigen::MatrixXd dz1 =
        da1.array() * (z1.array() > 0.0).cast<double>();
    const Eigen::MatrixXd dw1 = xtr * dz1.transpose();
    const Eigen::VectorXd db1 = dz1.rowwise().sum();

    aw1.step(net.w1, dw1, epoch, lr);
    aw2.step(net.w2, dw2, epoch, lr);
    aw3.step(net.w3, dw3, epoch, lr);
    Eigen::MatrixXd b1m = net.b1, b2m = net.b2, b3m = net.b3;
    ab1.step(b1m, db1, epoch, lr);
    ab2.step(b2m, db2, epoch, lr);
    ab3.step(b3m, db3, epoch, lr);
    net.b1 = b1m;
    net.b2 = b2m;
    net.b3 = b3m;
  }

  // Evaluate on the held-out set.
  const Eigen::MatrixXd a1 = ((net.w1.transpose() * xte).colwise() + net.b1).cwiseMax(0.0);
  const Eigen::MatrixXd a2 = ((net.w2.transpose() * a1).colwise() + net.b2).cwiseMax(0.0);
  const Eigen::MatrixXd logits = (net.w3.transpose() * a2).colwise() + net.b3;
  int hits = 0;
  double min_gap = 1e300;
  for (int i = 0; i < kTest; ++i) {
    const int pred = logits(0, i) >= logits(1, i) ? 0 : 1;
    hits += pred == test_raw.labels[i];
    min_gap = std::min(min_gap, std::abs(logits(0, i) - logits(1, i)));
  }
  const double accuracy = 100.0 * hits / kTest;
  std::printf("test accuracy %.2f%%, smallest logit gap %.4f\n", accuracy, min_gap);
  if (min_gap < kMinLogitGap) {
    std::fprintf(stderr, "logit gap below %.3f; adjust training before shipping fixtures\n",
                 kMinLogitGap);
    return 1;
  }

  // Dataset CSVs: eight feature columns then the integer label.
  auto write_csv = [&](const std::filesystem::path& path, const Eigen::MatrixXd& x,
                       const std::vector<int>& labels) {
    std::ofstream os(path, std::ios::binary);
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      for (int f = 0; f < kFeatures; ++f) os << aimc::format_double(x(f, i)) << ',';
      os << labels[static_cast<std::size_t>(i)] << "\n";
    }
  };
  write_csv(out_dir / "moons_train.csv", xtr, train_raw.labels);
  write_csv(out_dir / "moons_test.csv", xte, test_raw.labels);

  nlohmann::json j;
  j["schema_version"] = aimc::kFixtureFormatVersion;
  j["activation"] = "relu";
  j["n_classes"] = 2;
  j["reference_accuracy"] = accuracy;
  auto layer_json = [](const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
    nlohmann::json l;
    l["rows"] = static_cast<int>(w.rows());
    l["cols"] = static_cast<int>(w.cols());
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index k = 0; k < w.cols(); ++k) flat.push_back(w(i, k));
    l["weights"] = flat;
    l["bias"] = std::vector<double>(b.data(), b.data() + b.size());
    return l;
  };
  j["layers"] = {layer_json(net.w1, net.b1), layer_json(net.w2, net.b2),
                 layer_json(net.w3, net.b3)};
  std::ofstream os(out_dir / "mlp_demo.json", std::ios::binary);
  os << j.dump(2) << "\n";

  std::printf("wrote %s\n", (out_dir / "mlp_demo.json").c_str());
  return 0;
}
