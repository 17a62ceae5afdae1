/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "aimc/rng.hpp"

// Synthetic input distributions for programming and characterization.
// All of them produce values in [-1, 1], which is the encoder's input range.

namespace aimc {

struct InputDist {
  enum class Kind {
    kUniform,        // i.i.d. uniform on [-1, 1]
    kGaussian,       // N(0, stddev^2) clipped to [-1, 1]
    kSparseUniform,  // uniform, with each entry zeroed with probability sparsity
  };

  Kind kind = Kind::kUniform;
  double sparsity = 0.0;       // sparse-uniform only
  double stddev = 1.0 / 3.0;   // gaussian only

  static InputDist uniform() { return InputDist{}; }
  static InputDist gaussian(double stddev = 1.0 / 3.0) {
    return InputDist{Kind::kGaussian, 0.0, stddev};
  }
  static InputDist sparse_uniform(double sparsity) {
    return InputDist{Kind::kSparseUniform, sparsity, 0.0};
  }
};

inline void validate(const InputDist& d) {
  if (d.kind == InputDist::Kind::kSparseUniform &&
      !(d.sparsity >= 0.0 && d.sparsity < 1.0))
    throw std::invalid_argument("InputDist: sparsity must be in [0, 1)");
  if (d.kind == InputDist::Kind::kGaussian && !(d.stddev > 0.0))
    throw std::invalid_argument("InputDist: stddev must be > 0");
}

inline const char* to_string(InputDist::Kind k) {
  switch (k) {
    case InputDist::Kind::kUniform: return "uniform";
    case InputDist::Kind::kGaussian: return "gaussian";
    case InputDist::Kind::kSparseUniform: return "sparse-uniform";
  }
  return "uniform";
}

inline InputDist::Kind input_dist_kind_from_string(const std::string& s) {
  if (s == "uniform") return InputDist::Kind::kUniform;
  if (s == "gaussian") return InputDist::Kind::kGaussian;
  if (s == "sparse-uniform") return InputDist::Kind::kSparseUniform;
  throw std::invalid_argument("unknown input distribution '" + s +
                              "' (expected uniform, gaussian or sparse-uniform)");
}

/// rows x batch matrix of inputs. Entries are drawn column by column from the
/// given stream; the draw count per entry is fixed, so the result depends only
/// on the stream's starting state.
inline Eigen::MatrixXd draw_inputs(const InputDist& dist, int rows, int batch,
                                   RngStream& rng) {
  validate(dist);
  if (rows < 1 || batch < 1)
    throw std::invalid_argument("draw_inputs: rows and batch must be >= 1");
  Eigen::MatrixXd x(rows, batch);
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < rows; ++i) {
      switch (dist.kind) {
        case InputDist::Kind::kUniform:
          x(i, b) = rng.uniform(-1.0, 1.0);
          break;
        case InputDist::Kind::kGaussian:
          x(i, b) = std::clamp(rng.normal(0.0, dist.stddev), -1.0, 1.0);
          break;
        case InputDist::Kind::kSparseUniform: {
          const bool keep = rng.uniform() >= dist.sparsity;
          const double v = rng.uniform(-1.0, 1.0);
          x(i, b) = keep ? v : 0.0;
          break;
        }
      }
    }
  }
  return x;
}

}  // namespace aimc
