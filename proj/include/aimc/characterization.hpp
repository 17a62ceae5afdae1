/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "aimc/core.hpp"
#include "aimc/input_dist.hpp"
#include "aimc/rng.hpp"

/**
 * MVM characterization: estimate what weights a core effectively implements
 * and split its output error into a linear part and the rest.
 *
 * Given probe inputs X (r x N), targets G and core outputs Y~ = mvm(X):
 *
 *   G_hat      = argmin_G ||Y~ - G^T X||_F^2 (+ ridge),  column by column
 *   eps_total     = 100 * ||Y~ - G^T X||_F / ||G^T X||_F
 *   eps_nonlinear = 100 * sqrt(N/(N-r)) * ||Y~ - G_hat^T X||_F / ||G^T X||_F
 *   eps_weight    = 100 * ||G_hat - G||_F / ||G||_F
 *
 * The sqrt(N/(N-r)) factor on eps_nonlinear is the usual degrees-of-freedom
 * correction: the raw in-sample residual of a fit with r regressors per
 * column understates the residual the fitted operator would leave on fresh
 * inputs, and dividing the squared residual by N-r instead of N removes that
 * bias. Without the factor (and with ridge = 0) the projection residual
 * decomposes exactly as eps_total^2 = raw^2 + eps_linfit^2, where eps_linfit
 * is the part of the error a better linear operator could have removed.
 * eps_nonlinear estimates the floor no weight programming can beat.
 *
 * The reference product G^T X uses the unquantized probe inputs: the digital
 * side knows exactly what it asked for, so encoder quantization error counts
 * as core error.
 *
 * output_scale rescales the measured outputs before anything is estimated.
 * Its intended use is global drift compensation: re-measure the mean absolute
 * output on a fixed probe batch and divide the value taken right after
 * programming by the current one. That single factor undoes the common
 * conductance decay, the same lumped correction a deployed PCM system applies
 * between recalibrations, and it needs no knowledge of the stored weights.
 */

namespace aimc {

struct CharacterizationConfig {
  int n_inputs = 0;          // probe vectors N; 0 = auto (16 * rows)
  InputDist input_dist;      // uniform by default
  double ridge = 0.0;        // Tikhonov regularizer
  double output_scale = 1.0; // multiplies measured outputs (drift compensation)
};

struct CharacterizationReport {
  Eigen::MatrixXd g_hat;
  double eps_weight = 0.0;
  double eps_total = 0.0;
  double eps_nonlinear = 0.0;
  int n_inputs = 0;
  double timestamp = 0.0;
};

inline void validate(const CharacterizationConfig& cfg) {
  if (cfg.n_inputs < 0)
    throw std::invalid_argument("CharacterizationConfig: n_inputs must be >= 0");
  if (!(cfg.ridge >= 0.0))
    throw std::invalid_argument("CharacterizationConfig: ridge must be >= 0");
  if (!(cfg.output_scale > 0.0))
    throw std::invalid_argument("CharacterizationConfig: output_scale must be positive");
  validate(cfg.input_dist);
}

inline double relative_error_percent(const Eigen::MatrixXd& a,
                                     const Eigen::MatrixXd& ref) {
  return 100.0 * (a - ref).norm() / ref.norm();
}

/**
 * Least-squares weight estimate from probes x (r x N) and observed outputs
 * y_tilde (c x N). Solved via column-pivoting QR on the stacked system; with
 * ridge > 0 the system is augmented with sqrt(ridge) * I rows.
 */
inline Eigen::MatrixXd estimate_weights(const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& y_tilde,
                                        double ridge = 0.0) {
  if (x.cols() != y_tilde.cols())
    throw std::invalid_argument("estimate_weights: probe/output column mismatch");
  if (!(ridge >= 0.0)) throw std::invalid_argument("estimate_weights: ridge must be >= 0");
  const auto r = x.rows();
  const auto n = x.cols();

  Eigen::MatrixXd a;
  Eigen::MatrixXd rhs;
  if (ridge > 0.0) {
    a.resize(n + r, r);
    a.topRows(n) = x.transpose();
    a.bottomRows(r) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(r, r);
    rhs = Eigen::MatrixXd::Zero(n + r, y_tilde.rows());
    rhs.topRows(n) = y_tilde.transpose();
  } else {
    a = x.transpose();
    rhs = y_tilde.transpose();
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (ridge == 0.0 && qr.rank() < r)
    throw std::invalid_argument(
        "estimate_weights: probe matrix is rank-deficient; use more inputs or ridge > 0");
  return qr.solve(rhs);
}

/// Mean absolute core output on a probe batch. The ratio of two such
/// measurements on the same batch, taken right after programming and again
/// later, is the global drift compensation factor for output_scale.
inline double mean_abs_output(CrossbarCore& core, const Eigen::MatrixXd& x) {
  return mvm_batch(core, x).cwiseAbs().mean();
}

/// Characterization with caller-supplied probe inputs (r x N, in [-1, 1]).
inline CharacterizationReport characterize_with_inputs(CrossbarCore& core,
                                                       const Eigen::MatrixXd& target,
                                                       const Eigen::MatrixXd& x,
                                                       double ridge = 0.0,
                                                       double output_scale = 1.0) {
  if (target.rows() != core.rows || target.cols() != core.cols)
    throw std::invalid_argument("characterize: target shape mismatch");
  if (x.rows() != core.rows)
    throw std::invalid_argument("characterize: probe shape mismatch");
  if (ridge == 0.0 && x.cols() < core.rows)
    throw std::invalid_argument("characterize: need at least r probe vectors");
  if (!(output_scale > 0.0))
    throw std::invalid_argument("characterize: output_scale must be positive");

  const Eigen::MatrixXd y_tilde = output_scale * mvm_batch(core, x);
  const Eigen::MatrixXd y = target.transpose() * x;
  if (y.norm() == 0.0)
    throw std::runtime_error("characterize: degenerate target (reference outputs are all zero)");

  CharacterizationReport rep;
  rep.g_hat = estimate_weights(x, y_tilde, ridge);
  rep.eps_total = relative_error_percent(y_tilde, y);
  const double n = static_cast<double>(x.cols());
  const double r = static_cast<double>(core.rows);
  const double dof = n > r ? std::sqrt(n / (n - r)) : 1.0;
  rep.eps_nonlinear = 100.0 * dof * (y_tilde - rep.g_hat.transpose() * x).norm() / y.norm();
  rep.eps_weight = relative_error_percent(rep.g_hat, target);
  rep.n_inputs = static_cast<int>(x.cols());
  rep.timestamp = core.clock;
  return rep;
}

/// Full methodology: draw N probes from cfg.input_dist and characterize.
inline CharacterizationReport characterize(CrossbarCore& core,
                                           const Eigen::MatrixXd& target,
                                           const CharacterizationConfig& cfg,
                                           RngStream rng) {
  validate(cfg);
  const int n = cfg.n_inputs > 0 ? cfg.n_inputs : 16 * core.rows;
  const Eigen::MatrixXd x = draw_inputs(cfg.input_dist, core.rows, n, rng);
  return characterize_with_inputs(core, target, x, cfg.ridge, cfg.output_scale);
}

}  // namespace aimc
