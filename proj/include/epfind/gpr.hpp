// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "epfind/errors.hpp"

namespace epfind::gpr {

enum class KernelKind {
  kMatern52,        // closed form, the workhorse
  kMaternGeneral,   // any nu > 0 via modified Bessel functions, for cross-checks
  kSquaredExponential,
};

struct Hyperparameters {
  double signal_variance = 1.0;
  Eigen::Array2d length_scales = Eigen::Array2d::Ones();  // per input dimension
  double noise_variance = 1e-6;
  double nu = 2.5;  // only read by kMaternGeneral
  KernelKind kernel = KernelKind::kMatern52;
};

// Kernel value between two points. Adds noise_variance when the points are
// bitwise identical; inside a Gram matrix the noise belongs on the diagonal
// by index, which build_gram handles itself.
double kernel_value(const Eigen::Vector2d& xp, const Eigen::Vector2d& xq,
                    const Hyperparameters& h);

// Noiseless kernel as a function of the length-scale-normalized distance r.
double kernel_profile(double r, const Hyperparameters& h);

// Training-set Gram matrix, noise_variance on the diagonal.
Eigen::MatrixXd build_gram(const Eigen::MatrixXd& x, const Hyperparameters& h);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct FitOptions {
  bool optimize = true;        // maximize log marginal likelihood
  bool optimize_noise = false; // noise_variance stays frozen unless set
  bool standardize = true;     // shift/scale each output column internally
  int restarts = 5;
  int max_evaluations = 500;   // per restart
  double log_sf2_lo = -10.0, log_sf2_hi = 10.0;  // bounds on log signal_variance
  double log_len_lo = -6.0, log_len_hi = 6.0;    // bounds on log length_scales
  double log_sn2_lo = -30.0, log_sn2_hi = 0.0;   // bounds when optimizing noise
  std::uint64_t seed = 0x9b1f; // restart perturbations are deterministic
};

// Independent scalar Gaussian-process regressors over a shared 2-dim input
// set, one per output column. Each output is standardized internally; means,
// variances and log marginal likelihoods are reported back in raw units
// unless stated otherwise.
class GprModel {
 public:
  // x: n x 2 inputs, y: n x m outputs. h0 seeds every column's
  // hyperparameters. Throws NotPositiveDefinite for duplicated inputs with
  // zero noise, NonFiniteError on bad data.
  static GprModel fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                      const Hyperparameters& h0 = {}, const FitOptions& options = {});

  int n_points() const { return static_cast<int>(x_.rows()); }
  int n_targets() const { return static_cast<int>(targets_.size()); }

  Prediction predict(const Eigen::Vector2d& x, int target) const;
  std::vector<Prediction> predict_all(const Eigen::Vector2d& x) const;

  // Of the standardized column; constant shift terms included.
  double log_marginal_likelihood(int target) const;

  // The fitted Gram matrix (standardized units, noise on the diagonal).
  Eigen::MatrixXd covariance_matrix(int target) const;

  // Leave-one-out residuals in raw units, cheap via the cached factor.
  Eigen::VectorXd loo_residuals(int target) const;

  const Hyperparameters& hyperparameters(int target) const;
  double output_shift(int target) const;
  double output_scale(int target) const;
  // Optimizer ran out of its evaluation budget before the simplex collapsed.
  bool optimizer_stalled(int target) const;
  double jitter(int target) const;

  const Eigen::MatrixXd& inputs() const { return x_; }
  const Eigen::MatrixXd& raw_outputs() const { return y_raw_; }

  nlohmann::json to_json() const;
  static GprModel from_json(const nlohmann::json& doc);

 private:
  struct Target {
    Hyperparameters hyper;
    double shift = 0.0;
    double scale = 1.0;
    Eigen::MatrixXd chol;   // lower factor of gram + jitter
    Eigen::VectorXd alpha;  // (gram + jitter)^-1 y_std
    double lml = 0.0;
    double jitter = 0.0;
    bool stalled = false;
  };

  GprModel() = default;
  void check_target(int target) const;

  Eigen::MatrixXd x_;
  Eigen::MatrixXd y_raw_;
  std::vector<Target> targets_;
};

}  // namespace epfind::gpr
