// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "epfind/errors.hpp"
#include "epfind/gpr.hpp"
#include "epfind/grouping.hpp"
#include "epfind/models.hpp"

namespace epfind::epsearch {

using grouping::TrainingPair;
using models::Complex;

// How a pair of eigenvalues out of a fresh spectrum compares against the
// surrogate's prediction: a chi-square style sum over the four modelled
// components Re p, Im p, Re s, Im s, each weighted by its predicted
// variance. The true successor pair scores orders of magnitude below every
// impostor.
struct PairScore {
  std::pair<int, int> pair;  // indices into the spectrum, i < j
  double discrepancy = 0.0;
};

struct PairRanking {
  std::vector<PairScore> ranked;  // ascending discrepancy
  // ranked[1].discrepancy / ranked[0].discrepancy; infinity when only one
  // pair exists or the best discrepancy is exactly zero.
  double gap_ratio = 0.0;
};

// pred_p / pred_s: predictions for (Re, Im) of p and s at the probed kappa.
// Variances must already be floored; a zero variance throws ZeroVariance.
PairRanking pair_discrepancy_all(const Eigen::VectorXcd& spectrum,
                                 const std::array<gpr::Prediction, 2>& pred_p,
                                 const std::array<gpr::Prediction, 2>& pred_s);

struct RootSearchOptions {
  double fd_step = 1e-6;        // finite-difference step, relative
  int max_newton = 60;          // Newton iterations per start
  int pattern_iterations = 80;  // fallback compass search budget
  double residual_tol = 1e-9;   // |p_hat| <= tol * scale counts as a root
};

struct RootSearchResult {
  Complex kappa{0.0, 0.0};
  double residual = 0.0;  // |p_hat| at kappa, raw units
  bool root_found = false;
};

// Argmin of |predicted p| over the kappa plane for a two-target model
// (Re p, Im p). Damped Newton from every start, compass-search fallback,
// best end point wins. Never throws for a missing root; inspect root_found.
RootSearchResult root_search(const gpr::GprModel& model_p,
                             const std::vector<Complex>& starts,
                             const RootSearchOptions& options = {});

enum class SearchStatus {
  kRunning,
  kConverged,          // kernel-eigenvalue drop + shrinking pair distance
  kConvergedDeltaLambda,  // absolute pair-distance threshold reached
  kBudgetExhausted,    // max_iterations hit without the signals above
};

struct EpSearchConfig {
  int max_iterations = 25;
  double kernel_drop_factor = 1e3;  // min-eigenvalue drop vs the two preceding fits
  double min_gap = 10.0;            // pair ranking gap below this flags ambiguity
  // After this iteration one extra diagonalization probes the straight-line
  // extrapolation of the last step; <= 0 disables.
  int exploration_after = 2;
  // When > 0, convergence additionally requires delta_lambda <= this, and a
  // collapsed kernel together with such a delta_lambda converges on its own.
  double delta_lambda_tol = 0.0;
  double variance_floor_rel = 1e-16;  // times output_scale^2
  gpr::Hyperparameters hyper0;        // see make_default_config for the pipeline values
  gpr::FitOptions fit;
  RootSearchOptions root;
};

// Pipeline defaults: near-zero noise (the diagonalizations are exact to
// machine precision), standardized outputs, optimizer on.
EpSearchConfig make_default_config();

struct EpSearchState {
  std::vector<TrainingPair> training;           // grows by one per iteration (+ exploration)
  std::vector<Complex> kappa_history;           // root estimates, one per iteration
  std::vector<double> kernel_eig_history;       // min kernel eigenvalue per fit
  std::vector<double> delta_lambda_history;     // [0] = initial-set mean |l1 - l2|
  std::vector<double> gap_ratio_history;
  std::vector<Complex> exploration_points;
  SearchStatus status = SearchStatus::kRunning;
  int iterations = 0;
  int diagonalizations = 0;  // beyond the initial training set
  bool ambiguous_pair = false;           // some ranking gap fell below min_gap
  int monotonicity_violations = 0;       // delta_lambda increased at these many steps
  // Iterations whose delta_lambda set a new running minimum; the estimate
  // only ever moves to one of these, so its delta_lambda never goes up.
  std::vector<int> accepted_iterations;
  // Collapse ratio recorded when the kernel signal fired, 0 otherwise.
  double convergence_drop_ratio = 0.0;
};

// Drop of the min kernel eigenvalue at the latest fit, measured against the
// best of the two fits before it, with the collapsed value floored at the
// noise level.  0 when fewer than two fits exist.
double kernel_collapse_ratio(const std::vector<double>& eig, double noise_variance);

// Pure read of the convergence signals on the recorded histories.
SearchStatus check_convergence(const EpSearchState& state, const EpSearchConfig& config);

struct EpResult {
  Complex kappa_ep{0.0, 0.0};
  Complex lambda1{0.0, 0.0};
  Complex lambda2{0.0, 0.0};
  double delta_lambda = 0.0;  // |lambda1 - lambda2| at kappa_ep
  std::optional<std::array<double, 2>> physical;  // through the parameter map
  EpSearchState diagnostics;
};

// The full search loop: fit surrogates for p and s on the training pairs,
// locate the root of the predicted p, diagonalize there, pick the successor
// pair by discrepancy, extend the training set, repeat until the kernel
// matrix signals that new points stopped adding information.
EpResult iterate(const models::MatrixFamily& family,
                 const std::vector<TrainingPair>& initial,
                 const EpSearchConfig& config = make_default_config(),
                 const std::optional<models::ParameterMap>& map = std::nullopt);

struct BruteForceOptions {
  int max_iterations = 200;
  double fd_step = 1e-7;        // relative, for the complex derivative
  double accept_abs_p = 1e-12;  // |p| below this counts as the degeneracy
};

struct BruteForceResult {
  Complex kappa{0.0, 0.0};
  Complex lambda1{0.0, 0.0};
  Complex lambda2{0.0, 0.0};
  double abs_p = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

// Reference root finder on the exact discriminant of the closest eigenvalue
// pair: complex Newton with damping, no surrogate anywhere. Iterates until
// |p| stops improving; in exact arithmetic |p| -> 0 at the degeneracy, in
// doubles it saturates near 1e-16 and the accept threshold reflects that.
// Throws NoRootFound when the best |p| stays above accept_abs_p.
BruteForceResult brute_force_ep(const models::MatrixFamily& family, Complex start,
                                const BruteForceOptions& options = {});

}  // namespace epfind::epsearch
