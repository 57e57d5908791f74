// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#include "epfind/epsearch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "epfind/linalg.hpp"

namespace epfind::epsearch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Vector2d to_vec(Complex z) { return Eigen::Vector2d(z.real(), z.imag()); }
Complex to_complex(const Eigen::Vector2d& v) { return Complex(v(0), v(1)); }

// Predicted (Re p, Im p) at x, raw units.
Eigen::Vector2d predicted_p(const gpr::GprModel& model, const Eigen::Vector2d& x) {
  return Eigen::Vector2d(model.predict(x, 0).mean, model.predict(x, 1).mean);
}

struct PolishOutcome {
  Eigen::Vector2d x;
  double residual;
};

// Damped Newton on the surrogate field F(x) = (Re p_hat, Im p_hat).
PolishOutcome newton_polish(const gpr::GprModel& model, Eigen::Vector2d x,
                            const RootSearchOptions& options) {
  double best_res = predicted_p(model, x).norm();
  Eigen::Vector2d best_x = x;

  for (int it = 0; it < options.max_newton; ++it) {
    const Eigen::Vector2d f = predicted_p(model, x);
    const double res = f.norm();
    if (res < best_res) {
      best_res = res;
      best_x = x;
    }

    const double h = options.fd_step * (1.0 + x.norm());
    Eigen::Matrix2d jac;
    for (int d = 0; d < 2; ++d) {
      Eigen::Vector2d xp = x, xm = x;
      xp(d) += h;
      xm(d) -= h;
      jac.col(d) = (predicted_p(model, xp) - predicted_p(model, xm)) / (2.0 * h);
    }
    const double det = jac.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-300) {
      break;
    }
    const Eigen::Vector2d step = jac.partialPivLu().solve(-f);

    double damping = 1.0;
    bool accepted = false;
    for (int half = 0; half < 16; ++half) {
      const Eigen::Vector2d trial = x + damping * step;
      const double trial_res = predicted_p(model, trial).norm();
      if (trial_res < res) {
        x = trial;
        accepted = true;
        break;
      }
      damping *= 0.5;
    }
    if (!accepted || step.norm() * damping < 1e-15 * (1.0 + x.norm())) {
      break;
    }
  }

  const double final_res = predicted_p(model, x).norm();
  if (final_res < best_res) {
    best_res = final_res;
    best_x = x;
  }
  return {best_x, best_res};
}

// Compass search on |F|; coarse but immune to a singular surrogate Jacobian.
PolishOutcome pattern_search(const gpr::GprModel& model, Eigen::Vector2d x,
                             double initial_radius, const RootSearchOptions& options) {
  double radius = initial_radius;
  double best = predicted_p(model, x).norm();
  for (int it = 0; it < options.pattern_iterations && radius > 1e-14; ++it) {
    bool improved = false;
    for (const auto& dir : {Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0),
                            Eigen::Vector2d(0, 1), Eigen::Vector2d(0, -1)}) {
      const Eigen::Vector2d trial = x + radius * dir;
      const double res = predicted_p(model, trial).norm();
      if (res < best) {
        best = res;
        x = trial;
        improved = true;
      }
    }
    if (!improved) {
      radius *= 0.5;
    }
  }
  return {x, best};
}

double mean_pair_distance(const std::vector<TrainingPair>& pairs) {
  double sum = 0.0;
  for (const auto& tp : pairs) {
    sum += std::abs(tp.lambda1 - tp.lambda2);
  }
  return pairs.empty() ? 0.0 : sum / static_cast<double>(pairs.size());
}

// Scale the p-residual tolerance lives on: spread of the raw |p| data.
double p_scale(const gpr::GprModel& model_p) {
  return std::max({std::abs(model_p.output_scale(0)), std::abs(model_p.output_scale(1)),
                   1e-300});
}

}  // namespace

PairRanking pair_discrepancy_all(const Eigen::VectorXcd& spectrum,
                                 const std::array<gpr::Prediction, 2>& pred_p,
                                 const std::array<gpr::Prediction, 2>& pred_s) {
  const Eigen::Index dim = spectrum.size();
  if (dim < 2) {
    throw DimensionMismatch("pair_discrepancy_all: need at least two eigenvalues");
  }
  for (const auto& pr : {pred_p[0], pred_p[1], pred_s[0], pred_s[1]}) {
    if (pr.variance == 0.0) {
      throw ZeroVariance(
          "pair_discrepancy_all: a predicted variance is exactly zero; apply a variance floor");
    }
    if (pr.variance < 0.0 || !std::isfinite(pr.variance) || !std::isfinite(pr.mean)) {
      throw NonFiniteError("pair_discrepancy_all: invalid prediction");
    }
  }

  PairRanking out;
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i + 1; j < dim; ++j) {
      const Complex diff = spectrum(i) - spectrum(j);
      const Complex p = diff * diff;
      const Complex s = 0.5 * (spectrum(i) + spectrum(j));
      const double c =
          (p.real() - pred_p[0].mean) * (p.real() - pred_p[0].mean) / (2.0 * pred_p[0].variance) +
          (p.imag() - pred_p[1].mean) * (p.imag() - pred_p[1].mean) / (2.0 * pred_p[1].variance) +
          (s.real() - pred_s[0].mean) * (s.real() - pred_s[0].mean) / (2.0 * pred_s[0].variance) +
          (s.imag() - pred_s[1].mean) * (s.imag() - pred_s[1].mean) / (2.0 * pred_s[1].variance);
      out.ranked.push_back(PairScore{{static_cast<int>(i), static_cast<int>(j)}, c});
    }
  }
  std::sort(out.ranked.begin(), out.ranked.end(),
            [](const PairScore& a, const PairScore& b) { return a.discrepancy < b.discrepancy; });
  if (out.ranked.size() < 2 || out.ranked.front().discrepancy == 0.0) {
    out.gap_ratio = kInf;
  } else {
    out.gap_ratio = out.ranked[1].discrepancy / out.ranked[0].discrepancy;
  }
  return out;
}

RootSearchResult root_search(const gpr::GprModel& model_p, const std::vector<Complex>& starts,
                             const RootSearchOptions& options) {
  if (model_p.n_targets() < 2) {
    throw DimensionMismatch("root_search: model must carry (Re p, Im p) targets");
  }
  if (starts.empty()) {
    throw std::invalid_argument("root_search: no start points");
  }

  const double scale = p_scale(model_p);
  // Fallback radius: typical spread of the training inputs.
  const Eigen::MatrixXd& x = model_p.inputs();
  const double span = std::max(
      {(x.col(0).maxCoeff() - x.col(0).minCoeff()), (x.col(1).maxCoeff() - x.col(1).minCoeff()),
       1e-8});

  PolishOutcome best{to_vec(starts.front()), kInf};
  for (const Complex start : starts) {
    PolishOutcome out = newton_polish(model_p, to_vec(start), options);
    if (out.residual > options.residual_tol * scale) {
      const PolishOutcome fallback =
          pattern_search(model_p, out.x, 0.05 * span, options);
      if (fallback.residual < out.residual) {
        out = newton_polish(model_p, fallback.x, options);
        if (fallback.residual < out.residual) {
          out = fallback;
        }
      }
    }
    if (out.residual < best.residual) {
      best = out;
    }
  }

  RootSearchResult result;
  result.kappa = to_complex(best.x);
  result.residual = best.residual;
  result.root_found = best.residual <= options.residual_tol * scale;
  return result;
}

EpSearchConfig make_default_config() {
  EpSearchConfig config;
  config.hyper0.kernel = gpr::KernelKind::kMatern52;
  config.hyper0.signal_variance = 1.0;
  config.hyper0.length_scales = Eigen::Array2d::Ones();
  // Diagonalizations are deterministic; the residual noise floor only keeps
  // the Gram matrix factorable once probes cluster around the degeneracy.
  config.hyper0.noise_variance = 1e-12;
  config.fit.optimize = true;
  config.fit.standardize = true;
  return config;
}

double kernel_collapse_ratio(const std::vector<double>& eig, double noise_variance) {
  if (eig.size() < 2) {
    return 0.0;
  }
  // Once near-duplicate points enter the Gram matrix its true smallest
  // eigenvalue is the noise variance; the computed one is that plus
  // rounding of order n*eps*|K|, which can be negative.  Flooring keeps
  // the ratio finite and meaningful after the collapse.
  const double floor = std::max(noise_variance, 1e-13);
  const double current = std::max(eig.back(), floor);
  // The collapse can straddle two fits when the iterate approaches the
  // cluster in two hops, so measure against the best of the two fits
  // preceding the current one.
  double reference = 0.0;
  const std::size_t k = eig.size();
  for (std::size_t i = (k >= 3 ? k - 3 : 0); i + 1 < k; ++i) {
    reference = std::max(reference, eig[i]);
  }
  return reference / current;
}

SearchStatus check_convergence(const EpSearchState& state, const EpSearchConfig& config) {
  const auto& eig = state.kernel_eig_history;
  const auto& dl = state.delta_lambda_history;
  if (eig.size() < 2 || dl.size() < 2) {
    return SearchStatus::kRunning;
  }
  const double dl_current = dl.back();
  const double dl_initial = dl.front();

  const bool pair_shrinking = dl_current < dl_initial;
  const bool dl_gate = config.delta_lambda_tol <= 0.0 || dl_current <= config.delta_lambda_tol;

  if (kernel_collapse_ratio(eig, config.hyper0.noise_variance) >= config.kernel_drop_factor &&
      pair_shrinking && dl_gate) {
    return SearchStatus::kConverged;
  }
  // A kernel that has already collapsed cannot drop by the factor again;
  // reaching the absolute pair-distance target there is also convergence.
  if (config.delta_lambda_tol > 0.0 && dl_current <= config.delta_lambda_tol) {
    return SearchStatus::kConvergedDeltaLambda;
  }
  return SearchStatus::kRunning;
}

namespace {

struct FittedModels {
  gpr::GprModel p;
  gpr::GprModel s;
};

FittedModels fit_models(const std::vector<TrainingPair>& training,
                        const EpSearchConfig& config,
                        const std::optional<FittedModels>& previous) {
  const Eigen::Index n = static_cast<Eigen::Index>(training.size());
  Eigen::MatrixXd x(n, 2), yp(n, 2), ys(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& tp = training[static_cast<std::size_t>(i)];
    x(i, 0) = tp.kappa.real();
    x(i, 1) = tp.kappa.imag();
    const Complex p = tp.p();
    const Complex s = tp.s();
    yp(i, 0) = p.real();
    yp(i, 1) = p.imag();
    ys(i, 0) = s.real();
    ys(i, 1) = s.imag();
  }

  // Seed length scales from the input spread; warm-start from the previous
  // fit when there is one, which keeps the optimizer cheap and steady.
  auto seeded = [&](const gpr::GprModel* prev) {
    gpr::Hyperparameters h = config.hyper0;
    if (prev != nullptr) {
      h = prev->hyperparameters(0);
      h.noise_variance = config.hyper0.noise_variance;
    } else {
      const double sx = std::sqrt((x.col(0).array() - x.col(0).mean()).square().mean());
      const double sy = std::sqrt((x.col(1).array() - x.col(1).mean()).square().mean());
      h.length_scales << std::max(sx, 1e-3), std::max(sy, 1e-3);
    }
    return h;
  };

  FittedModels out{
      gpr::GprModel::fit(x, yp, seeded(previous ? &previous->p : nullptr), config.fit),
      gpr::GprModel::fit(x, ys, seeded(previous ? &previous->s : nullptr), config.fit)};
  return out;
}

double min_kernel_eigenvalue(const FittedModels& models) {
  double out = kInf;
  for (const gpr::GprModel* m : {&models.p, &models.s}) {
    for (int t = 0; t < m->n_targets(); ++t) {
      const Eigen::VectorXd eigs = linalg::symmetric_eigenvalues(m->covariance_matrix(t));
      out = std::min(out, eigs(0));
    }
  }
  return out;
}

std::array<gpr::Prediction, 2> floored_predictions(const gpr::GprModel& model,
                                                   const Eigen::Vector2d& x,
                                                   double floor_rel) {
  std::array<gpr::Prediction, 2> out{model.predict(x, 0), model.predict(x, 1)};
  for (int t = 0; t < 2; ++t) {
    const double scale = model.output_scale(t);
    out[static_cast<std::size_t>(t)].variance =
        std::max(out[static_cast<std::size_t>(t)].variance, floor_rel * scale * scale);
  }
  return out;
}

}  // namespace

EpResult iterate(const models::MatrixFamily& family, const std::vector<TrainingPair>& initial,
                 const EpSearchConfig& config, const std::optional<models::ParameterMap>& map) {
  if (initial.size() < 8) {
    throw std::invalid_argument("iterate: need at least 8 initial training pairs, got " +
                                std::to_string(initial.size()));
  }
  if (config.max_iterations < 1) {
    throw std::invalid_argument("iterate: max_iterations must be at least 1");
  }

  EpSearchState state;
  state.training = initial;
  state.delta_lambda_history.push_back(mean_pair_distance(initial));

  std::optional<FittedModels> models;
  struct IterateRecord {
    Complex kappa;
    Complex lambda1;
    Complex lambda2;
  };
  std::vector<IterateRecord> iterates;
  double dl_best = state.delta_lambda_history.front();

  // Diagonalize at kappa, rank the eigenvalue pairs against the surrogate,
  // append the winner to the training set. Shared by the regular iteration
  // step and the exploration probe.
  auto absorb_point = [&](Complex kappa, bool record_gap) -> std::pair<Complex, Complex> {
    // A probe exactly on top of an existing sample adds no information and
    // breaks the zero-noise Gram matrix; nudge it off by one part in 1e12.
    for (const auto& tp : state.training) {
      if (tp.kappa == kappa) {
        kappa += Complex(1e-12 * (1.0 + std::abs(kappa)), 0.0);
        break;
      }
    }
    const auto decomp = linalg::eigendecompose(family.evaluate(kappa), false);
    ++state.diagonalizations;

    const Eigen::Vector2d xq = to_vec(kappa);
    const auto pred_p = floored_predictions(models->p, xq, config.variance_floor_rel);
    const auto pred_s = floored_predictions(models->s, xq, config.variance_floor_rel);
    const PairRanking ranking = pair_discrepancy_all(decomp.eigenvalues, pred_p, pred_s);
    if (record_gap) {
      state.gap_ratio_history.push_back(ranking.gap_ratio);
      if (ranking.gap_ratio < config.min_gap) {
        state.ambiguous_pair = true;
      }
    }

    const auto [i, j] = ranking.ranked.front().pair;
    Complex l1 = decomp.eigenvalues(i);
    Complex l2 = decomp.eigenvalues(j);
    if (l2.real() < l1.real() || (l2.real() == l1.real() && l2.imag() < l1.imag())) {
      std::swap(l1, l2);
    }
    state.training.push_back(TrainingPair{kappa, l1, l2});
    return {l1, l2};
  };

  for (int k = 1; k <= config.max_iterations; ++k) {
    state.iterations = k;
    models = fit_models(state.training, config, models);
    state.kernel_eig_history.push_back(min_kernel_eigenvalue(*models));

    // Starts: the sample with the smallest |p| seen so far, plus the
    // previous root estimate once there is one.
    std::vector<Complex> starts;
    {
      double best = kInf;
      Complex best_kappa = state.training.front().kappa;
      for (const auto& tp : state.training) {
        const double ap = std::abs(tp.p());
        if (ap < best) {
          best = ap;
          best_kappa = tp.kappa;
        }
      }
      starts.push_back(best_kappa);
    }
    if (!state.kappa_history.empty()) {
      starts.push_back(state.kappa_history.back());
    }

    const RootSearchResult root = root_search(models->p, starts, config.root);
    const Complex kappa_k = root.kappa;
    state.kappa_history.push_back(kappa_k);

    const auto [l1, l2] = absorb_point(kappa_k, true);
    iterates.push_back(IterateRecord{state.training.back().kappa, l1, l2});

    state.delta_lambda_history.push_back(std::abs(l1 - l2));
    const auto& dl = state.delta_lambda_history;
    if (dl.size() >= 2 && dl.back() > dl[dl.size() - 2]) {
      ++state.monotonicity_violations;
    }
    if (dl.back() < dl_best) {
      dl_best = dl.back();
      state.accepted_iterations.push_back(k);
    }

    if (config.exploration_after > 0 && k == config.exploration_after &&
        state.kappa_history.size() >= 2) {
      const Complex prev = state.kappa_history[state.kappa_history.size() - 2];
      const Complex probe = kappa_k + (kappa_k - prev);
      state.exploration_points.push_back(probe);
      absorb_point(probe, false);
    }

    state.status = check_convergence(state, config);
    if (state.status == SearchStatus::kConverged) {
      state.convergence_drop_ratio =
          kernel_collapse_ratio(state.kernel_eig_history, config.hyper0.noise_variance);
    }
    if (state.status != SearchStatus::kRunning) {
      break;
    }
  }
  if (state.status == SearchStatus::kRunning) {
    state.status = SearchStatus::kBudgetExhausted;
  }

  // The estimate is the iterate whose pair sits closest together; on a
  // monotone run that is the final one, and a late noise-level uptick in
  // delta_lambda cannot drag the estimate with it.
  std::size_t best = 0;
  for (std::size_t i = 1; i < iterates.size(); ++i) {
    if (std::abs(iterates[i].lambda1 - iterates[i].lambda2) <
        std::abs(iterates[best].lambda1 - iterates[best].lambda2)) {
      best = i;
    }
  }
  EpResult result;
  result.kappa_ep = iterates[best].kappa;
  result.lambda1 = iterates[best].lambda1;
  result.lambda2 = iterates[best].lambda2;
  result.delta_lambda = std::abs(result.lambda1 - result.lambda2);
  if (map) {
    result.physical = map->to_physical(result.kappa_ep);
  }
  result.diagnostics = std::move(state);
  return result;
}

BruteForceResult brute_force_ep(const models::MatrixFamily& family, Complex start,
                                const BruteForceOptions& options) {
  int evaluations = 0;

  // p of the closest pair; locally analytic in kappa, zero at the degeneracy.
  auto closest_pair_p = [&](Complex kappa) -> std::pair<Complex, std::pair<Complex, Complex>> {
    const auto decomp = linalg::eigendecompose(family.evaluate(kappa), false);
    ++evaluations;
    const Eigen::Index dim = decomp.eigenvalues.size();
    double best = kInf;
    Complex l1{0.0, 0.0}, l2{0.0, 0.0};
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = i + 1; j < dim; ++j) {
        const double gap = std::abs(decomp.eigenvalues(i) - decomp.eigenvalues(j));
        if (gap < best) {
          best = gap;
          l1 = decomp.eigenvalues(i);
          l2 = decomp.eigenvalues(j);
        }
      }
    }
    const Complex diff = l1 - l2;
    return {diff * diff, {l1, l2}};
  };

  Complex kappa = start;
  auto [p, pair] = closest_pair_p(kappa);
  Complex best_kappa = kappa;
  auto best_pair = pair;
  double best_abs = std::abs(p);
  int stall = 0;
  int iterations = 0;

  for (int it = 0; it < options.max_iterations; ++it) {
    iterations = it + 1;
    const double h = options.fd_step * (1.0 + std::abs(kappa));
    const Complex p_plus = closest_pair_p(kappa + h).first;
    const Complex p_minus = closest_pair_p(kappa - h).first;
    const Complex dp = (p_plus - p_minus) / (2.0 * h);
    if (std::abs(dp) < 1e-300) {
      break;
    }

    const Complex full_step = -p / dp;
    double damping = 1.0;
    bool moved = false;
    for (int half = 0; half < 40; ++half) {
      const Complex trial = kappa + damping * full_step;
      const auto [p_trial, pair_trial] = closest_pair_p(trial);
      if (std::abs(p_trial) < std::abs(p)) {
        kappa = trial;
        p = p_trial;
        pair = pair_trial;
        moved = true;
        break;
      }
      damping *= 0.5;
    }

    if (std::abs(p) < best_abs) {
      best_abs = std::abs(p);
      best_kappa = kappa;
      best_pair = pair;
      stall = 0;
    } else {
      ++stall;
    }
    if (!moved || stall >= 3) {
      break;  // saturated at the double-precision floor
    }
  }

  if (best_abs > options.accept_abs_p) {
    throw NoRootFound("brute_force_ep: |p| bottomed out at " + std::to_string(best_abs) +
                      " above the acceptance threshold; the start may not enclose a degeneracy");
  }

  BruteForceResult result;
  result.kappa = best_kappa;
  result.lambda1 = best_pair.first;
  result.lambda2 = best_pair.second;
  result.abs_p = best_abs;
  result.iterations = iterations;
  result.evaluations = evaluations;
  return result;
}

}  // namespace epfind::epsearch
