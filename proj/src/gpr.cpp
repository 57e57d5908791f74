// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#include "epfind/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "epfind/linalg.hpp"
#include "nelder_mead.hpp"

namespace epfind::gpr {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kSqrt5 = 2.2360679774997896964091736687747;

// Same generator as the matrix families; restart perturbations must not
// depend on the platform's distribution implementations.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

double scaled_distance(const Eigen::Vector2d& xp, const Eigen::Vector2d& xq,
                       const Hyperparameters& h) {
  const Eigen::Array2d diff = (xp - xq).array() / h.length_scales;
  return std::sqrt((diff * diff).sum());
}

std::string kernel_name(KernelKind k) {
  switch (k) {
    case KernelKind::kMatern52: return "matern52";
    case KernelKind::kMaternGeneral: return "matern";
    case KernelKind::kSquaredExponential: return "squared_exponential";
  }
  return "unknown";
}

KernelKind kernel_from_name(const std::string& name) {
  if (name == "matern52") return KernelKind::kMatern52;
  if (name == "matern") return KernelKind::kMaternGeneral;
  if (name == "squared_exponential") return KernelKind::kSquaredExponential;
  throw ParseError("unknown kernel name '" + name + "'");
}

}  // namespace

double kernel_profile(double r, const Hyperparameters& h) {
  switch (h.kernel) {
    case KernelKind::kMatern52: {
      const double a = kSqrt5 * r;
      return h.signal_variance * (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
    case KernelKind::kMaternGeneral: {
      if (h.nu <= 0.0) {
        throw std::invalid_argument("matern smoothness nu must be positive");
      }
      if (r < 1e-12) {
        return h.signal_variance;
      }
      const double b = std::sqrt(2.0 * h.nu) * r;
      const double bk = std::cyl_bessel_k(h.nu, b);
      if (!std::isfinite(bk)) {
        // K_nu overflows only deep in the b << sqrt(nu) regime where the
        // kernel is flat to within b^2 / (4(nu - 1)) of its r = 0 value.
        return h.signal_variance;
      }
      // The prefactor 2^{1-nu} / Gamma(nu) * b^nu under/overflows long before
      // the kernel value itself does, so assemble the product in log space.
      // bk == 0 (huge b) gives log(0) = -inf and a clean 0.
      const double log_term = (1.0 - h.nu) * 0.69314718055994530941723212145818 -
                              std::lgamma(h.nu) + h.nu * std::log(b) +
                              std::log(bk);
      return h.signal_variance * std::exp(log_term);
    }
    case KernelKind::kSquaredExponential:
      return h.signal_variance * std::exp(-0.5 * r * r);
  }
  throw std::invalid_argument("unknown kernel kind");
}

double kernel_value(const Eigen::Vector2d& xp, const Eigen::Vector2d& xq,
                    const Hyperparameters& h) {
  double value = kernel_profile(scaled_distance(xp, xq, h), h);
  if (xp(0) == xq(0) && xp(1) == xq(1)) {
    value += h.noise_variance;
  }
  return value;
}

Eigen::MatrixXd build_gram(const Eigen::MatrixXd& x, const Hyperparameters& h) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = h.signal_variance + h.noise_variance;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = kernel_profile(
          scaled_distance(x.row(i).transpose(), x.row(j).transpose(), h), h);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

namespace {

struct FactorizedTarget {
  Eigen::MatrixXd chol;
  Eigen::VectorXd alpha;
  double lml = 0.0;
  double jitter = 0.0;
};

FactorizedTarget factorize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y_std,
                           const Hyperparameters& h) {
  const Eigen::MatrixXd gram = build_gram(x, h);
  const auto ladder = linalg::cholesky_ladder(gram);
  FactorizedTarget out;
  out.chol = ladder.factor;
  out.jitter = ladder.jitter;
  out.alpha = out.chol.transpose().triangularView<Eigen::Upper>().solve(
      out.chol.triangularView<Eigen::Lower>().solve(y_std));
  const double n = static_cast<double>(x.rows());
  out.lml = -0.5 * y_std.dot(out.alpha) -
            out.chol.diagonal().array().log().sum() - 0.5 * n * kLog2Pi;
  return out;
}

// theta layout: [log sf2, log l1, log l2] (+ [log sn2] when noise is free).
Hyperparameters theta_to_hyper(const Eigen::VectorXd& theta, const Hyperparameters& base,
                               bool with_noise) {
  Hyperparameters h = base;
  h.signal_variance = std::exp(theta(0));
  h.length_scales << std::exp(theta(1)), std::exp(theta(2));
  if (with_noise) {
    h.noise_variance = std::exp(theta(3));
  }
  return h;
}

}  // namespace

GprModel GprModel::fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                       const Hyperparameters& h0, const FitOptions& options) {
  if (x.rows() == 0 || x.cols() != 2) {
    throw DimensionMismatch("gpr fit: inputs must be n x 2 with n >= 1");
  }
  if (y.rows() != x.rows() || y.cols() < 1) {
    throw DimensionMismatch("gpr fit: outputs must be n x m with m >= 1");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw NonFiniteError("gpr fit: data contains NaN or Inf");
  }
  if (!(h0.signal_variance > 0.0) || !(h0.length_scales > 0.0).all() ||
      h0.noise_variance < 0.0) {
    throw std::invalid_argument("gpr fit: hyperparameters must be positive (noise >= 0)");
  }

  if (h0.noise_variance == 0.0 && !options.optimize_noise) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
        if (x(i, 0) == x(j, 0) && x(i, 1) == x(j, 1)) {
          throw NotPositiveDefinite(
              "gpr fit: rows " + std::to_string(i) + " and " + std::to_string(j) +
              " are identical inputs with zero noise variance; deduplicate the data or "
              "set a small noise_variance");
        }
      }
    }
  }

  GprModel model;
  model.x_ = x;
  model.y_raw_ = y;
  model.targets_.resize(static_cast<std::size_t>(y.cols()));

  const int n_theta = options.optimize_noise ? 4 : 3;

  for (Eigen::Index t = 0; t < y.cols(); ++t) {
    Target& target = model.targets_[static_cast<std::size_t>(t)];
    target.hyper = h0;

    const Eigen::VectorXd y_col = y.col(t);
    if (options.standardize) {
      target.shift = y_col.mean();
      const double var = (y_col.array() - target.shift).square().mean();
      target.scale = var > 0.0 ? std::sqrt(var) : 1.0;
    } else {
      target.shift = 0.0;
      target.scale = 1.0;
    }
    const Eigen::VectorXd y_std = (y_col.array() - target.shift) / target.scale;

    if (options.optimize) {
      Eigen::VectorXd lo(n_theta), hi(n_theta);
      lo << options.log_sf2_lo, options.log_len_lo, options.log_len_lo;
      hi << options.log_sf2_hi, options.log_len_hi, options.log_len_hi;
      if (options.optimize_noise) {
        lo.conservativeResize(4);
        hi.conservativeResize(4);
        lo(3) = options.log_sn2_lo;
        hi(3) = options.log_sn2_hi;
      }

      auto objective = [&](const Eigen::VectorXd& theta) -> double {
        for (int i = 0; i < n_theta; ++i) {
          if (theta(i) < lo(i) || theta(i) > hi(i)) {
            return std::numeric_limits<double>::infinity();
          }
        }
        try {
          const Hyperparameters h = theta_to_hyper(theta, target.hyper, options.optimize_noise);
          return -factorize(x, y_std, h).lml;
        } catch (const NotPositiveDefinite&) {
          return std::numeric_limits<double>::infinity();
        }
      };

      Eigen::VectorXd theta0(n_theta);
      theta0(0) = std::log(h0.signal_variance);
      theta0(1) = std::log(h0.length_scales(0));
      theta0(2) = std::log(h0.length_scales(1));
      if (options.optimize_noise) {
        theta0(3) = std::log(std::max(h0.noise_variance, 1e-300));
      }
      for (int i = 0; i < n_theta; ++i) {
        theta0(i) = std::clamp(theta0(i), lo(i) + 1e-6, hi(i) - 1e-6);
      }

      SplitMix64 rng(options.seed + 0x51edull * static_cast<std::uint64_t>(t));
      detail::NelderMeadResult best;
      bool have_best = false;
      for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
        Eigen::VectorXd start = theta0;
        if (restart > 0) {
          for (int i = 0; i < n_theta; ++i) {
            start(i) = std::clamp(theta0(i) + 4.0 * (rng.uniform01() - 0.5),
                                  lo(i) + 1e-6, hi(i) - 1e-6);
          }
        }
        auto run = detail::nelder_mead(objective, start, 0.25, options.max_evaluations);
        if (!have_best || run.value < best.value) {
          best = run;
          have_best = true;
        }
      }
      if (std::isfinite(best.value)) {
        target.hyper = theta_to_hyper(best.x, target.hyper, options.optimize_noise);
        target.stalled = !best.converged;
      } else {
        target.stalled = true;  // every restart infeasible, keep the seed values
      }
    }

    const auto factored = factorize(x, y_std, target.hyper);
    target.chol = factored.chol;
    target.alpha = factored.alpha;
    target.lml = factored.lml;
    target.jitter = factored.jitter;
  }
  return model;
}

void GprModel::check_target(int target) const {
  if (target < 0 || target >= n_targets()) {
    throw DimensionMismatch("gpr: target index " + std::to_string(target) +
                            " out of range, model has " + std::to_string(n_targets()));
  }
}

Prediction GprModel::predict(const Eigen::Vector2d& x, int target) const {
  check_target(target);
  if (!x.allFinite()) {
    throw NonFiniteError("gpr predict: query point is not finite");
  }
  const Target& tg = targets_[static_cast<std::size_t>(target)];
  const Eigen::Index n = x_.rows();

  Eigen::VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k_star(i) = kernel_profile(
        scaled_distance(x_.row(i).transpose(), x, tg.hyper), tg.hyper);
  }

  const double mean_std = k_star.dot(tg.alpha);
  const Eigen::VectorXd v = tg.chol.triangularView<Eigen::Lower>().solve(k_star);
  // Latent-function variance: prior minus what the data explains. The noise
  // term is not added back; callers model reproducible diagonalizations.
  double var_std = tg.hyper.signal_variance - v.squaredNorm();
  var_std = std::max(var_std, 0.0);

  return Prediction{tg.shift + tg.scale * mean_std, tg.scale * tg.scale * var_std};
}

std::vector<Prediction> GprModel::predict_all(const Eigen::Vector2d& x) const {
  std::vector<Prediction> out;
  out.reserve(targets_.size());
  for (int t = 0; t < n_targets(); ++t) {
    out.push_back(predict(x, t));
  }
  return out;
}

double GprModel::log_marginal_likelihood(int target) const {
  check_target(target);
  return targets_[static_cast<std::size_t>(target)].lml;
}

Eigen::MatrixXd GprModel::covariance_matrix(int target) const {
  check_target(target);
  return build_gram(x_, targets_[static_cast<std::size_t>(target)].hyper);
}

Eigen::VectorXd GprModel::loo_residuals(int target) const {
  check_target(target);
  const Target& tg = targets_[static_cast<std::size_t>(target)];
  const Eigen::Index n = x_.rows();
  // K^-1 from the cached factor; loo residual_i = alpha_i / (K^-1)_ii.
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd k_inv = tg.chol.transpose().triangularView<Eigen::Upper>().solve(
      tg.chol.triangularView<Eigen::Lower>().solve(identity));
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = tg.scale * tg.alpha(i) / k_inv(i, i);
  }
  return out;
}

const Hyperparameters& GprModel::hyperparameters(int target) const {
  check_target(target);
  return targets_[static_cast<std::size_t>(target)].hyper;
}

double GprModel::output_shift(int target) const {
  check_target(target);
  return targets_[static_cast<std::size_t>(target)].shift;
}

double GprModel::output_scale(int target) const {
  check_target(target);
  return targets_[static_cast<std::size_t>(target)].scale;
}

bool GprModel::optimizer_stalled(int target) const {
  check_target(target);
  return targets_[static_cast<std::size_t>(target)].stalled;
}

double GprModel::jitter(int target) const {
  check_target(target);
  return targets_[static_cast<std::size_t>(target)].jitter;
}

nlohmann::json GprModel::to_json() const {
  nlohmann::json doc;
  doc["inputs"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    doc["inputs"].push_back({x_(i, 0), x_(i, 1)});
  }
  doc["outputs"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < y_raw_.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index t = 0; t < y_raw_.cols(); ++t) {
      row.push_back(y_raw_(i, t));
    }
    doc["outputs"].push_back(std::move(row));
  }
  doc["targets"] = nlohmann::json::array();
  for (const Target& tg : targets_) {
    doc["targets"].push_back({
        {"kernel", kernel_name(tg.hyper.kernel)},
        {"signal_variance", tg.hyper.signal_variance},
        {"length_scales", {tg.hyper.length_scales(0), tg.hyper.length_scales(1)}},
        {"noise_variance", tg.hyper.noise_variance},
        {"nu", tg.hyper.nu},
        {"shift", tg.shift},
        {"scale", tg.scale},
        {"stalled", tg.stalled},
    });
  }
  return doc;
}

GprModel GprModel::from_json(const nlohmann::json& doc) {
  try {
    const auto& inputs = doc.at("inputs");
    const auto& outputs = doc.at("outputs");
    const auto& targets = doc.at("targets");
    const Eigen::Index n = static_cast<Eigen::Index>(inputs.size());
    const Eigen::Index m = static_cast<Eigen::Index>(targets.size());
    if (n < 1 || outputs.size() != inputs.size()) {
      throw ParseError("gpr model: inputs and outputs disagree in length");
    }

    GprModel model;
    model.x_.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      model.x_(i, 0) = inputs[static_cast<std::size_t>(i)].at(0).get<double>();
      model.x_(i, 1) = inputs[static_cast<std::size_t>(i)].at(1).get<double>();
    }
    model.y_raw_.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index t = 0; t < m; ++t) {
        model.y_raw_(i, t) =
            outputs[static_cast<std::size_t>(i)].at(static_cast<std::size_t>(t)).get<double>();
      }
    }
    model.targets_.resize(static_cast<std::size_t>(m));
    for (Eigen::Index t = 0; t < m; ++t) {
      const auto& entry = targets[static_cast<std::size_t>(t)];
      Target& tg = model.targets_[static_cast<std::size_t>(t)];
      tg.hyper.kernel = kernel_from_name(entry.at("kernel").get<std::string>());
      tg.hyper.signal_variance = entry.at("signal_variance").get<double>();
      tg.hyper.length_scales << entry.at("length_scales").at(0).get<double>(),
          entry.at("length_scales").at(1).get<double>();
      tg.hyper.noise_variance = entry.at("noise_variance").get<double>();
      tg.hyper.nu = entry.at("nu").get<double>();
      tg.shift = entry.at("shift").get<double>();
      tg.scale = entry.at("scale").get<double>();
      tg.stalled = entry.value("stalled", false);

      const Eigen::VectorXd y_std = (model.y_raw_.col(t).array() - tg.shift) / tg.scale;
      const auto factored = factorize(model.x_, y_std, tg.hyper);
      tg.chol = factored.chol;
      tg.alpha = factored.alpha;
      tg.lml = factored.lml;
      tg.jitter = factored.jitter;
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("gpr model: ") + e.what());
  }
}

}  // namespace epfind::gpr
