// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#include "epfind/models.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <set>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "epfind/linalg.hpp"

namespace epfind::models {

namespace {

// SplitMix64: tiny, well-mixed, identical output on every platform. That
// last property is why this is not std::mt19937 + std::uniform_real_distribution,
// whose stream the standard does not pin down.
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

  // Uniform in [-1, 1), 53 significant bits.
  double uniform_pm1() {
    const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
  }
};

void check_symmetry(const Eigen::MatrixXcd& base,
                    const std::vector<std::pair<int, int>>& coupling) {
  if (linalg::asymmetry(base) > 0.0) {
    throw SymmetryViolation("matrix family declared symmetric but base is not");
  }
  std::set<std::pair<int, int>> set(coupling.begin(), coupling.end());
  for (const auto& [i, j] : coupling) {
    if (i != j && set.find({j, i}) == set.end()) {
      throw SymmetryViolation("matrix family declared symmetric but coupling position (" +
                              std::to_string(i) + "," + std::to_string(j) +
                              ") has no transpose partner");
    }
  }
}

}  // namespace

MatrixFamily::MatrixFamily(Eigen::MatrixXcd base, std::vector<std::pair<int, int>> coupling,
                           bool symmetric, std::optional<std::uint64_t> seed)
    : base_(std::move(base)), coupling_(std::move(coupling)), symmetric_(symmetric),
      seed_(seed) {
  if (base_.rows() != base_.cols()) {
    throw DimensionMismatch("matrix family base is not square");
  }
  if (!base_.allFinite()) {
    throw NonFiniteError("matrix family base contains NaN or Inf");
  }
  for (const auto& [i, j] : coupling_) {
    if (i < 0 || j < 0 || i >= base_.rows() || j >= base_.cols()) {
      throw ParseError("coupling position (" + std::to_string(i) + "," + std::to_string(j) +
                       ") outside a " + std::to_string(base_.rows()) + "-dim matrix");
    }
  }
  if (symmetric_) {
    check_symmetry(base_, coupling_);
  }
}

MatrixFamily MatrixFamily::kato2() {
  Eigen::MatrixXcd base(2, 2);
  base << 1.0, 0.0, 0.0, -1.0;
  return MatrixFamily(std::move(base), {{0, 1}, {1, 0}}, true, std::nullopt);
}

MatrixFamily MatrixFamily::random5(std::uint64_t seed) {
  Eigen::MatrixXcd base = Eigen::MatrixXcd::Zero(5, 5);
  base(0, 0) = 1.0;
  base(1, 1) = -1.0;

  // Independent entries outside the 2x2 block, upper triangle row by row:
  // (0,2)..(0,4), (1,2)..(1,4), (2,2)..(2,4), (3,3), (3,4), (4,4).
  SplitMix64 rng(seed);
  for (int i = 0; i < 5; ++i) {
    for (int j = std::max(i, 2); j < 5; ++j) {
      const double re = rng.uniform_pm1();
      const double im = rng.uniform_pm1();
      base(i, j) = Complex(re, im);
      base(j, i) = base(i, j);
    }
  }
  return MatrixFamily(std::move(base), {{0, 1}, {1, 0}}, true, seed);
}

MatrixFamily MatrixFamily::custom(Eigen::MatrixXcd base,
                                  std::vector<std::pair<int, int>> coupling,
                                  bool symmetric) {
  return MatrixFamily(std::move(base), std::move(coupling), symmetric, std::nullopt);
}

MatrixFamily MatrixFamily::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open family file " + path.string());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("family file " + path.string() + ": " + e.what());
  }

  try {
    const auto dim = doc.at("dim").get<Eigen::Index>();
    if (dim < 2) {
      throw ParseError("family file " + path.string() + ": dim must be >= 2");
    }
    const bool symmetric = doc.at("symmetric").get<bool>();
    const auto& base_entries = doc.at("base");
    if (!base_entries.is_array() ||
        base_entries.size() != static_cast<std::size_t>(dim * dim)) {
      throw ParseError("family file " + path.string() + ": base must hold dim^2 = " +
                       std::to_string(dim * dim) + " [re, im] pairs");
    }
    Eigen::MatrixXcd base(dim, dim);
    for (Eigen::Index k = 0; k < dim * dim; ++k) {
      const auto& pair = base_entries[static_cast<std::size_t>(k)];
      if (!pair.is_array() || pair.size() != 2) {
        throw ParseError("family file " + path.string() + ": base entry " +
                         std::to_string(k) + " is not a [re, im] pair");
      }
      base(k / dim, k % dim) = Complex(pair[0].get<double>(), pair[1].get<double>());
    }
    std::vector<std::pair<int, int>> coupling;
    for (const auto& pos : doc.at("coupling")) {
      if (!pos.is_array() || pos.size() != 2) {
        throw ParseError("family file " + path.string() +
                         ": coupling entries must be [row, col] pairs");
      }
      coupling.emplace_back(pos[0].get<int>(), pos[1].get<int>());
    }
    return MatrixFamily(std::move(base), std::move(coupling), symmetric, std::nullopt);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("family file " + path.string() + ": " + e.what());
  }
}

Eigen::MatrixXcd MatrixFamily::evaluate(Complex kappa) const {
  if (!std::isfinite(kappa.real()) || !std::isfinite(kappa.imag())) {
    throw NonFiniteError("evaluate: kappa is not finite");
  }
  Eigen::MatrixXcd m = base_;
  for (const auto& [i, j] : coupling_) {
    m(i, j) += kappa;
  }
  return m;
}

Orbit Orbit::circle(Complex center, double radius, int n_points) {
  return Orbit{center, radius, radius, n_points};
}

Orbit Orbit::ellipse(Complex center, double radius_re, double radius_im, int n_points) {
  return Orbit{center, radius_re, radius_im, n_points};
}

double Orbit::angle(int i) const {
  return 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_points);
}

Complex Orbit::kappa(int i) const {
  const double phi = angle(i);
  return center + Complex(radius_re * std::cos(phi), radius_im * std::sin(phi));
}

void Orbit::validate() const {
  if (n_points < 8) {
    throw std::invalid_argument("orbit needs at least 8 points, got " +
                                std::to_string(n_points));
  }
  if (!(radius_re > 0.0) || !(radius_im > 0.0)) {
    throw std::invalid_argument("orbit radii must be positive");
  }
  if (!std::isfinite(center.real()) || !std::isfinite(center.imag()) ||
      !std::isfinite(radius_re) || !std::isfinite(radius_im)) {
    throw std::invalid_argument("orbit parameters must be finite");
  }
}

std::array<double, 2> ParameterMap::to_physical(Complex kappa) const {
  return {center1 * (1.0 + relative_radius * kappa.real()),
          center2 * (1.0 + relative_radius * kappa.imag())};
}

Complex ParameterMap::to_kappa(double value1, double value2) const {
  if (center1 == 0.0 || center2 == 0.0 || relative_radius == 0.0) {
    throw std::invalid_argument("parameter map centers and relative radius must be nonzero");
  }
  return Complex((value1 / center1 - 1.0) / relative_radius,
                 (value2 / center2 - 1.0) / relative_radius);
}

OrbitSpectrumSet trace_orbit(const MatrixFamily& family, const Orbit& orbit,
                             bool with_features, int jobs) {
  orbit.validate();
  const int n = orbit.n_points;
  const Eigen::Index dim = family.dim();

  OrbitSpectrumSet out;
  out.orbit = orbit;
  out.kappas.resize(n);
  out.spectra.resize(n);
  if (with_features) {
    out.features.resize(n);
  }

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto capture = [&](int i, const Error& e, auto rebuild) {
    std::lock_guard<std::mutex> lock(error_mutex);
    if (!failed.exchange(true)) {
      first_error = std::make_exception_ptr(
          rebuild("trace_orbit: angle index " + std::to_string(i) + ": " + e.what()));
    }
  };

  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n || failed.load()) {
        return;
      }
      try {
        const Complex kappa = orbit.kappa(i);
        const auto decomp = linalg::eigendecompose(family.evaluate(kappa), with_features);
        out.kappas[i] = kappa;
        out.spectra[i] = decomp.eigenvalues;
        if (with_features) {
          std::vector<Eigen::VectorXd> feats(static_cast<std::size_t>(dim));
          for (Eigen::Index j = 0; j < dim; ++j) {
            feats[static_cast<std::size_t>(j)] =
                decomp.eigenvectors.col(j).cwiseAbs2();
          }
          out.features[i] = std::move(feats);
        }
      } catch (const NonFiniteError& e) {
        capture(i, e, [](const std::string& m) { return NonFiniteError(m); });
        return;
      } catch (const ConvergenceFailure& e) {
        capture(i, e, [](const std::string& m) { return ConvergenceFailure(m); });
        return;
      } catch (const Error& e) {
        capture(i, e, [](const std::string& m) { return Error(m); });
        return;
      }
    }
  };

  const int n_threads = std::max(1, std::min(jobs, n));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back(work);
    }
    for (auto& th : pool) {
      th.join();
    }
  }

  if (first_error) {
    std::rethrow_exception(first_error);
  }
  return out;
}

}  // namespace epfind::models
