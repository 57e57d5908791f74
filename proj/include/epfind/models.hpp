// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "epfind/errors.hpp"

namespace epfind::models {

using Complex = std::complex<double>;

// A matrix-valued function M(kappa) = base + kappa * sum of coupling unit
// matrices. The two-mode family is the canonical square-root branch point
// (eigenvalues +-sqrt(1 + kappa^2), degenerate at kappa = +-i); the
// five-mode family embeds that block into a random complex symmetric
// background so the degeneracy moves to a nontrivial location.
class MatrixFamily {
 public:
  // [[1, kappa], [kappa, -1]].
  static MatrixFamily kato2();

  // Five modes: top-left block as kato2, every other independent entry a
  // random complex number with Re, Im uniform in [-1, 1). Deterministic in
  // the seed, identical across platforms.
  static MatrixFamily random5(std::uint64_t seed);

  // base + kappa at the given positions. Positions are 0-based (row, col).
  // When symmetric is true, base and the coupling set must both be
  // symmetric; violations throw SymmetryViolation.
  static MatrixFamily custom(Eigen::MatrixXcd base,
                             std::vector<std::pair<int, int>> coupling,
                             bool symmetric);

  // JSON file: {"dim": n, "symmetric": bool, "base": [[re, im], ...]
  // row-major n^2 entries, "coupling": [[i, j], ...] 0-based}.
  static MatrixFamily from_file(const std::filesystem::path& path);

  Eigen::MatrixXcd evaluate(Complex kappa) const;

  Eigen::Index dim() const { return base_.rows(); }
  bool symmetric() const { return symmetric_; }
  const Eigen::MatrixXcd& base() const { return base_; }
  const std::vector<std::pair<int, int>>& coupling() const { return coupling_; }
  std::optional<std::uint64_t> seed() const { return seed_; }

 private:
  MatrixFamily(Eigen::MatrixXcd base, std::vector<std::pair<int, int>> coupling,
               bool symmetric, std::optional<std::uint64_t> seed);

  Eigen::MatrixXcd base_;
  std::vector<std::pair<int, int>> coupling_;
  bool symmetric_ = true;
  std::optional<std::uint64_t> seed_;
};

// Closed loop in the kappa plane, sampled at n equally spaced angles
// phi_i = 2 pi i / n (the wrap point phi = 2 pi is not duplicated).
struct Orbit {
  Complex center{0.0, 0.0};
  double radius_re = 0.0;  // semi-axis along Re kappa
  double radius_im = 0.0;  // semi-axis along Im kappa
  int n_points = 0;

  static Orbit circle(Complex center, double radius, int n_points);
  static Orbit ellipse(Complex center, double radius_re, double radius_im, int n_points);

  double angle(int i) const;
  Complex kappa(int i) const;

  // Throws std::invalid_argument unless n_points >= 8 and radii > 0.
  void validate() const;
};

// Affine chart between the dimensionless kappa plane and two physical
// control parameters: value_k = center_k * (1 + rho * component_k(kappa)).
// rho is the loop radius relative to the center values.
struct ParameterMap {
  double center1 = 1.0;        // e.g. a field strength
  double center2 = 1.0;        // e.g. a frequency
  double relative_radius = 1;  // rho

  std::array<double, 2> to_physical(Complex kappa) const;
  Complex to_kappa(double value1, double value2) const;
};

// Spectra (and optionally eigenvector features) along one orbit.
struct OrbitSpectrumSet {
  Orbit orbit;
  std::vector<Complex> kappas;                        // n_points entries
  std::vector<Eigen::VectorXcd> spectra;              // n_points x dim
  std::vector<std::vector<Eigen::VectorXd>> features; // n_points x dim x n_feat, may be empty

  int n_angles() const { return static_cast<int>(spectra.size()); }
  Eigen::Index dim() const { return spectra.empty() ? 0 : spectra.front().size(); }
  bool has_features() const { return !features.empty(); }
};

// Diagonalize the family at every orbit angle. with_features additionally
// stores the squared moduli of the normalized eigenvector components, the
// extra coordinates the eigenvector-aware grouping metric uses. Solver
// failures are rethrown with the offending angle index in the message.
OrbitSpectrumSet trace_orbit(const MatrixFamily& family, const Orbit& orbit,
                             bool with_features = false, int jobs = 1);

}  // namespace epfind::models
