// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <complex>

#include "epfind/errors.hpp"

namespace epfind::linalg {

// Largest matrix the dense non-Hermitian eigensolver accepts. Everything in
// this project is a handful of coupled modes; the cap catches accidental
// misuse (e.g. feeding a covariance matrix to the wrong routine).
inline constexpr Eigen::Index kMaxEigenDim = 64;

struct EigenDecomposition {
  Eigen::VectorXcd eigenvalues;           // unordered, as the QR sweep yields them
  Eigen::MatrixXcd eigenvectors;          // columns, unit norm; empty unless requested
  double residual = 0.0;                  // max_j ||A v_j - lambda_j v_j||_2, 0 without vectors
};

// Dense eigendecomposition of a general complex matrix via Hessenberg
// reduction plus shifted complex QR (30 iterations per row budget).
// Throws NonFiniteError on NaN/Inf input, ConvergenceFailure if the QR
// sweep stalls, DimensionMismatch for non-square or oversized input.
EigenDecomposition eigendecompose(const Eigen::MatrixXcd& a, bool want_vectors = false);

// Lower Cholesky factor of a symmetric positive definite matrix with a fixed
// jitter added to the diagonal. Throws NotPositiveDefinite when the
// factorization hits a non-positive pivot.
Eigen::MatrixXd cholesky_spd(const Eigen::MatrixXd& a, double jitter = 0.0);

struct LadderCholesky {
  Eigen::MatrixXd factor;  // lower triangular
  double jitter = 0.0;     // absolute jitter that made it succeed
};

// cholesky_spd with an escalating jitter ladder: 0, 1e-12, 1e-10, 1e-8,
// each scaled by the mean diagonal. Throws NotPositiveDefinite only after
// the whole ladder fails.
LadderCholesky cholesky_ladder(const Eigen::MatrixXd& a);

// Eigenvalues of a real symmetric matrix, ascending.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a);

// Max absolute asymmetry |a - a^T|, for symmetry checks on complex input.
double asymmetry(const Eigen::MatrixXcd& a);

}  // namespace epfind::linalg
