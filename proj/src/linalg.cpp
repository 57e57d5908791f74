// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#include "epfind/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <string>

namespace epfind::linalg {

namespace {

void require_finite(const Eigen::MatrixXcd& a, const char* who) {
  if (!a.allFinite()) {
    throw NonFiniteError(std::string(who) + ": input contains NaN or Inf");
  }
}

void require_finite(const Eigen::MatrixXd& a, const char* who) {
  if (!a.allFinite()) {
    throw NonFiniteError(std::string(who) + ": input contains NaN or Inf");
  }
}

void require_square(const Eigen::MatrixXcd& a, const char* who) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch(std::string(who) + ": matrix is " + std::to_string(a.rows()) +
                            "x" + std::to_string(a.cols()) + ", expected square");
  }
}

}  // namespace

EigenDecomposition eigendecompose(const Eigen::MatrixXcd& a, bool want_vectors) {
  require_square(a, "eigendecompose");
  require_finite(a, "eigendecompose");
  if (a.rows() > kMaxEigenDim) {
    throw DimensionMismatch("eigendecompose: dim " + std::to_string(a.rows()) +
                            " exceeds the supported maximum of " + std::to_string(kMaxEigenDim));
  }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(a, want_vectors);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("eigendecompose: QR iteration did not converge within 30 sweeps per row");
  }

  EigenDecomposition out;
  out.eigenvalues = solver.eigenvalues();
  if (want_vectors) {
    out.eigenvectors = solver.eigenvectors();  // unit columns
    double worst = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double r = (a * out.eigenvectors.col(j) -
                        out.eigenvalues(j) * out.eigenvectors.col(j)).norm();
      worst = std::max(worst, r);
    }
    out.residual = worst;
  }
  return out;
}

Eigen::MatrixXd cholesky_spd(const Eigen::MatrixXd& a, double jitter) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("cholesky_spd: matrix is not square");
  }
  require_finite(a, "cholesky_spd");

  Eigen::MatrixXd work = a;
  if (jitter != 0.0) {
    work.diagonal().array() += jitter;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(work);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("cholesky_spd: non-positive pivot (jitter " +
                              std::to_string(jitter) + ")");
  }
  return llt.matrixL();
}

LadderCholesky cholesky_ladder(const Eigen::MatrixXd& a) {
  const double mean_diag = a.rows() > 0 ? a.diagonal().mean() : 0.0;
  const double rungs[] = {0.0, 1e-12, 1e-10, 1e-8};
  for (double rung : rungs) {
    const double jitter = rung * mean_diag;
    try {
      return {cholesky_spd(a, jitter), jitter};
    } catch (const NotPositiveDefinite&) {
      // climb to the next rung
    }
  }
  throw NotPositiveDefinite(
      "cholesky_ladder: matrix stayed indefinite through jitter ladder up to 1e-8 * mean(diag); "
      "check for duplicated inputs or a zero noise floor");
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("symmetric_eigenvalues: matrix is not square");
  }
  require_finite(a, "symmetric_eigenvalues");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("symmetric_eigenvalues: tridiagonal QL sweep did not converge");
  }
  return solver.eigenvalues();  // ascending
}

double asymmetry(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("asymmetry: matrix is not square");
  }
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace epfind::linalg
