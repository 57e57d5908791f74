// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace epfind {

// Base class for everything thrown by this library on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input contains NaN or Inf where a finite value is required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// An iterative solver ran out of its iteration budget.
class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

// Cholesky factorization failed even after the jitter ladder.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

// Malformed input file (JSON syntax, missing field, wrong shape).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A matrix declared symmetric is not.
class SymmetryViolation : public Error {
 public:
  using Error::Error;
};

// Two candidate continuations of an eigenvalue path are indistinguishable.
class AmbiguousAssignment : public Error {
 public:
  using Error::Error;
};

// Orbit sampling too coarse: an assigned continuation is closer to a
// different path than to its own.
class TooSparse : public Error {
 public:
  using Error::Error;
};

// A requested path pair does not exchange around the orbit.
class NotExchanging : public Error {
 public:
  using Error::Error;
};

// A surrogate predicted exactly zero variance where a ratio needs it.
class ZeroVariance : public Error {
 public:
  using Error::Error;
};

// The reference root finder could not drive the discriminant to zero.
class NoRootFound : public Error {
 public:
  using Error::Error;
};

// Mismatched dimensions between containers that must agree.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace epfind
