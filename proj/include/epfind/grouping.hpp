// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "epfind/errors.hpp"
#include "epfind/models.hpp"

namespace epfind::grouping {

using models::Complex;

// |a - b| in the complex plane.
double euclidean_distance(Complex a, Complex b);

// 1 - cos(angle between a and b). Throws on a zero vector.
double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

enum class Metric { kEuclidean, kCosine };
enum class Matching { kGreedy, kOptimal };

struct GroupingOptions {
  Metric metric = Metric::kEuclidean;
  Matching matching = Matching::kGreedy;
  // Max distance between a path's end and another path's start for the two
  // to count as swapped. Default: 10x the median consecutive-step movement.
  std::optional<double> closure_tolerance;
  // Two continuation candidates closer than this in distance are a tie.
  double tie_tolerance = 1e-14;
};

// One eigenvalue path around the orbit. indices[t] selects the member of
// spectra[t] the path passes through; end_index points into spectra[0] and
// records where the path lands after the full loop.
struct EigenPath {
  std::vector<int> indices;
  std::vector<Complex> values;
  int start_index = -1;
  int end_index = -1;
};

struct ExchangeReport {
  std::vector<EigenPath> paths;
  std::vector<Complex> kappas;                      // copied from the traced set
  std::vector<std::pair<int, int>> exchanging_pairs;  // path indices, a < b
  std::vector<std::vector<int>> longer_cycles;        // >2-cycles, diagnostics only
  double closure_tolerance = 0.0;
  Metric metric = Metric::kEuclidean;
};

// Continue every eigenvalue of spectra[0] around the loop by nearest-
// neighbor matching per step, then classify paths by where they land after
// one full turn. Paths start sorted by (Re, Im) at angle 0. A pair of paths
// that land on each other's start marks a square-root branch point inside
// the orbit.
//
// Throws AmbiguousAssignment on continuation ties, TooSparse when an
// assigned continuation sits closer to some other path's previous point
// than to its own (the sampling cannot support the matching), and
// std::invalid_argument when the cosine metric is requested without
// eigenvector features in the set.
ExchangeReport group_paths(const models::OrbitSpectrumSet& set,
                           const GroupingOptions& options = {});

// One training sample for the surrogate: the loop parameter and the two
// exchanging eigenvalues there. p = (l1 - l2)^2 and s = (l1 + l2) / 2 are
// the symmetric coordinates the search models; p is invariant under swapping
// the pair, s outright, so the branch cut never enters the training data.
struct TrainingPair {
  Complex kappa;
  Complex lambda1;
  Complex lambda2;

  Complex p() const {
    const Complex d = lambda1 - lambda2;
    return d * d;
  }
  Complex s() const { return 0.5 * (lambda1 + lambda2); }
};

// Samples of the exchanging pair at `subsample` near-equally spaced angles
// (all of them when subsample >= n_angles). pair_index selects from
// report.exchanging_pairs. Throws NotExchanging for an out-of-range index
// and std::invalid_argument for subsample < 8.
std::vector<TrainingPair> extract_training_set(const ExchangeReport& report,
                                               int pair_index, int subsample);

// Same, but by explicit path indices; throws NotExchanging when those two
// paths do not swap (e.g. both closed).
std::vector<TrainingPair> extract_training_set_for_paths(const ExchangeReport& report,
                                                         int path_a, int path_b,
                                                         int subsample);

}  // namespace epfind::grouping
