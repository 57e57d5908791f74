// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#include "epfind/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

namespace epfind::grouping {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimum-cost perfect matching on a square cost matrix (Jonker-style
// shortest augmenting paths with potentials, O(n^3)). Returns row -> col.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  }
  return row_to_col;
}

}  // namespace

double euclidean_distance(Complex a, Complex b) { return std::abs(a - b); }

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine_distance: vectors have different lengths");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("cosine_distance: zero vector has no direction");
  }
  return 1.0 - a.dot(b) / (na * nb);
}

ExchangeReport group_paths(const models::OrbitSpectrumSet& set,
                           const GroupingOptions& options) {
  const int n = set.n_angles();
  const int d = static_cast<int>(set.dim());
  if (n < 8) {
    throw std::invalid_argument("group_paths: need at least 8 angles, got " +
                                std::to_string(n));
  }
  if (options.metric == Metric::kCosine && !set.has_features()) {
    throw std::invalid_argument(
        "group_paths: cosine metric needs eigenvector features; trace with features enabled");
  }

  // Coordinate vector a path point is compared by. The cosine metric sees
  // the eigenvalue plus the eigenvector composition; the euclidean one only
  // the eigenvalue.
  auto psi = [&](int t, int j) -> Eigen::VectorXd {
    const Complex lam = set.spectra[static_cast<std::size_t>(t)](j);
    if (options.metric == Metric::kEuclidean) {
      Eigen::VectorXd v(2);
      v << lam.real(), lam.imag();
      return v;
    }
    const Eigen::VectorXd& f = set.features[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
    Eigen::VectorXd v(2 + f.size());
    v(0) = lam.real();
    v(1) = lam.imag();
    v.tail(f.size()) = f;
    return v;
  };

  auto dist = [&](const Eigen::VectorXd& prev, int t, int j) {
    if (options.metric == Metric::kEuclidean) {
      const Complex lam = set.spectra[static_cast<std::size_t>(t)](j);
      return euclidean_distance(Complex(prev(0), prev(1)), lam);
    }
    return cosine_distance(prev, psi(t, j));
  };

  // Paths start at angle 0 ordered by (Re, Im).
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXcd& first = set.spectra.front();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Complex la = first(a), lb = first(b);
    if (la.real() != lb.real()) return la.real() < lb.real();
    return la.imag() < lb.imag();
  });

  ExchangeReport report;
  report.metric = options.metric;
  report.kappas = set.kappas;
  report.paths.resize(static_cast<std::size_t>(d));
  for (int p = 0; p < d; ++p) {
    auto& path = report.paths[static_cast<std::size_t>(p)];
    path.start_index = order[static_cast<std::size_t>(p)];
    path.indices.reserve(static_cast<std::size_t>(n));
    path.values.reserve(static_cast<std::size_t>(n));
    path.indices.push_back(path.start_index);
    path.values.push_back(first(path.start_index));
  }

  std::vector<Eigen::VectorXd> prev(static_cast<std::size_t>(d));
  for (int p = 0; p < d; ++p) {
    prev[static_cast<std::size_t>(p)] = psi(0, report.paths[static_cast<std::size_t>(p)].indices[0]);
  }

  std::vector<double> movements;
  movements.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));

  // Steps 1..n-1 continue the paths; step n closes the loop onto angle 0.
  for (int t = 1; t <= n; ++t) {
    const int tc = t % n;
    Eigen::MatrixXd dm(d, d);  // path x candidate
    for (int p = 0; p < d; ++p) {
      for (int j = 0; j < d; ++j) {
        dm(p, j) = dist(prev[static_cast<std::size_t>(p)], tc, j);
      }
    }

    std::vector<int> assignment(static_cast<std::size_t>(d), -1);
    if (options.matching == Matching::kOptimal) {
      assignment = min_cost_assignment(dm);
    } else {
      // Greedy by globally ascending distance. A path losing a conflict
      // falls back to its next-nearest free candidate automatically when
      // its later pairs pop.
      std::vector<std::tuple<double, int, int>> pairs;
      pairs.reserve(static_cast<std::size_t>(d) * static_cast<std::size_t>(d));
      for (int p = 0; p < d; ++p) {
        for (int j = 0; j < d; ++j) {
          pairs.emplace_back(dm(p, j), p, j);
        }
      }
      std::sort(pairs.begin(), pairs.end());
      std::vector<char> taken(static_cast<std::size_t>(d), 0);
      int assigned = 0;
      for (const auto& [dd, p, j] : pairs) {
        if (assignment[static_cast<std::size_t>(p)] >= 0 || taken[static_cast<std::size_t>(j)]) {
          continue;
        }
        // A free candidate at indistinguishable distance makes the choice
        // arbitrary. Typical cause: an exactly degenerate spectrum.
        for (int j2 = 0; j2 < d; ++j2) {
          if (j2 == j || taken[static_cast<std::size_t>(j2)]) continue;
          if (std::abs(dm(p, j2) - dd) <= options.tie_tolerance) {
            throw AmbiguousAssignment(
                "group_paths: continuation tie at angle index " + std::to_string(tc) +
                " for the path at eigenvalue index " + std::to_string(p) +
                " (distances differ by <= " + std::to_string(options.tie_tolerance) + ")");
          }
        }
        assignment[static_cast<std::size_t>(p)] = j;
        taken[static_cast<std::size_t>(j)] = 1;
        if (++assigned == d) break;
      }
    }

    // Sampling sanity: nobody else's previous point may be closer to my
    // continuation than my own previous point is.
    for (int p = 0; p < d; ++p) {
      const int j = assignment[static_cast<std::size_t>(p)];
      for (int q = 0; q < d; ++q) {
        if (q != p && dm(q, j) < dm(p, j)) {
          throw TooSparse("group_paths: angle index " + std::to_string(tc) +
                          " is too far from its predecessor to continue the paths reliably; "
                          "increase the number of orbit points");
        }
      }
    }

    for (int p = 0; p < d; ++p) {
      auto& path = report.paths[static_cast<std::size_t>(p)];
      const int j = assignment[static_cast<std::size_t>(p)];
      const Complex lam = set.spectra[static_cast<std::size_t>(tc)](j);
      movements.push_back(euclidean_distance(path.values.back(), lam));
      if (t < n) {
        path.indices.push_back(j);
        path.values.push_back(lam);
        prev[static_cast<std::size_t>(p)] = psi(tc, j);
      } else {
        path.end_index = j;
      }
    }
  }

  double tol;
  if (options.closure_tolerance) {
    tol = *options.closure_tolerance;
  } else {
    std::vector<double> sorted = movements;
    const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    tol = 10.0 * *mid;
  }
  report.closure_tolerance = tol;

  // After a full turn every path lands on some angle-0 eigenvalue; the
  // induced permutation start -> end classifies the loop. Fixed points are
  // closed paths, 2-cycles are exchanging pairs, longer cycles would mean a
  // higher-order degeneracy and are only reported.
  std::vector<int> start_of(static_cast<std::size_t>(d), -1);
  for (int p = 0; p < d; ++p) {
    start_of[static_cast<std::size_t>(report.paths[static_cast<std::size_t>(p)].start_index)] = p;
  }
  std::vector<int> perm(static_cast<std::size_t>(d), -1);  // path -> path whose start it hit
  for (int p = 0; p < d; ++p) {
    perm[static_cast<std::size_t>(p)] =
        start_of[static_cast<std::size_t>(report.paths[static_cast<std::size_t>(p)].end_index)];
  }

  auto open_path = [&](int p) {
    const auto& path = report.paths[static_cast<std::size_t>(p)];
    const Complex start_val = first(path.start_index);
    const Complex end_val = first(path.end_index);
    return euclidean_distance(start_val, end_val) > tol;
  };

  std::vector<char> visited(static_cast<std::size_t>(d), 0);
  for (int p = 0; p < d; ++p) {
    if (visited[static_cast<std::size_t>(p)]) continue;
    std::vector<int> cycle;
    int q = p;
    while (!visited[static_cast<std::size_t>(q)]) {
      visited[static_cast<std::size_t>(q)] = 1;
      cycle.push_back(q);
      q = perm[static_cast<std::size_t>(q)];
    }
    if (cycle.size() == 2 && open_path(cycle[0]) && open_path(cycle[1])) {
      report.exchanging_pairs.emplace_back(std::min(cycle[0], cycle[1]),
                                           std::max(cycle[0], cycle[1]));
    } else if (cycle.size() > 2) {
      report.longer_cycles.push_back(std::move(cycle));
    }
  }
  std::sort(report.exchanging_pairs.begin(), report.exchanging_pairs.end());
  return report;
}

std::vector<TrainingPair> extract_training_set_for_paths(const ExchangeReport& report,
                                                         int path_a, int path_b,
                                                         int subsample) {
  const int d = static_cast<int>(report.paths.size());
  if (path_a < 0 || path_b < 0 || path_a >= d || path_b >= d || path_a == path_b) {
    throw std::invalid_argument("extract_training_set: invalid path indices");
  }
  const auto key = std::make_pair(std::min(path_a, path_b), std::max(path_a, path_b));
  const bool exchanging =
      std::find(report.exchanging_pairs.begin(), report.exchanging_pairs.end(), key) !=
      report.exchanging_pairs.end();
  if (!exchanging) {
    throw NotExchanging("extract_training_set: paths " + std::to_string(path_a) + " and " +
                        std::to_string(path_b) + " do not swap around the orbit");
  }
  if (subsample < 8) {
    throw std::invalid_argument("extract_training_set: need at least 8 samples, got " +
                                std::to_string(subsample));
  }

  const auto& pa = report.paths[static_cast<std::size_t>(key.first)];
  const auto& pb = report.paths[static_cast<std::size_t>(key.second)];
  const int n = static_cast<int>(pa.values.size());
  const int m = std::min(subsample, n);

  std::vector<TrainingPair> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    const int t = static_cast<int>((static_cast<long long>(k) * n) / m);
    out.push_back(TrainingPair{report.kappas[static_cast<std::size_t>(t)],
                               pa.values[static_cast<std::size_t>(t)],
                               pb.values[static_cast<std::size_t>(t)]});
  }
  return out;
}

std::vector<TrainingPair> extract_training_set(const ExchangeReport& report, int pair_index,
                                               int subsample) {
  if (pair_index < 0 ||
      pair_index >= static_cast<int>(report.exchanging_pairs.size())) {
    throw NotExchanging("extract_training_set: pair_index " + std::to_string(pair_index) +
                        " out of range; report holds " +
                        std::to_string(report.exchanging_pairs.size()) + " exchanging pair(s)");
  }
  const auto& [a, b] = report.exchanging_pairs[static_cast<std::size_t>(pair_index)];
  return extract_training_set_for_paths(report, a, b, subsample);
}

}  // namespace epfind::grouping
