// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace epfind::detail {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

// Downhill simplex with the standard coefficients (reflect 1, expand 2,
// contract 1/2, shrink 1/2). The objective may return +inf to mark
// infeasible points; the initial simplex must be feasible.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0, double step,
                                    int max_evaluations, double f_tol = 1e-10,
                                    double x_tol = 1e-9) {
  const int n = static_cast<int>(x0.size());
  NelderMeadResult result;

  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> value(static_cast<std::size_t>(n + 1));
  for (int i = 0; i < n; ++i) {
    simplex[static_cast<std::size_t>(i + 1)](i) += step;
  }
  for (int i = 0; i <= n; ++i) {
    value[static_cast<std::size_t>(i)] = f(simplex[static_cast<std::size_t>(i)]);
    ++result.evaluations;
  }

  std::vector<int> order(static_cast<std::size_t>(n + 1));
  auto sort_simplex = [&]() {
    for (int i = 0; i <= n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return value[static_cast<std::size_t>(a)] < value[static_cast<std::size_t>(b)]; });
  };

  while (result.evaluations < max_evaluations) {
    sort_simplex();
    const int best = order.front();
    const int worst = order.back();
    const int second_worst = order[static_cast<std::size_t>(n - 1)];

    const double spread = value[static_cast<std::size_t>(worst)] - value[static_cast<std::size_t>(best)];
    double diameter = 0.0;
    for (int i = 0; i <= n; ++i) {
      diameter = std::max(diameter, (simplex[static_cast<std::size_t>(i)] -
                                     simplex[static_cast<std::size_t>(best)]).norm());
    }
    if (std::isfinite(value[static_cast<std::size_t>(best)]) &&
        spread <= f_tol * (std::abs(value[static_cast<std::size_t>(best)]) + f_tol) &&
        diameter <= x_tol) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i) {
      if (i != worst) centroid += simplex[static_cast<std::size_t>(i)];
    }
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[static_cast<std::size_t>(worst)]);
    const double f_reflected = f(reflected);
    ++result.evaluations;

    if (f_reflected < value[static_cast<std::size_t>(best)]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[static_cast<std::size_t>(worst)]);
      const double f_expanded = f(expanded);
      ++result.evaluations;
      if (f_expanded < f_reflected) {
        simplex[static_cast<std::size_t>(worst)] = expanded;
        value[static_cast<std::size_t>(worst)] = f_expanded;
      } else {
        simplex[static_cast<std::size_t>(worst)] = reflected;
        value[static_cast<std::size_t>(worst)] = f_reflected;
      }
    } else if (f_reflected < value[static_cast<std::size_t>(second_worst)]) {
      simplex[static_cast<std::size_t>(worst)] = reflected;
      value[static_cast<std::size_t>(worst)] = f_reflected;
    } else {
      const bool outside = f_reflected < value[static_cast<std::size_t>(worst)];
      Eigen::VectorXd contracted;
      if (outside) {
        contracted = centroid + 0.5 * (reflected - centroid);
      } else {
        contracted = centroid - 0.5 * (centroid - simplex[static_cast<std::size_t>(worst)]);
      }
      const double f_contracted = f(contracted);
      ++result.evaluations;
      if (f_contracted < std::min(f_reflected, value[static_cast<std::size_t>(worst)])) {
        simplex[static_cast<std::size_t>(worst)] = contracted;
        value[static_cast<std::size_t>(worst)] = f_contracted;
      } else {
        // shrink toward the best vertex
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          simplex[static_cast<std::size_t>(i)] =
              simplex[static_cast<std::size_t>(best)] +
              0.5 * (simplex[static_cast<std::size_t>(i)] - simplex[static_cast<std::size_t>(best)]);
          value[static_cast<std::size_t>(i)] = f(simplex[static_cast<std::size_t>(i)]);
          ++result.evaluations;
        }
      }
    }
  }

  sort_simplex();
  result.x = simplex[static_cast<std::size_t>(order.front())];
  result.value = value[static_cast<std::size_t>(order.front())];
  return result;
}

}  // namespace epfind::detail
