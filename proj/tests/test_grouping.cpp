#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <vector>

#include "epfind/epsearch.hpp"
#include "epfind/errors.hpp"
#include "epfind/grouping.hpp"
#include "epfind/models.hpp"

using namespace epfind;
using Complex = std::complex<double>;

namespace {

// Hand-built spectrum set: values[t][k] becomes the k-th eigenvalue at
// angle t, on a unit-circle placeholder orbit.
models::OrbitSpectrumSet make_set(const std::vector<std::vector<Complex>>& values) {
  models::OrbitSpectrumSet set;
  set.orbit = models::Orbit::circle(0.0, 1.0, static_cast<int>(values.size()));
  for (std::size_t t = 0; t < values.size(); ++t) {
    set.kappas.push_back(set.orbit.kappa(static_cast<int>(t)));
    Eigen::VectorXcd spec(static_cast<Eigen::Index>(values[t].size()));
    for (std::size_t k = 0; k < values[t].size(); ++k) {
      spec(static_cast<Eigen::Index>(k)) = values[t][k];
    }
    set.spectra.push_back(spec);
  }
  return set;
}

grouping::ExchangeReport kato2_report(int n_points, double radius = 0.5) {
  const auto family = models::MatrixFamily::kato2();
  const auto orbit = models::Orbit::circle(Complex(0.0, 1.0), radius, n_points);
  return grouping::group_paths(models::trace_orbit(family, orbit));
}

}  // namespace

TEST_SUITE("grouping") {

TEST_CASE("euclidean distance on complex eigenvalues") {
  CHECK(grouping::euclidean_distance(Complex(1, 1), Complex(1, 1)) == 0.0);
  CHECK(grouping::euclidean_distance(Complex(3, 0), Complex(0, 0)) == 3.0);
  CHECK(grouping::euclidean_distance(Complex(1, 1), Complex(4, 5)) == 5.0);
}

TEST_CASE("cosine distance spans [0, 2] and rejects undirected input") {
  Eigen::VectorXd v(3);
  v << 0.3, -1.2, 0.5;
  CHECK(grouping::cosine_distance(v, v) == doctest::Approx(0.0).epsilon(1e-15));
  Eigen::Vector2d ex(1, 0), ey(0, 1);
  CHECK(grouping::cosine_distance(ex, ey) == 1.0);
  CHECK(grouping::cosine_distance(ex, -ex) == 2.0);
  CHECK_THROWS_AS(grouping::cosine_distance(ex, Eigen::Vector2d::Zero()),
                  std::invalid_argument);
  CHECK_THROWS_AS(grouping::cosine_distance(ex, v), DimensionMismatch);
}

TEST_CASE("constant spectra produce closed paths and no exchanges") {
  std::vector<std::vector<Complex>> values(16, {Complex(1, 0), Complex(-1, 0)});
  const auto report = grouping::group_paths(make_set(values));
  REQUIRE(report.paths.size() == 2);
  CHECK(report.exchanging_pairs.empty());
  for (const auto& path : report.paths) {
    CHECK(path.start_index == path.end_index);
  }
}

TEST_CASE("kato2 orbit around the branch point yields exactly one exchanging pair") {
  const auto report = kato2_report(100);
  REQUIRE(report.paths.size() == 2);
  REQUIRE(report.exchanging_pairs.size() == 1);
  CHECK(report.exchanging_pairs[0] == std::pair<int, int>(0, 1));
  CHECK(report.longer_cycles.empty());
  // The pair covers both eigenvalues: endpoints swapped, not closed.
  for (const auto& path : report.paths) {
    CHECK(path.start_index != path.end_index);
  }
}

TEST_CASE("random5 orbit enclosing its degeneracy: one exchange, three closed paths") {
  const auto family = models::MatrixFamily::random5(42);
  const auto oracle = epsearch::brute_force_ep(family, Complex(0.05, 0.95));
  const auto orbit = models::Orbit::circle(oracle.kappa, 0.3, 100);
  const auto set = models::trace_orbit(family, orbit, true);

  for (const auto matching : {grouping::Matching::kGreedy, grouping::Matching::kOptimal}) {
    for (const auto metric : {grouping::Metric::kEuclidean, grouping::Metric::kCosine}) {
      grouping::GroupingOptions options;
      options.metric = metric;
      options.matching = matching;
      const auto report = grouping::group_paths(set, options);
      REQUIRE(report.exchanging_pairs.size() == 1);
      int closed = 0;
      for (const auto& path : report.paths) {
        closed += path.start_index == path.end_index ? 1 : 0;
      }
      CHECK(closed == 3);
    }
  }
}

TEST_CASE("path assignment is a bijection at every angle") {
  const auto family = models::MatrixFamily::random5(3);
  const auto orbit = models::Orbit::circle(Complex(0.0, 1.0), 0.4, 64);
  const auto report = grouping::group_paths(models::trace_orbit(family, orbit));
  const int n_angles = static_cast<int>(report.kappas.size());
  for (int t = 0; t < n_angles; ++t) {
    std::set<int> seen;
    for (const auto& path : report.paths) {
      seen.insert(path.indices[static_cast<std::size_t>(t)]);
    }
    CHECK(seen.size() == report.paths.size());
  }
  // Exchanging paths pair up without overlap.
  std::set<int> exchanging;
  for (const auto& [a, b] : report.exchanging_pairs) {
    CHECK(a < b);
    CHECK(exchanging.insert(a).second);
    CHECK(exchanging.insert(b).second);
  }
  CHECK(exchanging.size() % 2 == 0);
}

TEST_CASE("doubling the orbit resolution keeps the exchange classification") {
  CHECK(kato2_report(50).exchanging_pairs == kato2_report(100).exchanging_pairs);
  CHECK(kato2_report(100).exchanging_pairs == kato2_report(200).exchanging_pairs);

  const auto family = models::MatrixFamily::random5(42);
  const auto oracle = epsearch::brute_force_ep(family, Complex(0.05, 0.95));
  for (const int n : {100, 200}) {
    const auto orbit = models::Orbit::circle(oracle.kappa, 0.3, n);
    const auto report = grouping::group_paths(models::trace_orbit(family, orbit));
    CHECK(report.exchanging_pairs.size() == 1);
  }
}

TEST_CASE("continuation ties raise AmbiguousAssignment") {
  // Two identical eigenvalues: both continuations tie at every step.
  std::vector<std::vector<Complex>> values(16, {Complex(0.5, 0), Complex(0.5, 0)});
  CHECK_THROWS_AS((void)grouping::group_paths(make_set(values)), AmbiguousAssignment);
}

TEST_CASE("a continuation closer to a foreign path raises TooSparse") {
  // Step 0 -> 1: path starting at 0 is forced onto 2.0 (its nearest free
  // candidate), but 2.0 sits closer to the other path's previous point 1.0.
  std::vector<std::vector<Complex>> values(16, {Complex(0.9, 0), Complex(1.0, 0)});
  values[0] = {Complex(0.0, 0), Complex(1.0, 0)};
  values[1] = {Complex(0.9, 0), Complex(2.0, 0)};
  CHECK_THROWS_AS((void)grouping::group_paths(make_set(values)), TooSparse);
}

TEST_CASE("greedy and optimal matching agree on the physical families") {
  const auto family = models::MatrixFamily::random5(5);
  const auto orbit = models::Orbit::circle(Complex(0.0, 1.0), 0.35, 100);
  const auto set = models::trace_orbit(family, orbit);
  grouping::GroupingOptions greedy, optimal;
  optimal.matching = grouping::Matching::kOptimal;
  const auto a = grouping::group_paths(set, greedy);
  const auto b = grouping::group_paths(set, optimal);
  REQUIRE(a.paths.size() == b.paths.size());
  for (std::size_t p = 0; p < a.paths.size(); ++p) {
    CHECK(a.paths[p].indices == b.paths[p].indices);
  }
}

TEST_CASE("training pairs subsample the exchange with minimal |p| toward the companion point") {
  const auto report = kato2_report(100);
  const auto pairs = grouping::extract_training_set(report, 0, 20);
  REQUIRE(pairs.size() == 20);

  // p = 4(1 + kappa^2) on the kato2 family; on the circle i + 0.5 e^{i phi}
  // it is smallest where the loop points toward the second degeneracy at -i,
  // i.e. at phi = 3 pi / 2.
  std::size_t argmin = 0;
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    if (std::abs(pairs[k].p()) < std::abs(pairs[argmin].p())) argmin = k;
  }
  const double phi = std::arg((pairs[argmin].kappa - Complex(0.0, 1.0)) / 0.5);
  const double target = -std::numbers::pi / 2;
  CHECK(std::abs(std::remainder(phi - target, 2 * std::numbers::pi)) < 0.4);

  for (const auto& pair : pairs) {
    const Complex analytic = 4.0 * (1.0 + pair.kappa * pair.kappa);
    CHECK(std::abs(pair.p() - analytic) <= 1e-10 * (1.0 + std::abs(analytic)));
  }
}

TEST_CASE("subsample equal to the resolution keeps one pair per angle") {
  const auto report = kato2_report(64);
  const auto pairs = grouping::extract_training_set(report, 0, 64);
  CHECK(pairs.size() == 64);
  const auto clamped = grouping::extract_training_set(report, 0, 1000);
  CHECK(clamped.size() == 64);
  CHECK_THROWS_AS((void)grouping::extract_training_set(report, 0, 7),
                  std::invalid_argument);
}

TEST_CASE("closed paths cannot seed a training set") {
  const auto family = models::MatrixFamily::random5(42);
  const auto oracle = epsearch::brute_force_ep(family, Complex(0.05, 0.95));
  const auto orbit = models::Orbit::circle(oracle.kappa, 0.3, 100);
  const auto report = grouping::group_paths(models::trace_orbit(family, orbit));
  REQUIRE(report.exchanging_pairs.size() == 1);
  const auto [ex_a, ex_b] = report.exchanging_pairs[0];
  int closed_a = -1, closed_b = -1;
  for (int p = 0; p < static_cast<int>(report.paths.size()); ++p) {
    if (p == ex_a || p == ex_b) continue;
    (closed_a < 0 ? closed_a : closed_b) = p;
  }
  CHECK_THROWS_AS(
      (void)grouping::extract_training_set_for_paths(report, closed_a, closed_b, 8),
      NotExchanging);
  CHECK_THROWS_AS((void)grouping::extract_training_set(report, 1, 8), NotExchanging);
}

TEST_CASE("reversing the pair order leaves p and s untouched") {
  const auto report = kato2_report(100);
  REQUIRE(report.exchanging_pairs.size() == 1);
  const auto [a, b] = report.exchanging_pairs[0];
  const auto fwd = grouping::extract_training_set_for_paths(report, a, b, 16);
  const auto rev = grouping::extract_training_set_for_paths(report, b, a, 16);
  REQUIRE(fwd.size() == rev.size());
  for (std::size_t k = 0; k < fwd.size(); ++k) {
    CHECK(fwd[k].kappa == rev[k].kappa);
    CHECK(fwd[k].p() == rev[k].p());
    CHECK(fwd[k].s() == rev[k].s());
  }
}

}  // TEST_SUITE
