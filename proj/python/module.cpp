// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "epfind/epsearch.hpp"
#include "epfind/errors.hpp"
#include "epfind/gpr.hpp"
#include "epfind/grouping.hpp"
#include "epfind/linalg.hpp"
#include "epfind/models.hpp"

namespace py = pybind11;
using namespace epfind;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Locate eigenvalue degeneracies of parameter-dependent matrices";

  static py::exception<Error> base_exc(m, "EpfindError");
  py::register_exception<NonFiniteError>(m, "NonFiniteError", base_exc);
  py::register_exception<ConvergenceFailure>(m, "ConvergenceFailure", base_exc);
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", base_exc);
  py::register_exception<ParseError>(m, "ParseError", base_exc);
  py::register_exception<SymmetryViolation>(m, "SymmetryViolation", base_exc);
  py::register_exception<AmbiguousAssignment>(m, "AmbiguousAssignment", base_exc);
  py::register_exception<TooSparse>(m, "TooSparse", base_exc);
  py::register_exception<NotExchanging>(m, "NotExchanging", base_exc);
  py::register_exception<ZeroVariance>(m, "ZeroVariance", base_exc);
  py::register_exception<NoRootFound>(m, "NoRootFound", base_exc);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base_exc);

  // linalg
  py::class_<linalg::EigenDecomposition>(m, "EigenDecomposition")
      .def_readonly("eigenvalues", &linalg::EigenDecomposition::eigenvalues)
      .def_readonly("eigenvectors", &linalg::EigenDecomposition::eigenvectors)
      .def_readonly("residual", &linalg::EigenDecomposition::residual);
  m.def("eigendecompose", &linalg::eigendecompose, py::arg("matrix"),
        py::arg("want_vectors") = false);
  m.def("cholesky_spd", &linalg::cholesky_spd, py::arg("matrix"), py::arg("jitter") = 0.0);
  m.def("symmetric_eigenvalues", &linalg::symmetric_eigenvalues, py::arg("matrix"));

  // models
  py::class_<models::MatrixFamily>(m, "MatrixFamily")
      .def_static("kato2", &models::MatrixFamily::kato2)
      .def_static("random5", &models::MatrixFamily::random5, py::arg("seed"))
      .def_static("custom", &models::MatrixFamily::custom, py::arg("base"),
                  py::arg("coupling"), py::arg("symmetric"))
      .def_static("from_file", &models::MatrixFamily::from_file, py::arg("path"))
      .def("evaluate", &models::MatrixFamily::evaluate, py::arg("kappa"))
      .def_property_readonly("dim", &models::MatrixFamily::dim)
      .def_property_readonly("symmetric", &models::MatrixFamily::symmetric)
      .def_property_readonly("base", &models::MatrixFamily::base);

  py::class_<models::Orbit>(m, "Orbit")
      .def_static("circle", &models::Orbit::circle, py::arg("center"), py::arg("radius"),
                  py::arg("n_points"))
      .def_static("ellipse", &models::Orbit::ellipse, py::arg("center"),
                  py::arg("radius_re"), py::arg("radius_im"), py::arg("n_points"))
      .def("angle", &models::Orbit::angle, py::arg("i"))
      .def("kappa", &models::Orbit::kappa, py::arg("i"))
      .def_readonly("center", &models::Orbit::center)
      .def_readonly("radius_re", &models::Orbit::radius_re)
      .def_readonly("radius_im", &models::Orbit::radius_im)
      .def_readonly("n_points", &models::Orbit::n_points);

  py::class_<models::ParameterMap>(m, "ParameterMap")
      .def(py::init([](double center1, double center2, double relative_radius) {
             return models::ParameterMap{center1, center2, relative_radius};
           }),
           py::arg("center1"), py::arg("center2"), py::arg("relative_radius"))
      .def("to_physical", &models::ParameterMap::to_physical, py::arg("kappa"))
      .def("to_kappa", &models::ParameterMap::to_kappa, py::arg("value1"), py::arg("value2"))
      .def_readonly("center1", &models::ParameterMap::center1)
      .def_readonly("center2", &models::ParameterMap::center2)
      .def_readonly("relative_radius", &models::ParameterMap::relative_radius);

  py::class_<models::OrbitSpectrumSet>(m, "OrbitSpectrumSet")
      .def_readonly("orbit", &models::OrbitSpectrumSet::orbit)
      .def_readonly("kappas", &models::OrbitSpectrumSet::kappas)
      .def_readonly("spectra", &models::OrbitSpectrumSet::spectra)
      .def_readonly("features", &models::OrbitSpectrumSet::features)
      .def_property_readonly("n_angles", &models::OrbitSpectrumSet::n_angles)
      .def_property_readonly("dim", &models::OrbitSpectrumSet::dim);

  m.def("trace_orbit", &models::trace_orbit, py::arg("family"), py::arg("orbit"),
        py::arg("with_features") = false, py::arg("jobs") = 1);

  // grouping
  py::enum_<grouping::Metric>(m, "Metric")
      .value("EUCLIDEAN", grouping::Metric::kEuclidean)
      .value("COSINE", grouping::Metric::kCosine);
  py::enum_<grouping::Matching>(m, "Matching")
      .value("GREEDY", grouping::Matching::kGreedy)
      .value("OPTIMAL", grouping::Matching::kOptimal);

  py::class_<grouping::GroupingOptions>(m, "GroupingOptions")
      .def(py::init<>())
      .def_readwrite("metric", &grouping::GroupingOptions::metric)
      .def_readwrite("matching", &grouping::GroupingOptions::matching)
      .def_readwrite("closure_tolerance", &grouping::GroupingOptions::closure_tolerance)
      .def_readwrite("tie_tolerance", &grouping::GroupingOptions::tie_tolerance);

  py::class_<grouping::EigenPath>(m, "EigenPath")
      .def_readonly("indices", &grouping::EigenPath::indices)
      .def_readonly("values", &grouping::EigenPath::values)
      .def_readonly("start_index", &grouping::EigenPath::start_index)
      .def_readonly("end_index", &grouping::EigenPath::end_index);

  py::class_<grouping::ExchangeReport>(m, "ExchangeReport")
      .def_readonly("paths", &grouping::ExchangeReport::paths)
      .def_readonly("kappas", &grouping::ExchangeReport::kappas)
      .def_readonly("exchanging_pairs", &grouping::ExchangeReport::exchanging_pairs)
      .def_readonly("longer_cycles", &grouping::ExchangeReport::longer_cycles)
      .def_readonly("closure_tolerance", &grouping::ExchangeReport::closure_tolerance);

  py::class_<grouping::TrainingPair>(m, "TrainingPair")
      .def(py::init([](models::Complex kappa, models::Complex l1, models::Complex l2) {
             return grouping::TrainingPair{kappa, l1, l2};
           }),
           py::arg("kappa"), py::arg("lambda1"), py::arg("lambda2"))
      .def_readwrite("kappa", &grouping::TrainingPair::kappa)
      .def_readwrite("lambda1", &grouping::TrainingPair::lambda1)
      .def_readwrite("lambda2", &grouping::TrainingPair::lambda2)
      .def_property_readonly("p", &grouping::TrainingPair::p)
      .def_property_readonly("s", &grouping::TrainingPair::s);

  m.def("euclidean_distance", &grouping::euclidean_distance, py::arg("a"), py::arg("b"));
  m.def("cosine_distance", &grouping::cosine_distance, py::arg("a"), py::arg("b"));
  m.def("group_paths", &grouping::group_paths, py::arg("spectra"),
        py::arg("options") = grouping::GroupingOptions{});
  m.def("extract_training_set", &grouping::extract_training_set, py::arg("report"),
        py::arg("pair_index"), py::arg("subsample"));
  m.def("extract_training_set_for_paths", &grouping::extract_training_set_for_paths,
        py::arg("report"), py::arg("path_a"), py::arg("path_b"), py::arg("subsample"));

  // gpr
  py::enum_<gpr::KernelKind>(m, "KernelKind")
      .value("MATERN52", gpr::KernelKind::kMatern52)
      .value("MATERN_GENERAL", gpr::KernelKind::kMaternGeneral)
      .value("SQUARED_EXPONENTIAL", gpr::KernelKind::kSquaredExponential);

  py::class_<gpr::Hyperparameters>(m, "Hyperparameters")
      .def(py::init<>())
      .def_readwrite("signal_variance", &gpr::Hyperparameters::signal_variance)
      .def_readwrite("length_scales", &gpr::Hyperparameters::length_scales)
      .def_readwrite("noise_variance", &gpr::Hyperparameters::noise_variance)
      .def_readwrite("nu", &gpr::Hyperparameters::nu)
      .def_readwrite("kernel", &gpr::Hyperparameters::kernel);

  py::class_<gpr::FitOptions>(m, "FitOptions")
      .def(py::init<>())
      .def_readwrite("optimize", &gpr::FitOptions::optimize)
      .def_readwrite("optimize_noise", &gpr::FitOptions::optimize_noise)
      .def_readwrite("standardize", &gpr::FitOptions::standardize)
      .def_readwrite("restarts", &gpr::FitOptions::restarts)
      .def_readwrite("max_evaluations", &gpr::FitOptions::max_evaluations)
      .def_readwrite("seed", &gpr::FitOptions::seed);

  py::class_<gpr::Prediction>(m, "Prediction")
      .def_readonly("mean", &gpr::Prediction::mean)
      .def_readonly("variance", &gpr::Prediction::variance);

  py::class_<gpr::GprModel>(m, "GprModel")
      .def_static("fit", &gpr::GprModel::fit, py::arg("x"), py::arg("y"),
                  py::arg("h0") = gpr::Hyperparameters{},
                  py::arg("options") = gpr::FitOptions{})
      .def("predict", &gpr::GprModel::predict, py::arg("x"), py::arg("target"))
      .def("predict_all", &gpr::GprModel::predict_all, py::arg("x"))
      .def("log_marginal_likelihood", &gpr::GprModel::log_marginal_likelihood,
           py::arg("target"))
      .def("covariance_matrix", &gpr::GprModel::covariance_matrix, py::arg("target"))
      .def("loo_residuals", &gpr::GprModel::loo_residuals, py::arg("target"))
      .def("hyperparameters", &gpr::GprModel::hyperparameters, py::arg("target"),
           py::return_value_policy::copy)
      .def("output_shift", &gpr::GprModel::output_shift, py::arg("target"))
      .def("output_scale", &gpr::GprModel::output_scale, py::arg("target"))
      .def("optimizer_stalled", &gpr::GprModel::optimizer_stalled, py::arg("target"))
      .def_property_readonly("n_points", &gpr::GprModel::n_points)
      .def_property_readonly("n_targets", &gpr::GprModel::n_targets)
      .def_property_readonly("inputs", &gpr::GprModel::inputs);

  m.def("kernel_value", &gpr::kernel_value, py::arg("xp"), py::arg("xq"), py::arg("h"));
  m.def("kernel_profile", &gpr::kernel_profile, py::arg("r"), py::arg("h"));

  // epsearch
  py::enum_<epsearch::SearchStatus>(m, "SearchStatus")
      .value("RUNNING", epsearch::SearchStatus::kRunning)
      .value("CONVERGED", epsearch::SearchStatus::kConverged)
      .value("CONVERGED_DELTA_LAMBDA", epsearch::SearchStatus::kConvergedDeltaLambda)
      .value("BUDGET_EXHAUSTED", epsearch::SearchStatus::kBudgetExhausted);

  py::class_<epsearch::PairScore>(m, "PairScore")
      .def_readonly("pair", &epsearch::PairScore::pair)
      .def_readonly("discrepancy", &epsearch::PairScore::discrepancy);

  py::class_<epsearch::PairRanking>(m, "PairRanking")
      .def_readonly("ranked", &epsearch::PairRanking::ranked)
      .def_readonly("gap_ratio", &epsearch::PairRanking::gap_ratio);

  py::class_<epsearch::EpSearchConfig>(m, "EpSearchConfig")
      .def(py::init(&epsearch::make_default_config))
      .def_readwrite("max_iterations", &epsearch::EpSearchConfig::max_iterations)
      .def_readwrite("kernel_drop_factor", &epsearch::EpSearchConfig::kernel_drop_factor)
      .def_readwrite("min_gap", &epsearch::EpSearchConfig::min_gap)
      .def_readwrite("exploration_after", &epsearch::EpSearchConfig::exploration_after)
      .def_readwrite("delta_lambda_tol", &epsearch::EpSearchConfig::delta_lambda_tol)
      .def_readwrite("variance_floor_rel", &epsearch::EpSearchConfig::variance_floor_rel)
      .def_readwrite("hyper0", &epsearch::EpSearchConfig::hyper0)
      .def_readwrite("fit", &epsearch::EpSearchConfig::fit);

  py::class_<epsearch::EpSearchState>(m, "EpSearchState")
      .def_readonly("training", &epsearch::EpSearchState::training)
      .def_readonly("kappa_history", &epsearch::EpSearchState::kappa_history)
      .def_readonly("kernel_eig_history", &epsearch::EpSearchState::kernel_eig_history)
      .def_readonly("delta_lambda_history", &epsearch::EpSearchState::delta_lambda_history)
      .def_readonly("gap_ratio_history", &epsearch::EpSearchState::gap_ratio_history)
      .def_readonly("exploration_points", &epsearch::EpSearchState::exploration_points)
      .def_readonly("status", &epsearch::EpSearchState::status)
      .def_readonly("iterations", &epsearch::EpSearchState::iterations)
      .def_readonly("diagonalizations", &epsearch::EpSearchState::diagonalizations)
      .def_readonly("ambiguous_pair", &epsearch::EpSearchState::ambiguous_pair)
      .def_readonly("monotonicity_violations",
                    &epsearch::EpSearchState::monotonicity_violations)
      .def_readonly("accepted_iterations", &epsearch::EpSearchState::accepted_iterations)
      .def_readonly("convergence_drop_ratio",
                    &epsearch::EpSearchState::convergence_drop_ratio);

  py::class_<epsearch::EpResult>(m, "EpResult")
      .def_readonly("kappa_ep", &epsearch::EpResult::kappa_ep)
      .def_readonly("lambda1", &epsearch::EpResult::lambda1)
      .def_readonly("lambda2", &epsearch::EpResult::lambda2)
      .def_readonly("delta_lambda", &epsearch::EpResult::delta_lambda)
      .def_readonly("physical", &epsearch::EpResult::physical)
      .def_readonly("diagnostics", &epsearch::EpResult::diagnostics);

  py::class_<epsearch::BruteForceResult>(m, "BruteForceResult")
      .def_readonly("kappa", &epsearch::BruteForceResult::kappa)
      .def_readonly("lambda1", &epsearch::BruteForceResult::lambda1)
      .def_readonly("lambda2", &epsearch::BruteForceResult::lambda2)
      .def_readonly("abs_p", &epsearch::BruteForceResult::abs_p)
      .def_readonly("iterations", &epsearch::BruteForceResult::iterations)
      .def_readonly("evaluations", &epsearch::BruteForceResult::evaluations);

  m.def("pair_discrepancy_all", &epsearch::pair_discrepancy_all, py::arg("spectrum"),
        py::arg("pred_p"), py::arg("pred_s"));
  m.def("make_default_config", &epsearch::make_default_config);
  m.def("kernel_collapse_ratio", &epsearch::kernel_collapse_ratio, py::arg("eig"),
        py::arg("noise_variance"));
  m.def("check_convergence", &epsearch::check_convergence, py::arg("state"),
        py::arg("config"));
  m.def(
      "iterate",
      [](const models::MatrixFamily& family, const std::vector<grouping::TrainingPair>& initial,
         const epsearch::EpSearchConfig& config,
         const std::optional<models::ParameterMap>& map) {
        return epsearch::iterate(family, initial, config, map);
      },
      py::arg("family"), py::arg("initial"),
      py::arg("config") = epsearch::make_default_config(),
      py::arg("map") = std::nullopt);
  m.def(
      "brute_force_ep",
      [](const models::MatrixFamily& family, models::Complex start) {
        return epsearch::brute_force_ep(family, start);
      },
      py::arg("family"), py::arg("start"));
}
