// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command line front end: trace spectra around a loop, group them into
// paths, run the surrogate search for the degeneracy, or cross-check with
// the brute-force root finder. Exit codes: 0 success, 2 bad configuration
// or input file, 3 numerical failure, 4 no exchange signature found,
// 5 reference root finder found no root.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "epfind/epsearch.hpp"
#include "epfind/errors.hpp"
#include "epfind/gpr.hpp"
#include "epfind/grouping.hpp"
#include "epfind/io_json.hpp"
#include "epfind/linalg.hpp"
#include "epfind/models.hpp"

namespace {

namespace fs = std::filesystem;
using epfind::models::Complex;

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitNoExchange = 4;
constexpr int kExitNoRoot = 5;

struct Settings {
  // family
  std::string family_kind = "kato2";
  std::uint64_t seed = 42;
  std::string family_path;

  // orbit: the canonical two-mode detection loop, which encloses the upper
  // degeneracy; every field is overridable per run.
  double center_re = 0.0;
  double center_im = 0.8;
  double radius_re = 0.5;
  double radius_im = 0.5;
  int n_points = 100;

  // grouping
  std::string metric = "euclidean";
  std::string matching = "greedy";
  std::optional<double> closure_tolerance;

  // search
  int subsample = 20;
  int max_iterations = 25;
  double kernel_drop_factor = 1e3;
  double min_gap = 10.0;
  int exploration_after = 2;
  double delta_lambda_tol = 0.0;
  double noise_variance = 1e-12;
  bool optimize = true;
  int restarts = 5;
  int max_evaluations = 500;

  // parameter map
  std::optional<double> map_center1;
  std::optional<double> map_center2;
  std::optional<double> map_rho;

  std::string out_dir = ".";
  int jobs = 1;
};

// Fills settings from the JSON config file; CLI flags override afterwards.
void apply_config(const fs::path& path, Settings& s) {
  std::ifstream in(path);
  if (!in) {
    throw epfind::ParseError("cannot open config file " + path.string());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw epfind::ParseError("config file " + path.string() + ": " + e.what());
  }
  try {
    if (doc.contains("family")) {
      const auto& f = doc["family"];
      if (f.contains("kind")) s.family_kind = f["kind"].get<std::string>();
      if (f.contains("seed")) s.seed = f["seed"].get<std::uint64_t>();
      if (f.contains("path")) s.family_path = f["path"].get<std::string>();
    }
    if (doc.contains("orbit")) {
      const auto& o = doc["orbit"];
      if (o.contains("center")) {
        s.center_re = o["center"].at(0).get<double>();
        s.center_im = o["center"].at(1).get<double>();
      }
      if (o.contains("radius")) {
        s.radius_re = s.radius_im = o["radius"].get<double>();
      }
      if (o.contains("radius_re")) s.radius_re = o["radius_re"].get<double>();
      if (o.contains("radius_im")) s.radius_im = o["radius_im"].get<double>();
      if (o.contains("n_points")) s.n_points = o["n_points"].get<int>();
    }
    if (doc.contains("grouping")) {
      const auto& g = doc["grouping"];
      if (g.contains("metric")) s.metric = g["metric"].get<std::string>();
      if (g.contains("matching")) s.matching = g["matching"].get<std::string>();
      if (g.contains("closure_tolerance")) {
        s.closure_tolerance = g["closure_tolerance"].get<double>();
      }
    }
    if (doc.contains("search")) {
      const auto& e = doc["search"];
      if (e.contains("subsample")) s.subsample = e["subsample"].get<int>();
      if (e.contains("max_iterations")) s.max_iterations = e["max_iterations"].get<int>();
      if (e.contains("kernel_drop_factor")) {
        s.kernel_drop_factor = e["kernel_drop_factor"].get<double>();
      }
      if (e.contains("min_gap")) s.min_gap = e["min_gap"].get<double>();
      if (e.contains("exploration_after")) {
        s.exploration_after = e["exploration_after"].get<int>();
      }
      if (e.contains("delta_lambda_tol")) {
        s.delta_lambda_tol = e["delta_lambda_tol"].get<double>();
      }
      if (e.contains("noise_variance")) s.noise_variance = e["noise_variance"].get<double>();
      if (e.contains("optimize")) s.optimize = e["optimize"].get<bool>();
      if (e.contains("restarts")) s.restarts = e["restarts"].get<int>();
      if (e.contains("max_evaluations")) s.max_evaluations = e["max_evaluations"].get<int>();
    }
    if (doc.contains("map")) {
      const auto& m = doc["map"];
      s.map_center1 = m.at("center1").get<double>();
      s.map_center2 = m.at("center2").get<double>();
      s.map_rho = m.at("relative_radius").get<double>();
    }
    if (doc.contains("out_dir")) s.out_dir = doc["out_dir"].get<std::string>();
    if (doc.contains("jobs")) s.jobs = doc["jobs"].get<int>();
    if (doc.contains("seed")) s.seed = doc["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw epfind::ParseError("config file " + path.string() + ": " + e.what());
  }
}

epfind::models::MatrixFamily make_family(const Settings& s) {
  if (s.family_kind == "kato2") {
    return epfind::models::MatrixFamily::kato2();
  }
  if (s.family_kind == "random5") {
    return epfind::models::MatrixFamily::random5(s.seed);
  }
  if (s.family_kind == "file") {
    if (s.family_path.empty()) {
      throw epfind::ParseError("family kind 'file' needs a path");
    }
    return epfind::models::MatrixFamily::from_file(s.family_path);
  }
  throw epfind::ParseError("unknown family kind '" + s.family_kind +
                           "' (expected kato2, random5 or file)");
}

epfind::models::Orbit make_orbit(const Settings& s) {
  const auto orbit = epfind::models::Orbit::ellipse(
      Complex(s.center_re, s.center_im), s.radius_re, s.radius_im, s.n_points);
  try {
    orbit.validate();
  } catch (const std::invalid_argument& e) {
    throw epfind::ParseError(e.what());
  }
  return orbit;
}

epfind::grouping::GroupingOptions make_grouping(const Settings& s) {
  epfind::grouping::GroupingOptions options;
  if (s.metric == "euclidean") {
    options.metric = epfind::grouping::Metric::kEuclidean;
  } else if (s.metric == "cosine") {
    options.metric = epfind::grouping::Metric::kCosine;
  } else {
    throw epfind::ParseError("unknown metric '" + s.metric + "'");
  }
  if (s.matching == "greedy") {
    options.matching = epfind::grouping::Matching::kGreedy;
  } else if (s.matching == "optimal") {
    options.matching = epfind::grouping::Matching::kOptimal;
  } else {
    throw epfind::ParseError("unknown matching '" + s.matching + "'");
  }
  options.closure_tolerance = s.closure_tolerance;
  return options;
}

epfind::epsearch::EpSearchConfig make_search_config(const Settings& s) {
  auto config = epfind::epsearch::make_default_config();
  config.max_iterations = s.max_iterations;
  config.kernel_drop_factor = s.kernel_drop_factor;
  config.min_gap = s.min_gap;
  config.exploration_after = s.exploration_after;
  config.delta_lambda_tol = s.delta_lambda_tol;
  config.hyper0.noise_variance = s.noise_variance;
  config.fit.optimize = s.optimize;
  config.fit.restarts = s.restarts;
  config.fit.max_evaluations = s.max_evaluations;
  return config;
}

std::optional<epfind::models::ParameterMap> make_map(const Settings& s) {
  if (!s.map_center1 && !s.map_center2 && !s.map_rho) {
    return std::nullopt;
  }
  if (!(s.map_center1 && s.map_center2 && s.map_rho)) {
    throw epfind::ParseError("parameter map needs center1, center2 and relative_radius");
  }
  return epfind::models::ParameterMap{*s.map_center1, *s.map_center2, *s.map_rho};
}

fs::path ensure_out_dir(const Settings& s) {
  fs::path dir(s.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw epfind::ParseError("cannot create output directory " + dir.string() + ": " +
                             ec.message());
  }
  return dir;
}

int run_trace(const Settings& s, bool with_features) {
  const auto family = make_family(s);
  const auto orbit = make_orbit(s);
  const auto set = epfind::models::trace_orbit(family, orbit, with_features, s.jobs);
  const fs::path dir = ensure_out_dir(s);
  epfind::io::save_spectra(dir / "spectra.json", set);
  epfind::io::atomic_write(dir / "spectra.csv", epfind::io::spectra_to_csv(set));
  std::cout << "traced " << set.n_angles() << " angles, dim " << set.dim() << ", wrote "
            << (dir / "spectra.json").string() << "\n";
  return 0;
}

int run_group(const Settings& s, const std::string& spectra_path, bool with_features) {
  epfind::models::OrbitSpectrumSet set;
  if (!spectra_path.empty()) {
    set = epfind::io::load_spectra(spectra_path);
  } else {
    set = epfind::models::trace_orbit(make_family(s), make_orbit(s),
                                      with_features || s.metric == "cosine", s.jobs);
  }
  const auto report = epfind::grouping::group_paths(set, make_grouping(s));
  const fs::path dir = ensure_out_dir(s);
  epfind::io::atomic_write(dir / "exchange_report.json",
                           epfind::io::report_to_json(report).dump(2) + "\n");
  epfind::io::atomic_write(dir / "paths.csv", epfind::io::paths_to_csv(report));
  std::cout << "grouped " << report.paths.size() << " paths, "
            << report.exchanging_pairs.size() << " exchanging pair(s), wrote "
            << (dir / "exchange_report.json").string() << "\n";
  return 0;
}

int run_find_ep(const Settings& s, const std::string& spectra_path) {
  const auto family = make_family(s);
  epfind::models::OrbitSpectrumSet set;
  if (!spectra_path.empty()) {
    set = epfind::io::load_spectra(spectra_path);
  } else {
    set = epfind::models::trace_orbit(family, make_orbit(s), s.metric == "cosine", s.jobs);
  }
  const auto report = epfind::grouping::group_paths(set, make_grouping(s));
  if (report.exchanging_pairs.empty()) {
    std::cerr << "epfind: no exchanging pair inside the loop (" << report.paths.size()
              << " paths all closed)\n";
    return kExitNoExchange;
  }

  const auto config = make_search_config(s);
  const auto map = make_map(s);
  const fs::path dir = ensure_out_dir(s);

  bool all_converged = true;
  for (std::size_t pair = 0; pair < report.exchanging_pairs.size(); ++pair) {
    const int subsample = std::clamp(s.subsample, 8, set.n_angles());
    const auto training = epfind::grouping::extract_training_set(
        report, static_cast<int>(pair), subsample);
    const auto result = epfind::epsearch::iterate(family, training, config, map);

    const std::string suffix = report.exchanging_pairs.size() > 1
                                   ? "_pair" + std::to_string(pair)
                                   : "";
    epfind::io::atomic_write(dir / ("result" + suffix + ".json"),
                             epfind::io::result_to_json(result).dump(2) + "\n");
    epfind::io::atomic_write(dir / ("iterations" + suffix + ".csv"),
                             epfind::io::iterations_to_csv(result.diagnostics));

    const bool converged =
        result.diagnostics.status == epfind::epsearch::SearchStatus::kConverged ||
        result.diagnostics.status == epfind::epsearch::SearchStatus::kConvergedDeltaLambda;
    all_converged = all_converged && converged;
    std::cout << "pair " << pair << ": kappa_ep = " << epfind::io::format_double(
                     result.kappa_ep.real()) << " + "
              << epfind::io::format_double(result.kappa_ep.imag())
              << "i, delta_lambda = " << epfind::io::format_double(result.delta_lambda)
              << ", diagonalizations = " << result.diagnostics.diagonalizations
              << ", status = " << (converged ? "converged" : "budget_exhausted") << "\n";
    if (result.physical) {
      std::cout << "pair " << pair << ": physical = ("
                << epfind::io::format_double((*result.physical)[0]) << ", "
                << epfind::io::format_double((*result.physical)[1]) << ")\n";
    }
  }
  return all_converged ? 0 : kExitSolver;
}

int run_oracle(const Settings& s, double start_re, double start_im) {
  const auto family = make_family(s);
  const auto result =
      epfind::epsearch::brute_force_ep(family, Complex(start_re, start_im));
  const fs::path dir = ensure_out_dir(s);
  nlohmann::json doc;
  doc["kappa"] = {result.kappa.real(), result.kappa.imag()};
  doc["lambda1"] = {result.lambda1.real(), result.lambda1.imag()};
  doc["lambda2"] = {result.lambda2.real(), result.lambda2.imag()};
  doc["abs_p"] = result.abs_p;
  doc["iterations"] = result.iterations;
  doc["evaluations"] = result.evaluations;
  epfind::io::atomic_write(dir / "oracle.json", doc.dump(2) + "\n");
  std::cout << "oracle: kappa = " << epfind::io::format_double(result.kappa.real()) << " + "
            << epfind::io::format_double(result.kappa.imag()) << "i, |p| = "
            << epfind::io::format_double(result.abs_p) << ", evaluations = "
            << result.evaluations << "\n";
  return 0;
}

int run_gpr_fit(const Settings& s, const std::string& data_path, const std::string& kernel,
                double nu, bool optimize_noise) {
  Eigen::MatrixXd x, y;
  epfind::io::load_xy(data_path, x, y);

  epfind::gpr::Hyperparameters h0;
  if (kernel == "matern52") {
    h0.kernel = epfind::gpr::KernelKind::kMatern52;
  } else if (kernel == "matern") {
    h0.kernel = epfind::gpr::KernelKind::kMaternGeneral;
    h0.nu = nu;
  } else if (kernel == "squared-exponential") {
    h0.kernel = epfind::gpr::KernelKind::kSquaredExponential;
  } else {
    throw epfind::ParseError("unknown kernel '" + kernel + "'");
  }
  h0.noise_variance = s.noise_variance;

  epfind::gpr::FitOptions options;
  options.optimize = s.optimize;
  options.optimize_noise = optimize_noise;
  options.restarts = s.restarts;
  options.max_evaluations = s.max_evaluations;
  options.seed = s.seed;

  const auto model = epfind::gpr::GprModel::fit(x, y, h0, options);
  const fs::path dir = ensure_out_dir(s);
  epfind::io::atomic_write(dir / "gpr_model.json", model.to_json().dump(2) + "\n");

  nlohmann::json diag;
  for (int t = 0; t < model.n_targets(); ++t) {
    const auto& h = model.hyperparameters(t);
    const Eigen::VectorXd loo = model.loo_residuals(t);
    diag["targets"].push_back({
        {"log_marginal_likelihood", model.log_marginal_likelihood(t)},
        {"signal_variance", h.signal_variance},
        {"length_scales", {h.length_scales(0), h.length_scales(1)}},
        {"noise_variance", h.noise_variance},
        {"stalled", model.optimizer_stalled(t)},
        {"loo_rms", std::sqrt(loo.squaredNorm() / static_cast<double>(loo.size()))},
    });
    std::cout << "target " << t << ": lml = "
              << epfind::io::format_double(model.log_marginal_likelihood(t))
              << ", loo_rms = "
              << epfind::io::format_double(
                     std::sqrt(loo.squaredNorm() / static_cast<double>(loo.size())))
              << (model.optimizer_stalled(t) ? " (optimizer stalled)" : "") << "\n";
  }
  epfind::io::atomic_write(dir / "gpr_diagnostics.json", diag.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locate eigenvalue degeneracies of parameter-dependent matrices"};
  app.require_subcommand(1);

  Settings s;
  std::string config_path;
  std::string spectra_path;
  bool with_features = false;
  double start_re = 0.0, start_im = 1.0;
  std::string data_path;
  std::string kernel = "matern52";
  double nu = 2.5;
  bool optimize_noise = false;
  bool no_optimize = false;

  // Shared options get registered on each subcommand so they appear in the
  // right --help; the lambda wires them to the same Settings object.
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file; explicit flags win");
    cmd->add_option("--out-dir", s.out_dir, "Output directory");
    cmd->add_option("--seed", s.seed, "Seed for the random5 family and the optimizer");
    cmd->add_option("--jobs", s.jobs, "Worker threads for tracing");
  };
  auto add_family = [&](CLI::App* cmd) {
    cmd->add_option("--family", s.family_kind, "kato2, random5 or file");
    cmd->add_option("--family-file", s.family_path, "Family JSON (with --family file)");
  };
  auto add_orbit = [&](CLI::App* cmd) {
    cmd->add_option("--center-re", s.center_re, "Loop center, real part");
    cmd->add_option("--center-im", s.center_im, "Loop center, imaginary part");
    cmd->add_option("--radius", [&s](const std::vector<std::string>& v) {
      s.radius_re = s.radius_im = std::stod(v.at(0));
      return true;
    }, "Circular loop radius");
    cmd->add_option("--radius-re", s.radius_re, "Semi-axis along Re");
    cmd->add_option("--radius-im", s.radius_im, "Semi-axis along Im");
    cmd->add_option("--points", s.n_points, "Samples around the loop");
  };
  auto add_grouping = [&](CLI::App* cmd) {
    cmd->add_option("--metric", s.metric, "euclidean or cosine");
    cmd->add_option("--matching", s.matching, "greedy or optimal");
    cmd->add_option("--closure-tolerance",
                    [&s](const std::vector<std::string>& v) {
                      s.closure_tolerance = std::stod(v.at(0));
                      return true;
                    },
                    "Override the automatic path-closure tolerance");
  };

  auto* trace = app.add_subcommand("trace", "Diagonalize along a loop and store the spectra");
  add_common(trace);
  add_family(trace);
  add_orbit(trace);
  trace->add_flag("--features", with_features, "Store eigenvector features too");

  auto* group = app.add_subcommand("group", "Group spectra into paths and find exchanges");
  add_common(group);
  add_family(group);
  add_orbit(group);
  add_grouping(group);
  group->add_option("--spectra", spectra_path, "Read spectra from file instead of tracing");
  group->add_flag("--features", with_features, "Trace with eigenvector features");

  auto* find = app.add_subcommand("find-ep", "Run the surrogate search for the degeneracy");
  add_common(find);
  add_family(find);
  add_orbit(find);
  add_grouping(find);
  find->add_option("--spectra", spectra_path, "Reuse traced spectra from file");
  find->add_option("--subsample", s.subsample, "Initial training pairs from the loop");
  find->add_option("--max-iterations", s.max_iterations, "Search iteration budget");
  find->add_option("--drop-factor", s.kernel_drop_factor,
                   "Kernel min-eigenvalue drop that signals convergence");
  find->add_option("--min-gap", s.min_gap, "Pair-ranking gap below which a warning is raised");
  find->add_option("--exploration-after", s.exploration_after,
                   "Iteration after which one extrapolation probe is added (0 = off)");
  find->add_option("--delta-lambda-tol", s.delta_lambda_tol,
                   "Absolute eigenvalue-distance target (0 = kernel signal only)");
  find->add_option("--noise-variance", s.noise_variance, "Surrogate noise variance");
  find->add_flag("--no-optimize", no_optimize, "Freeze hyperparameters at their seeds");
  find->add_option("--restarts", s.restarts, "Optimizer restarts");
  find->add_option("--max-evaluations", s.max_evaluations, "Optimizer evaluations per restart");
  find->add_option("--map-center1", [&s](const std::vector<std::string>& v) {
    s.map_center1 = std::stod(v.at(0));
    return true;
  }, "Physical center for Re kappa");
  find->add_option("--map-center2", [&s](const std::vector<std::string>& v) {
    s.map_center2 = std::stod(v.at(0));
    return true;
  }, "Physical center for Im kappa");
  find->add_option("--map-rho", [&s](const std::vector<std::string>& v) {
    s.map_rho = std::stod(v.at(0));
    return true;
  }, "Relative loop radius of the map");

  auto* oracle = app.add_subcommand("oracle", "Brute-force reference root of the discriminant");
  add_common(oracle);
  add_family(oracle);
  oracle->add_option("--start-re", start_re, "Start point, real part");
  oracle->add_option("--start-im", start_im, "Start point, imaginary part");

  auto* gprfit = app.add_subcommand("gpr-fit", "Fit surrogates to a data file and report");
  add_common(gprfit);
  gprfit->add_option("--data", data_path, "JSON data file with x and y")->required();
  gprfit->add_option("--kernel", kernel, "matern52, matern or squared-exponential");
  gprfit->add_option("--nu", nu, "Smoothness for --kernel matern");
  gprfit->add_option("--noise-variance", s.noise_variance, "Noise variance");
  gprfit->add_flag("--optimize-noise", optimize_noise, "Optimize the noise variance too");
  gprfit->add_flag("--no-optimize", no_optimize, "Freeze hyperparameters at their seeds");
  gprfit->add_option("--restarts", s.restarts, "Optimizer restarts");
  gprfit->add_option("--max-evaluations", s.max_evaluations, "Optimizer evaluations per restart");

  // First pass parses the flags; config values must not clobber explicit
  // flags, so the config file is applied and the line is parsed once more.
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (!config_path.empty()) {
      apply_config(config_path, s);
      app.clear();
      app.parse(argc, argv);
    }
    if (no_optimize) {
      s.optimize = false;
    }
    s.noise_variance = std::max(s.noise_variance, 0.0);

    if (trace->parsed()) return run_trace(s, with_features);
    if (group->parsed()) return run_group(s, spectra_path, with_features);
    if (find->parsed()) return run_find_ep(s, spectra_path);
    if (oracle->parsed()) return run_oracle(s, start_re, start_im);
    if (gprfit->parsed()) return run_gpr_fit(s, data_path, kernel, nu, optimize_noise);
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    return kExitConfig;
  } catch (const epfind::ParseError& e) {
    std::cerr << "epfind: " << e.what() << "\n";
    return kExitConfig;
  } catch (const epfind::NoRootFound& e) {
    std::cerr << "epfind: " << e.what() << "\n";
    return kExitNoRoot;
  } catch (const epfind::NotExchanging& e) {
    std::cerr << "epfind: " << e.what() << "\n";
    return kExitNoExchange;
  } catch (const epfind::Error& e) {
    std::cerr << "epfind: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "epfind: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "epfind: unexpected error: " << e.what() << "\n";
    return kExitSolver;
  }
}
