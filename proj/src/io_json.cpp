// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#include "epfind/io_json.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

namespace epfind::io {

namespace {

nlohmann::json complex_to_json(models::Complex z) {
  return nlohmann::json::array({z.real(), z.imag()});
}

models::Complex complex_from_json(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

std::string status_name(epsearch::SearchStatus status) {
  switch (status) {
    case epsearch::SearchStatus::kRunning: return "running";
    case epsearch::SearchStatus::kConverged: return "converged";
    case epsearch::SearchStatus::kConvergedDeltaLambda: return "converged_delta_lambda";
    case epsearch::SearchStatus::kBudgetExhausted: return "budget_exhausted";
  }
  return "unknown";
}

}  // namespace

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot open " + tmp.string() + " for writing");
    }
    out << content;
    out.flush();
    if (!out) {
      throw Error("short write to " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error("cannot move " + tmp.string() + " onto " + path.string() + ": " + ec.message());
  }
}

nlohmann::json spectra_to_json(const models::OrbitSpectrumSet& set) {
  nlohmann::json doc;
  doc["orbit"] = {
      {"center", complex_to_json(set.orbit.center)},
      {"radius_re", set.orbit.radius_re},
      {"radius_im", set.orbit.radius_im},
      {"n_points", set.orbit.n_points},
  };
  doc["kappa"] = nlohmann::json::array();
  for (const auto& k : set.kappas) {
    doc["kappa"].push_back(complex_to_json(k));
  }
  doc["spectra"] = nlohmann::json::array();
  for (const auto& spectrum : set.spectra) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < spectrum.size(); ++j) {
      row.push_back(complex_to_json(spectrum(j)));
    }
    doc["spectra"].push_back(std::move(row));
  }
  if (set.has_features()) {
    doc["features"] = nlohmann::json::array();
    for (const auto& per_angle : set.features) {
      nlohmann::json row = nlohmann::json::array();
      for (const auto& f : per_angle) {
        row.push_back(std::vector<double>(f.data(), f.data() + f.size()));
      }
      doc["features"].push_back(std::move(row));
    }
  }
  return doc;
}

models::OrbitSpectrumSet spectra_from_json(const nlohmann::json& doc) {
  try {
    models::OrbitSpectrumSet set;
    if (doc.contains("orbit")) {
      const auto& orbit = doc.at("orbit");
      set.orbit.center = complex_from_json(orbit.at("center"));
      set.orbit.radius_re = orbit.at("radius_re").get<double>();
      set.orbit.radius_im = orbit.at("radius_im").get<double>();
      set.orbit.n_points = orbit.at("n_points").get<int>();
    }
    const auto& kappas = doc.at("kappa");
    const auto& spectra = doc.at("spectra");
    if (kappas.size() != spectra.size()) {
      throw ParseError("spectra file: kappa and spectra lengths disagree");
    }
    if (set.orbit.n_points == 0) {
      set.orbit.n_points = static_cast<int>(kappas.size());
    }
    for (const auto& k : kappas) {
      set.kappas.push_back(complex_from_json(k));
    }
    for (const auto& row : spectra) {
      Eigen::VectorXcd spectrum(static_cast<Eigen::Index>(row.size()));
      for (std::size_t j = 0; j < row.size(); ++j) {
        spectrum(static_cast<Eigen::Index>(j)) = complex_from_json(row[j]);
      }
      if (!set.spectra.empty() && spectrum.size() != set.spectra.front().size()) {
        throw ParseError("spectra file: inconsistent spectrum lengths");
      }
      set.spectra.push_back(std::move(spectrum));
    }
    if (doc.contains("features")) {
      for (const auto& row : doc.at("features")) {
        std::vector<Eigen::VectorXd> per_angle;
        for (const auto& f : row) {
          const auto values = f.get<std::vector<double>>();
          per_angle.push_back(Eigen::Map<const Eigen::VectorXd>(
              values.data(), static_cast<Eigen::Index>(values.size())));
        }
        set.features.push_back(std::move(per_angle));
      }
      if (set.features.size() != set.spectra.size()) {
        throw ParseError("spectra file: features and spectra lengths disagree");
      }
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("spectra file: ") + e.what());
  }
}

void save_spectra(const std::filesystem::path& path, const models::OrbitSpectrumSet& set) {
  atomic_write(path, spectra_to_json(set).dump(2) + "\n");
}

models::OrbitSpectrumSet load_spectra(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open spectra file " + path.string());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("spectra file " + path.string() + ": " + e.what());
  }
  return spectra_from_json(doc);
}

std::string spectra_to_csv(const models::OrbitSpectrumSet& set) {
  std::ostringstream out;
  const Eigen::Index dim = set.dim();
  out << "angle_index,kappa_re,kappa_im";
  for (Eigen::Index j = 0; j < dim; ++j) {
    out << ",eig" << j << "_re,eig" << j << "_im";
  }
  out << "\n";
  for (int i = 0; i < set.n_angles(); ++i) {
    out << i << "," << format_double(set.kappas[static_cast<std::size_t>(i)].real()) << ","
        << format_double(set.kappas[static_cast<std::size_t>(i)].imag());
    const auto& spectrum = set.spectra[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < dim; ++j) {
      out << "," << format_double(spectrum(j).real()) << ","
          << format_double(spectrum(j).imag());
    }
    out << "\n";
  }
  return out.str();
}

nlohmann::json report_to_json(const grouping::ExchangeReport& report) {
  nlohmann::json doc;
  doc["closure_tolerance"] = report.closure_tolerance;
  doc["metric"] = report.metric == grouping::Metric::kEuclidean ? "euclidean" : "cosine";
  doc["kappa"] = nlohmann::json::array();
  for (const auto& k : report.kappas) {
    doc["kappa"].push_back(complex_to_json(k));
  }
  doc["paths"] = nlohmann::json::array();
  for (const auto& path : report.paths) {
    nlohmann::json entry;
    entry["start_index"] = path.start_index;
    entry["end_index"] = path.end_index;
    entry["indices"] = path.indices;
    entry["values"] = nlohmann::json::array();
    for (const auto& v : path.values) {
      entry["values"].push_back(complex_to_json(v));
    }
    doc["paths"].push_back(std::move(entry));
  }
  doc["exchanging_pairs"] = nlohmann::json::array();
  for (const auto& [a, b] : report.exchanging_pairs) {
    doc["exchanging_pairs"].push_back(nlohmann::json::array({a, b}));
  }
  doc["longer_cycles"] = report.longer_cycles;
  return doc;
}

std::string paths_to_csv(const grouping::ExchangeReport& report) {
  std::ostringstream out;
  out << "angle_index,kappa_re,kappa_im";
  for (std::size_t p = 0; p < report.paths.size(); ++p) {
    out << ",path" << p << "_re,path" << p << "_im";
  }
  out << "\n";
  const std::size_t n = report.kappas.size();
  for (std::size_t t = 0; t < n; ++t) {
    out << t << "," << format_double(report.kappas[t].real()) << ","
        << format_double(report.kappas[t].imag());
    for (const auto& path : report.paths) {
      out << "," << format_double(path.values[t].real()) << ","
          << format_double(path.values[t].imag());
    }
    out << "\n";
  }
  return out.str();
}

nlohmann::json result_to_json(const epsearch::EpResult& result) {
  nlohmann::json doc;
  doc["kappa_ep"] = complex_to_json(result.kappa_ep);
  doc["lambda1"] = complex_to_json(result.lambda1);
  doc["lambda2"] = complex_to_json(result.lambda2);
  doc["delta_lambda"] = result.delta_lambda;
  if (result.physical) {
    doc["physical"] = {(*result.physical)[0], (*result.physical)[1]};
  } else {
    doc["physical"] = nullptr;
  }
  const auto& d = result.diagnostics;
  doc["status"] = status_name(d.status);
  doc["iterations"] = d.iterations;
  doc["diagonalizations"] = d.diagonalizations;
  doc["ambiguous_pair"] = d.ambiguous_pair;
  doc["monotonicity_violations"] = d.monotonicity_violations;
  doc["accepted_iterations"] = d.accepted_iterations;
  doc["convergence_drop_ratio"] = d.convergence_drop_ratio;
  doc["gap_ratios"] = d.gap_ratio_history;
  doc["kernel_eig_history"] = d.kernel_eig_history;
  doc["delta_lambda_history"] = d.delta_lambda_history;
  doc["kappa_history"] = nlohmann::json::array();
  for (const auto& k : d.kappa_history) {
    doc["kappa_history"].push_back(complex_to_json(k));
  }
  doc["exploration_points"] = nlohmann::json::array();
  for (const auto& k : d.exploration_points) {
    doc["exploration_points"].push_back(complex_to_json(k));
  }
  return doc;
}

std::string iterations_to_csv(const epsearch::EpSearchState& state) {
  std::ostringstream out;
  out << "iteration,kappa_re,kappa_im,min_kernel_eig,delta_lambda\n";
  for (std::size_t k = 0; k < state.kappa_history.size(); ++k) {
    // delta_lambda_history[0] is the initial-set baseline; entry k+1 belongs
    // to iteration k+1, as does kernel_eig_history[k].
    out << (k + 1) << "," << format_double(state.kappa_history[k].real()) << ","
        << format_double(state.kappa_history[k].imag()) << ","
        << format_double(state.kernel_eig_history[k]) << ","
        << format_double(state.delta_lambda_history[k + 1]) << "\n";
  }
  return out.str();
}

void load_xy(const std::filesystem::path& path, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open data file " + path.string());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("data file " + path.string() + ": " + e.what());
  }
  try {
    const auto& xs = doc.at("x");
    const auto& ys = doc.at("y");
    if (xs.size() != ys.size() || xs.empty()) {
      throw ParseError("data file " + path.string() + ": x and y must be equal-length and nonempty");
    }
    const auto n = static_cast<Eigen::Index>(xs.size());
    const auto m = static_cast<Eigen::Index>(ys.at(0).size());
    x.resize(n, 2);
    y.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& xr = xs[static_cast<std::size_t>(i)];
      if (xr.size() != 2) {
        throw ParseError("data file " + path.string() + ": x rows must have two entries");
      }
      x(i, 0) = xr.at(0).get<double>();
      x(i, 1) = xr.at(1).get<double>();
      const auto& yr = ys[static_cast<std::size_t>(i)];
      if (static_cast<Eigen::Index>(yr.size()) != m) {
        throw ParseError("data file " + path.string() + ": ragged y rows");
      }
      for (Eigen::Index t = 0; t < m; ++t) {
        y(i, t) = yr.at(static_cast<std::size_t>(t)).get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("data file " + path.string() + ": " + e.what());
  }
}

}  // namespace epfind::io
