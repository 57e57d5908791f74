// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end tests for the command-line tool.  Each case runs the installed
// binary in a scratch directory and checks exit codes and written artifacts,
// treating the executable purely as a black box.

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = EPFIND_CLI_PATH;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("epfind_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the tool with the given arguments, redirecting stdout/stderr into the
// scratch directory, and returns the process exit code.
int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = kCli + " " + args + " > " + (dir / "stdout.txt").string() +
                          " 2> " + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json load_json(const fs::path& path) {
  return nlohmann::json::parse(slurp(path));
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header) {
  std::istringstream in(text);
  std::string line;
  REQUIRE(std::getline(in, line));
  if (header != nullptr) {
    *header = line;
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      row.push_back(std::stod(cell));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << content;
}

// A hand-written family file equivalent to the built-in two-mode model
// [[1, k], [k, -1]]: diag(1, -1) base with the parameter added at (0,1)
// and (1,0).
const char* kTwoModeFamilyJson = R"({
  "dim": 2,
  "symmetric": true,
  "base": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [-1.0, 0.0]],
  "coupling": [[0, 1], [1, 0]]
})";

// Same base but with no parameter dependence at all: the gap between the two
// eigenvalues is constant, so no root search can succeed.
const char* kUncoupledFamilyJson = R"({
  "dim": 2,
  "symmetric": true,
  "base": [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [-1.0, 0.0]],
  "coupling": []
})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("trace writes csv and json artifacts that agree exactly") {
  const fs::path dir = fresh_dir("trace");
  const int code = run_cli(
      "trace --family kato2 --center-re 0 --center-im 1 --radius 0.3 --points 64 "
      "--out-dir " + dir.string(),
      dir);
  CHECK(code == 0);

  std::string header;
  const auto rows = parse_csv(slurp(dir / "spectra.csv"), &header);
  CHECK(header == "angle_index,kappa_re,kappa_im,eig0_re,eig0_im,eig1_re,eig1_im");
  REQUIRE(rows.size() == 64);
  for (const auto& row : rows) {
    REQUIRE(row.size() == 7);
  }
  // First sample sits at angle 0: center + radius along the real axis.
  CHECK(rows[0][1] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(rows[0][2] == doctest::Approx(1.0).epsilon(1e-15));

  // Both serializations carry 17 significant digits, so parsing them back
  // must give bit-identical doubles.
  const auto doc = load_json(dir / "spectra.json");
  REQUIRE(doc.at("kappa").size() == 64);
  REQUIRE(doc.at("spectra").size() == 64);
  for (const std::size_t i : {std::size_t{0}, std::size_t{31}, std::size_t{63}}) {
    const auto& row = rows[i];
    CHECK(doc["kappa"][i][0].get<double>() == row[1]);
    CHECK(doc["kappa"][i][1].get<double>() == row[2]);
    CHECK(doc["spectra"][i][0][0].get<double>() == row[3]);
    CHECK(doc["spectra"][i][0][1].get<double>() == row[4]);
    CHECK(doc["spectra"][i][1][0].get<double>() == row[5]);
    CHECK(doc["spectra"][i][1][1].get<double>() == row[6]);
  }
}

TEST_CASE("trace rejects an orbit that is too coarse") {
  const fs::path dir = fresh_dir("trace_coarse");
  const int code = run_cli("trace --family kato2 --points 4 --out-dir " + dir.string(), dir);
  CHECK(code == 2);
  CHECK(!fs::exists(dir / "spectra.csv"));
  CHECK(slurp(dir / "stderr.txt").find("at least 8 points") != std::string::npos);
}

TEST_CASE("family file reproduces the builtin model byte for byte") {
  const fs::path dir_builtin = fresh_dir("trace_builtin");
  const fs::path dir_file = fresh_dir("trace_file");
  write_file(dir_file / "family.json", kTwoModeFamilyJson);

  const std::string orbit = " --center-re 0.1 --center-im 0.9 --radius 0.4 --points 32";
  CHECK(run_cli("trace --family kato2" + orbit + " --out-dir " + dir_builtin.string(),
                dir_builtin) == 0);
  CHECK(run_cli("trace --family file --family-file " + (dir_file / "family.json").string() +
                    orbit + " --out-dir " + dir_file.string(),
                dir_file) == 0);

  CHECK(slurp(dir_builtin / "spectra.csv") == slurp(dir_file / "spectra.csv"));
}

TEST_CASE("group reports the crosswise exchange around a degeneracy") {
  const fs::path dir = fresh_dir("group_exchange");
  const int code = run_cli(
      "group --family kato2 --center-re 0 --center-im 0.8 --radius 0.5 --points 100 "
      "--out-dir " + dir.string(),
      dir);
  CHECK(code == 0);

  const auto doc = load_json(dir / "exchange_report.json");
  REQUIRE(doc.at("exchanging_pairs").size() == 1);
  CHECK(doc["exchanging_pairs"][0][0].get<int>() == 0);
  CHECK(doc["exchanging_pairs"][0][1].get<int>() == 1);
  CHECK(doc.at("paths").size() == 2);

  std::string header;
  const auto rows = parse_csv(slurp(dir / "paths.csv"), &header);
  CHECK(header == "angle_index,kappa_re,kappa_im,path0_re,path0_im,path1_re,path1_im");
  CHECK(rows.size() == 100);
}

TEST_CASE("group on a loop far from any degeneracy finds no exchange") {
  const fs::path dir = fresh_dir("group_none");
  const int code = run_cli(
      "group --family kato2 --center-re 3 --center-im 0 --radius 0.3 --points 32 "
      "--out-dir " + dir.string(),
      dir);
  CHECK(code == 0);
  const auto doc = load_json(dir / "exchange_report.json");
  CHECK(doc.at("exchanging_pairs").empty());
}

TEST_CASE("find-ep converges near +i with default flags") {
  const fs::path dir = fresh_dir("find_default");
  const int code = run_cli("find-ep --family kato2 --out-dir " + dir.string(), dir);
  CHECK(code == 0);

  const auto doc = load_json(dir / "result.json");
  const std::complex<double> kappa{doc.at("kappa_ep")[0].get<double>(),
                                   doc.at("kappa_ep")[1].get<double>()};
  CHECK(std::abs(kappa - std::complex<double>(0.0, 1.0)) < 1e-5);
  const std::string status = doc.at("status").get<std::string>();
  CHECK(status == "converged");

  std::string header;
  const auto rows = parse_csv(slurp(dir / "iterations.csv"), &header);
  CHECK(rows.size() == doc.at("iterations").get<std::size_t>());
}

TEST_CASE("find-ep exits with the no-exchange code on a non-enclosing loop") {
  const fs::path dir = fresh_dir("find_none");
  const int code = run_cli(
      "find-ep --family kato2 --center-re 2 --center-im 0 --radius 0.3 --points 16 "
      "--out-dir " + dir.string(),
      dir);
  CHECK(code == 4);
  CHECK(!fs::exists(dir / "result.json"));
  CHECK(slurp(dir / "stderr.txt").find("no exchanging pair") != std::string::npos);
}

TEST_CASE("find-ep reruns are byte-identical") {
  const fs::path dir_a = fresh_dir("find_rerun_a");
  const fs::path dir_b = fresh_dir("find_rerun_b");
  const std::string flags =
      "find-ep --family kato2 --center-im 0.8 --radius 0.5 --points 100 --subsample 20 "
      "--out-dir ";
  CHECK(run_cli(flags + dir_a.string(), dir_a) == 0);
  CHECK(run_cli(flags + dir_b.string(), dir_b) == 0);
  CHECK(slurp(dir_a / "result.json") == slurp(dir_b / "result.json"));
  CHECK(slurp(dir_a / "iterations.csv") == slurp(dir_b / "iterations.csv"));
}

TEST_CASE("config file sets options and explicit flags override it") {
  const fs::path dir = fresh_dir("config_merge");
  write_file(dir / "config.json", R"({
    "family": {"kind": "kato2"},
    "orbit": {"center": [0.25, 1.0], "radius": 0.2, "n_points": 4},
    "out_dir": ")" + dir.string() + R"("
  })");

  // The config alone asks for a 4-point orbit, which is rejected.
  CHECK(run_cli("trace --config " + (dir / "config.json").string(), dir) == 2);

  // An explicit flag overrides the config value; the rest of the config
  // (center, radius, out_dir) still applies.
  CHECK(run_cli("trace --config " + (dir / "config.json").string() + " --points 16", dir) == 0);
  std::string header;
  const auto rows = parse_csv(slurp(dir / "spectra.csv"), &header);
  REQUIRE(rows.size() == 16);
  CHECK(rows[0][1] == doctest::Approx(0.45).epsilon(1e-15));  // center + radius
  CHECK(rows[0][2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("oracle refines a seed to the degeneracy") {
  const fs::path dir = fresh_dir("oracle");
  const int code = run_cli(
      "oracle --family kato2 --start-re 0.2 --start-im 0.7 --out-dir " + dir.string(), dir);
  CHECK(code == 0);

  const auto doc = load_json(dir / "oracle.json");
  const std::complex<double> kappa{doc.at("kappa")[0].get<double>(),
                                   doc.at("kappa")[1].get<double>()};
  CHECK(std::abs(kappa - std::complex<double>(0.0, 1.0)) < 1e-8);
  CHECK(doc.at("abs_p").get<double>() <= 1e-12);
  CHECK(doc.at("evaluations").get<int>() > 0);
}

TEST_CASE("oracle without any coupling reports no root") {
  const fs::path dir = fresh_dir("oracle_noroot");
  write_file(dir / "family.json", kUncoupledFamilyJson);
  const int code = run_cli(
      "oracle --family file --family-file " + (dir / "family.json").string() +
          " --out-dir " + dir.string(),
      dir);
  CHECK(code == 5);
  CHECK(!fs::exists(dir / "oracle.json"));
}

TEST_CASE("gpr-fit fits a stored dataset and writes model and diagnostics") {
  const fs::path dir = fresh_dir("gprfit");
  write_file(dir / "data.json", R"({
    "x": [[0.0, 0.0], [0.5, 0.1], [0.2, 0.8], [0.9, 0.6], [0.4, 0.4]],
    "y": [[0.1], [0.7], [1.1], [1.6], [0.9]]
  })");
  const int code = run_cli(
      "gpr-fit --data " + (dir / "data.json").string() +
          " --no-optimize --out-dir " + dir.string(),
      dir);
  CHECK(code == 0);

  const auto model = load_json(dir / "gpr_model.json");
  CHECK(model.contains("targets"));
  const auto diag = load_json(dir / "gpr_diagnostics.json");
  REQUIRE(diag.at("targets").size() == 1);
  const auto& t = diag["targets"][0];
  CHECK(std::isfinite(t.at("log_marginal_likelihood").get<double>()));
  CHECK(t.at("length_scales").size() == 2);
  CHECK(std::isfinite(t.at("loo_rms").get<double>()));
}

TEST_CASE("gpr-fit surfaces degenerate inputs with a remediation hint") {
  const fs::path dir = fresh_dir("gprfit_dup");
  write_file(dir / "data.json", R"({
    "x": [[0.0, 0.0], [0.5, 0.1], [0.5, 0.1], [0.9, 0.6]],
    "y": [[0.1], [0.7], [0.7], [1.6]]
  })");
  const int code = run_cli(
      "gpr-fit --data " + (dir / "data.json").string() +
          " --noise-variance 0 --no-optimize --out-dir " + dir.string(),
      dir);
  CHECK(code == 3);
  const std::string err = slurp(dir / "stderr.txt");
  CHECK(err.find("identical inputs") != std::string::npos);
  CHECK(err.find("noise_variance") != std::string::npos);
}

TEST_CASE("unknown flags and missing required options are config errors") {
  const fs::path dir = fresh_dir("badflags");
  CHECK(run_cli("trace --family kato2 --no-such-flag --out-dir " + dir.string(), dir) == 2);
  CHECK(run_cli("gpr-fit --out-dir " + dir.string(), dir) == 2);
  CHECK(run_cli("trace --family nonsense --out-dir " + dir.string(), dir) == 2);
}

}  // TEST_SUITE
