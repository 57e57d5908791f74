// Copyright 2026 The epfind Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "epfind/epsearch.hpp"
#include "epfind/grouping.hpp"
#include "epfind/models.hpp"

namespace epfind::io {

// 17 significant digits: doubles survive a round trip through the text.
std::string format_double(double v);

// Write to <path>.tmp in the same directory, then rename over the target, so
// a crash never leaves a half-written file behind.
void atomic_write(const std::filesystem::path& path, const std::string& content);

nlohmann::json spectra_to_json(const models::OrbitSpectrumSet& set);
models::OrbitSpectrumSet spectra_from_json(const nlohmann::json& doc);
void save_spectra(const std::filesystem::path& path, const models::OrbitSpectrumSet& set);
models::OrbitSpectrumSet load_spectra(const std::filesystem::path& path);
std::string spectra_to_csv(const models::OrbitSpectrumSet& set);

nlohmann::json report_to_json(const grouping::ExchangeReport& report);
std::string paths_to_csv(const grouping::ExchangeReport& report);

nlohmann::json result_to_json(const epsearch::EpResult& result);
std::string iterations_to_csv(const epsearch::EpSearchState& state);

// Training data file for standalone surrogate fits:
// {"x": [[x1, x2], ...], "y": [[t0, t1, ...], ...]}.
void load_xy(const std::filesystem::path& path, Eigen::MatrixXd& x, Eigen::MatrixXd& y);

}  // namespace epfind::io
