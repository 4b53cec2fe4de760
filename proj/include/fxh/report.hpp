#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fxh/benchmark_grid.hpp"
#include "fxh/hybrid.hpp"
#include "json.hpp"

namespace fxh {

inline constexpr const char* kReportSchema = "fxhybrid.report/1";
inline constexpr const char* kBenchmarkSchema = "fxhybrid.benchmark/1";

/// Report layout: schema, config, model, vectors, metrics, runtime_seconds,
/// provenance, warnings. Non-finite numbers are written as null.
nlohmann::json report_to_json(const ForecastReport& r);

/// Problems with a report document: missing keys, wrong types, vectors of
/// unequal length, or metrics that the stored vectors do not reproduce within
/// 1e-12 (relative). Empty means valid.
std::vector<std::string> validate_report_json(const nlohmann::json& j);

/// Predictions against truth over the last `points` test samples.
std::string render_svg(const ForecastReport& r, std::size_t points = 300);

nlohmann::json benchmark_to_json(const BenchmarkGrid& g);
/// Fixed-width text table in grid order: cell, RMSE, MAPE %, DA %, training seconds.
std::string benchmark_table(const BenchmarkGrid& g);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fxh
