#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqforge/datasets.hpp"
#include "eqforge/predict.hpp"
#include "eqforge/subtsbr.hpp"

namespace eqforge {

using Json = nlohmann::json;

// CSV: header row, comma separated, LF endings. NaN is written as "nan";
// "nan", "NaN" and empty cells read back as NaN.
DataTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const DataTable& table);

Json to_json(const DiscoveredEquation& equation);
DiscoveredEquation equation_from_json(const Json& json);  // ConfigError on schema violations
void write_model(const std::filesystem::path& path, const DiscoveredEquation& equation);
DiscoveredEquation read_model(const std::filesystem::path& path);

Json to_json(const NoiseSpec& noise);

void write_json(const std::filesystem::path& path, const Json& json);
Json read_json(const std::filesystem::path& path);

/// Columns: S, L, trials, success_rate, median_criterion,
/// median_adjusted_criterion, mean_seconds.
DataTable sweep_table(const std::vector<SweepCell>& cells);

/// Long format: t, x, predicted, reference, squared_error (one row per field
/// entry). ODE reports use `state` labels instead of x positions.
void write_prediction_csv(const std::filesystem::path& path, const PredictionReport& report);
void write_prediction_csv(const std::filesystem::path& path, const PredictionReport& report,
                          const std::vector<std::string>& state_names);

}  // namespace eqforge
