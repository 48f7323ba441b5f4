#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "emdot/engine.hpp"

namespace emdot::io {

/// Shortest round-trip decimal form; "" for NaN.
std::string format_double(double v);

/// Column order of records.csv.
const std::vector<std::string>& record_columns();

std::string records_to_csv(const std::vector<engine::EvalRecord>& records);
std::vector<engine::EvalRecord> records_from_csv(const std::string& text);
std::vector<engine::EvalRecord> read_records_csv(const std::filesystem::path& path);

nlohmann::json to_json(const engine::SummaryTable& table);
nlohmann::json to_json(const engine::StalenessCurve& curve);
nlohmann::json to_json(const std::vector<engine::CellModel>& models);
std::vector<engine::CellModel> cell_models_from_json(const nlohmann::json& j);

/// Writes atomically enough for our purposes; IoError names the path.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace emdot::io
