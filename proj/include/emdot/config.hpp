#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "emdot/dataset.hpp"
#include "emdot/diagnostics.hpp"
#include "emdot/engine.hpp"

namespace emdot::config {

/// Everything `emdot run` and `emdot report` need, resolved from one JSON
/// document. Relative dataset paths resolve against the config's directory.
struct RunConfig {
  std::filesystem::path dataset_path;
  std::vector<dataset::ColumnSpec> schema;
  dataset::LoadOptions load;
  engine::ExperimentConfig experiment;
  bool all_period = true;
  diagnostics::DiagnosticsConfig diagnostics;
  std::filesystem::path output_dir = "results";
};

/// Strict parse: unknown keys and out-of-range values throw ConfigError.
/// A run manifest is accepted too; its `resolved_config` is used.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Reads and parses a config file. Unreadable or malformed files throw
/// ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved document (absolute dataset path, every default spelled
/// out) that parses back to the same RunConfig. The output directory is
/// included only when `with_output` is set.
nlohmann::json to_json(const RunConfig& config, bool with_output = true);

/// FNV-1a of the canonical resolved document without the output directory.
std::string config_hash(const RunConfig& config);

}  // namespace emdot::config
