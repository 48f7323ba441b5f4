#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "emdot/dataset.hpp"
#include "emdot/engine.hpp"
#include "emdot/models.hpp"

namespace emdot::diagnostics {

struct DiagnosticsConfig {
  int k = 5;
  double p = 0.4;
  double delta = 0.2;
  double rank_threshold = 3.0;
  models::Family family = models::Family::LR;
  engine::MetricKind metric = engine::MetricKind::AUROC;
};

void validate(const DiagnosticsConfig& config);
DiagnosticsConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DiagnosticsConfig& config);

struct FeatureImportance {
  std::vector<std::string> names;
  std::vector<double> values;
};

FeatureImportance importance_of(const models::TrainedModel& model);

/// Mean over several fits; a feature missing from a fit counts as 0.
FeatureImportance average(const std::vector<FeatureImportance>& fits);

/// Importances of one regime across deployment dates.
struct ImportanceTrajectory {
  std::string regime;
  std::vector<int> t_stars;
  /// Every feature seen in any model, sorted by name.
  std::vector<std::string> features;
  /// values[f][i]: importance of features[f] at t_stars[i] (0 when absent).
  std::vector<std::vector<double>> values;
  /// ranks[f][i]: 1-based rank at t_stars[i]; ties broken by name.
  std::vector<std::vector<int>> ranks;
  /// Top-k feature names per deployment date, in rank order.
  std::vector<std::vector<std::string>> top_k;
  /// Union of the top-k sets, sorted by name.
  std::vector<std::string> feature_union;
};

ImportanceTrajectory top_feature_union(const std::map<int, FeatureImportance>& by_t_star, int k,
                                       const std::string& regime = "");

struct PrevalenceSeries {
  std::vector<std::string> features;
  std::vector<bool> categorical;
  /// values[f][t-1]: dummy prevalence, or the raw mean for numerical columns
  /// (NaN when every cell at t is missing).
  std::vector<std::vector<double>> values;
};

/// Throws UnknownFeatureError for names outside the full-dataset expansion.
PrevalenceSeries prevalence_series(const dataset::TemporalDataset& data, const std::vector<std::string>& features);

struct Highlight {
  std::string feature;
  bool categorical = true;
  bool flagged = false;
  double min_prevalence = 0.0;
  double max_jump = 0.0;
  double average_rank = 0.0;
};

/// Categorical: min prevalence >= p or a one-step change >= delta.
/// Numerical: average rank across deployment dates <= rank_threshold.
std::vector<Highlight> highlight_features(const PrevalenceSeries& series, const ImportanceTrajectory& trajectory,
                                          const DiagnosticsConfig& config);

struct DropEntry {
  std::string regime;
  int t_star = 0;
  /// In-period minus the worst future seed-mean value; may be negative.
  double drop = 0.0;
  bool defined = false;
  std::string flag;
};

std::vector<DropEntry> max_auroc_drop(const std::vector<engine::EvalRecord>& records, models::Family family,
                                      engine::MetricKind metric);

/// Mean of defined drops for a regime (NaN if none).
double mean_drop(const std::vector<DropEntry>& drops, const std::string& regime);

struct DiagnosticsReport {
  DiagnosticsConfig config;
  std::vector<std::string> time_labels;
  std::vector<ImportanceTrajectory> trajectories;
  std::vector<std::string> feature_union;
  PrevalenceSeries prevalence;
  std::vector<Highlight> highlights;
  std::vector<DropEntry> drops;
  std::vector<std::string> missingness_columns;
  std::vector<std::vector<double>> missingness;
};

DiagnosticsReport build_report(const dataset::TemporalDataset& data, const std::vector<engine::EvalRecord>& records,
                               const std::vector<engine::CellModel>& models, const DiagnosticsConfig& config);

nlohmann::json to_json(const DiagnosticsReport& report);

/// Writes diagnostics.json, one CSV per series and SVG renderings. Returns
/// the written paths in a fixed order.
std::vector<std::filesystem::path> emit_report(const DiagnosticsReport& report, const std::filesystem::path& out_dir);

/// Staleness curves with gray bands, and metric-over-time per deployment
/// date against the all-period reference.
std::vector<std::filesystem::path> emit_run_plots(const std::vector<engine::EvalRecord>& records,
                                                  const std::vector<engine::EvalRecord>& all_period,
                                                  const engine::StalenessCurve* curve,
                                                  const std::vector<std::string>& time_labels,
                                                  models::Family family, engine::MetricKind metric,
                                                  const std::filesystem::path& out_dir);

}  // namespace emdot::diagnostics
