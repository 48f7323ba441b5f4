#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emdot/dataset.hpp"
#include "emdot/metrics.hpp"
#include "emdot/models.hpp"
#include "emdot/splitter.hpp"

namespace emdot::engine {

enum class MetricKind { AUROC, AUPRC, WeightedAUROC };

std::string to_string(MetricKind m);
MetricKind parse_metric(const std::string& text);

inline constexpr const char* kAllPeriodRegime = "AllPeriod";

struct ExperimentConfig {
  splitter::SplitRatios ratios;
  std::vector<splitter::RegimeKind> regimes{splitter::RegimeKind::SlidingWindow,
                                            splitter::RegimeKind::AllHistorical};
  std::vector<models::Family> families{models::Family::LR};
  models::HyperGrid grid = models::HyperGrid::defaults();
  int window = 4;
  int n_seeds = 5;
  std::uint64_t master_seed = 0;
  std::vector<MetricKind> metrics{MetricKind::AUROC};
  bool grouped = false;
  /// Label used by AUROC/AUPRC; empty selects the first label column.
  std::string target;
};

/// Throws ConfigError when the config cannot run on `data`.
void validate(const ExperimentConfig& config, const dataset::TemporalDataset& data);

// Record flags. Empty means a clean measurement.
inline constexpr const char* kFlagSingleClass = "SingleClass";
inline constexpr const char* kFlagDegenerateTrain = "DegenerateTrain";
inline constexpr const char* kFlagEmptyTrain = "EmptyTrain";
inline constexpr const char* kFlagValidationFallback = "ValidationFallback";
inline constexpr const char* kFlagGridError = "GridError";
inline constexpr const char* kFlagCellError = "CellError";

struct EvalRecord {
  std::string regime;
  models::Family family = models::Family::LR;
  int seed = 0;
  int t_star = 0;
  int test_time = 0;
  int staleness = 0;
  MetricKind metric = MetricKind::AUROC;
  metrics::MetricValue value;
  std::size_t n_test = 0;
  std::string flag;
  /// Compact JSON of the selected hyperparameters.
  std::string hyperparams;

  bool defined() const { return value.defined(); }
};

/// Seeds derived from the master seed. Model fits ignore the regime so
/// identical training sets produce identical models.
std::uint64_t plan_seed(std::uint64_t master, int seed_index);
std::uint64_t fit_seed(std::uint64_t master, int seed_index, int t_star, models::Family family);

/// Row sets used by one cell, captured for leakage audits.
struct CellTrace {
  std::string regime;
  models::Family family = models::Family::LR;
  int seed = 0;
  int t_star = 0;
  dataset::RowSet train;
  dataset::RowSet val;
  /// Rows the preprocessor was fitted on.
  dataset::RowSet preprocessor_rows;
  std::map<int, dataset::RowSet> test;  // test time -> rows
};

struct CellModel {
  std::string regime;
  models::Family family = models::Family::LR;
  int seed = 0;
  int t_star = 0;
  std::string label;
  models::TrainedModel model;
};

struct RunOptions {
  /// 1 runs the serial reference loop; >1 runs cells on OpenMP threads.
  int jobs = 1;
  bool keep_traces = false;
  bool keep_models = true;
};

struct RunResult {
  std::vector<EvalRecord> records;
  std::vector<CellModel> models;
  std::vector<CellTrace> traces;
  /// Training rows per time point, summed over seeds (index t-1).
  std::vector<double> train_rows_per_time;
  std::size_t flagged_cells = 0;
};

/// Expected EMDOT record count for a config over T time points.
std::size_t expected_record_count(const ExperimentConfig& config, int T);

RunResult run_emdot(const ExperimentConfig& config, const dataset::TemporalDataset& data,
                    const RunOptions& options = {});

/// Time-agnostic baseline. Records carry regime "AllPeriod" and t_star 0;
/// test_time 0 is the overall test set, test_time t the subset at t.
RunResult run_all_period(const ExperimentConfig& config, const dataset::TemporalDataset& data,
                         const RunOptions& options = {});

struct CurvePoint {
  models::Family family = models::Family::LR;
  std::string regime;
  MetricKind metric = MetricKind::AUROC;
  int staleness = 0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
  std::size_t excluded = 0;
};

struct GrayFlag {
  int staleness = 0;
  bool grayed = false;
  int contributing = 0;
  int qualifying = 0;
};

struct StalenessCurve {
  models::Family baseline_family = models::Family::LR;
  std::string baseline_regime = "AllHistorical";
  std::vector<CurvePoint> points;
  std::vector<GrayFlag> gray;
};

/// Graying rule: a staleness j is grayed when at least half of its
/// contributing deployment dates t* in [W, T-j] have at least half of their
/// all-historical training rows in time points [1, W].
std::vector<GrayFlag> gray_flags(const std::vector<double>& train_rows_per_time, int window);

StalenessCurve aggregate_by_staleness(const std::vector<EvalRecord>& records,
                                      const std::vector<double>& train_rows_per_time, int window,
                                      models::Family baseline_family = models::Family::LR,
                                      const std::string& baseline_regime = "AllHistorical");

struct SummaryRow {
  models::Family family = models::Family::LR;
  std::string regime;
  MetricKind metric = MetricKind::AUROC;
  int t_star = 0;
  int test_time = 0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
  std::size_t excluded = 0;
};

/// Groups by (family, regime, metric, t*, k). Population std over seeds.
/// Groups whose values are all undefined are omitted from `rows` and
/// listed in `omitted` with their exclusion count.
struct SummaryTable {
  std::vector<SummaryRow> rows;
  std::vector<SummaryRow> omitted;
};

SummaryTable summarize(const std::vector<EvalRecord>& records);

}  // namespace emdot::engine
