#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emdot::dataset {

enum class ColumnKind { Categorical, Numerical, Time, GroupKey, Label };

enum class Granularity { Year, Month };

std::string to_string(ColumnKind kind);
ColumnKind parse_column_kind(const std::string& text);
std::string to_string(Granularity g);
Granularity parse_granularity(const std::string& text);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Numerical;
  /// Task name for multi-label datasets; defaults to the column name.
  std::optional<std::string> label_name;
};

/// Throws SchemaError unless: one time column, at most one group key,
/// at least one label, unique names.
void validate_schema(std::span<const ColumnSpec> schema);

struct LoadOptions {
  Granularity granularity = Granularity::Year;
  std::vector<std::string> missing_sentinels{"", "NA", "NaN"};
  /// Time points with fewer rows are dropped (with a warning).
  std::size_t min_rows_per_timepoint = 1;
};

/// A categorical or numerical feature column. Exactly one of `text` /
/// `number` is populated, depending on kind.
struct FeatureColumn {
  std::string name;
  ColumnKind kind = ColumnKind::Numerical;
  std::vector<std::string> text;
  std::vector<double> number;
  std::vector<std::uint8_t> missing;

  bool is_missing(std::size_t row) const { return missing[row] != 0; }
};

struct LabelColumn {
  std::string name;
  std::vector<std::uint8_t> values;
};

using RowIndex = std::uint32_t;
using RowSet = std::vector<RowIndex>;

/// Timestamped tabular rows bucketed into consecutive time points 1..T.
/// Immutable after construction.
class TemporalDataset {
 public:
  TemporalDataset() = default;

  /// Assembles a dataset from already-parsed columns. `raw_time` holds the
  /// granularity key per row (e.g. year*12+month); keys are remapped to
  /// 1..T in increasing order.
  static TemporalDataset from_columns(std::vector<ColumnSpec> schema,
                                      std::vector<FeatureColumn> features,
                                      std::vector<LabelColumn> labels,
                                      std::vector<std::int64_t> raw_time,
                                      std::vector<std::string> raw_timestamps,
                                      std::vector<std::string> group_keys,
                                      Granularity granularity,
                                      std::size_t min_rows_per_timepoint = 1);

  std::size_t num_rows() const { return time_.size(); }
  int num_time_points() const { return static_cast<int>(time_labels_.size()); }

  const std::vector<ColumnSpec>& schema() const { return schema_; }
  const std::vector<FeatureColumn>& features() const { return features_; }
  const std::vector<LabelColumn>& labels() const { return labels_; }
  const LabelColumn& label(const std::string& name) const;
  std::size_t label_index(const std::string& name) const;

  /// Time point in 1..T of each row.
  int time_of(std::size_t row) const { return time_[row]; }
  const std::vector<int>& row_times() const { return time_; }
  const std::string& raw_timestamp(std::size_t row) const { return raw_timestamps_[row]; }
  /// Display label of time point t (1-based), e.g. "2020-03".
  const std::string& time_label(int t) const { return time_labels_.at(t - 1); }
  /// Rows at time point t (1-based), ascending.
  const RowSet& rows_at(int t) const { return rows_by_time_.at(t - 1); }

  bool has_groups() const { return !group_keys_.empty(); }
  const std::string& group_of(std::size_t row) const { return group_keys_[row]; }

  Granularity granularity() const { return granularity_; }
  /// Raw time keys removed by the min-rows threshold.
  const std::vector<std::string>& dropped_time_points() const { return dropped_; }

 private:
  std::vector<ColumnSpec> schema_;
  std::vector<FeatureColumn> features_;
  std::vector<LabelColumn> labels_;
  std::vector<int> time_;
  std::vector<std::string> raw_timestamps_;
  std::vector<std::string> group_keys_;
  std::vector<std::string> time_labels_;
  std::vector<RowSet> rows_by_time_;
  std::vector<std::string> dropped_;
  Granularity granularity_ = Granularity::Year;
};

/// Parses an RFC-4180 CSV with a header row.
TemporalDataset load_csv(const std::filesystem::path& path, std::span<const ColumnSpec> schema,
                         const LoadOptions& options = {});
TemporalDataset parse_csv(const std::string& text, std::span<const ColumnSpec> schema,
                          const LoadOptions& options = {});

/// Converts a timestamp cell to its integer granularity key.
std::optional<std::int64_t> parse_time_key(const std::string& cell, Granularity g);
std::string format_time_key(std::int64_t key, Granularity g);

inline constexpr const char* kMissingLevel = "MISSING";

struct CategoricalState {
  std::string column;
  /// Sorted observed levels followed by kMissingLevel.
  std::vector<std::string> vocabulary;
};

struct NumericalState {
  std::string column;
  double mean = 0.0;
  double stddev = 0.0;  // population convention
};

/// Statistics fitted on a training row set; transform is a pure function of
/// (state, row).
struct PreprocessorState {
  std::vector<CategoricalState> categorical;
  std::vector<NumericalState> numerical;
  /// Feature column order of the source dataset, mapping to the entries above.
  struct Slot {
    bool categorical;
    std::size_t index;
  };
  std::vector<Slot> slots;

  std::vector<std::string> feature_names() const;
  std::size_t width() const;
};

PreprocessorState fit_preprocessor(const TemporalDataset& data, std::span<const RowIndex> fit_rows);

/// Dense row-major matrix plus labels and the row provenance.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::string> feature_names;
  /// labels[l][i] for each label column of the dataset.
  std::vector<std::vector<std::uint8_t>> labels;
  std::vector<RowIndex> source_rows;
  std::vector<int> time_points;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

FeatureMatrix transform(const TemporalDataset& data, std::span<const RowIndex> rows,
                        const PreprocessorState& state);

/// Fraction of rows with a missing cell, indexed [feature column][t-1].
std::vector<std::vector<double>> missingness_profile(const TemporalDataset& data);

/// Feature names of a dummy column: "<column>=<level>".
std::string dummy_name(const std::string& column, const std::string& level);

}  // namespace emdot::dataset
