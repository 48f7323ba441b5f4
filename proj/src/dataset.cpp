#include "emdot/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "csv.hpp"
#include "emdot/error.hpp"

namespace emdot::dataset {

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::Numerical: return "numerical";
    case ColumnKind::Time: return "time";
    case ColumnKind::GroupKey: return "group_key";
    case ColumnKind::Label: return "label";
  }
  return "?";
}

ColumnKind parse_column_kind(const std::string& text) {
  if (text == "categorical") return ColumnKind::Categorical;
  if (text == "numerical") return ColumnKind::Numerical;
  if (text == "time") return ColumnKind::Time;
  if (text == "group_key") return ColumnKind::GroupKey;
  if (text == "label") return ColumnKind::Label;
  throw SchemaError("unknown column kind '" + text + "'");
}

std::string to_string(Granularity g) { return g == Granularity::Year ? "year" : "month"; }

Granularity parse_granularity(const std::string& text) {
  if (text == "year") return Granularity::Year;
  if (text == "month") return Granularity::Month;
  throw SchemaError("unknown granularity '" + text + "' (expected year or month)");
}

void validate_schema(std::span<const ColumnSpec> schema) {
  std::set<std::string> names;
  int time_cols = 0, group_cols = 0, label_cols = 0;
  for (const auto& c : schema) {
    if (c.name.empty()) throw SchemaError("column with empty name");
    if (!names.insert(c.name).second) throw SchemaError("duplicate column '" + c.name + "'");
    time_cols += c.kind == ColumnKind::Time;
    group_cols += c.kind == ColumnKind::GroupKey;
    label_cols += c.kind == ColumnKind::Label;
  }
  if (time_cols != 1) throw SchemaError("schema needs exactly one time column");
  if (group_cols > 1) throw SchemaError("schema allows at most one group_key column");
  if (label_cols < 1) throw SchemaError("schema needs at least one label column");
}

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<std::int64_t> parse_time_key(const std::string& cell, Granularity g) {
  const std::string_view s = trim(cell);
  if (s.size() < 4) return std::nullopt;
  int year = 0;
  if (!parse_int(s.substr(0, 4), year)) return std::nullopt;
  if (g == Granularity::Year) {
    if (s.size() == 4) return year;
    if (s[4] != '-' && s[4] != '/') return std::nullopt;
    return year;
  }
  if (s.size() < 7 || (s[4] != '-' && s[4] != '/')) return std::nullopt;
  int month = 0;
  if (!parse_int(s.substr(5, 2), month) || month < 1 || month > 12) return std::nullopt;
  if (s.size() > 7 && s[7] != '-' && s[7] != '/') return std::nullopt;
  return static_cast<std::int64_t>(year) * 12 + (month - 1);
}

std::string format_time_key(std::int64_t key, Granularity g) {
  if (g == Granularity::Year) return std::to_string(key);
  const auto year = key / 12;
  const auto month = key % 12 + 1;
  std::string out = std::to_string(year) + "-";
  if (month < 10) out += "0";
  return out + std::to_string(month);
}

std::string dummy_name(const std::string& column, const std::string& level) {
  return column + "=" + level;
}

TemporalDataset TemporalDataset::from_columns(std::vector<ColumnSpec> schema,
                                              std::vector<FeatureColumn> features,
                                              std::vector<LabelColumn> labels,
                                              std::vector<std::int64_t> raw_time,
                                              std::vector<std::string> raw_timestamps,
                                              std::vector<std::string> group_keys,
                                              Granularity granularity,
                                              std::size_t min_rows_per_timepoint) {
  validate_schema(schema);
  const std::size_t n = raw_time.size();
  if (raw_timestamps.size() != n) throw SchemaError("timestamp column length mismatch");
  if (!group_keys.empty() && group_keys.size() != n) throw SchemaError("group column length mismatch");
  for (const auto& f : features) {
    const std::size_t len = f.kind == ColumnKind::Categorical ? f.text.size() : f.number.size();
    if (len != n || f.missing.size() != n) throw SchemaError("column '" + f.name + "' length mismatch");
  }
  for (const auto& l : labels) {
    if (l.values.size() != n) throw SchemaError("label '" + l.name + "' length mismatch");
    for (auto v : l.values)
      if (v > 1) throw LabelError("label '" + l.name + "' is not binary");
  }

  std::map<std::int64_t, std::size_t> counts;
  for (auto key : raw_time) ++counts[key];

  TemporalDataset ds;
  ds.granularity_ = granularity;
  std::map<std::int64_t, int> remap;
  for (const auto& [key, count] : counts) {
    if (count < std::max<std::size_t>(1, min_rows_per_timepoint)) {
      ds.dropped_.push_back(format_time_key(key, granularity));
      spdlog::warn("dropping time point {} ({} rows < minimum {})", format_time_key(key, granularity),
                   count, min_rows_per_timepoint);
      continue;
    }
    const int t = static_cast<int>(remap.size()) + 1;
    remap.emplace(key, t);
    ds.time_labels_.push_back(format_time_key(key, granularity));
  }
  if (remap.size() < 2) throw SchemaError("dataset spans fewer than 2 time points");

  std::vector<std::size_t> keep;
  keep.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (remap.count(raw_time[i])) keep.push_back(i);

  auto take = [&keep](auto& v) {
    std::remove_reference_t<decltype(v)> out;
    out.reserve(keep.size());
    for (auto i : keep) out.push_back(std::move(v[i]));
    v = std::move(out);
  };
  if (keep.size() != n) {
    for (auto& f : features) {
      if (f.kind == ColumnKind::Categorical) take(f.text); else take(f.number);
      take(f.missing);
    }
    for (auto& l : labels) take(l.values);
    take(raw_timestamps);
    if (!group_keys.empty()) take(group_keys);
  }

  ds.time_.reserve(keep.size());
  ds.rows_by_time_.resize(remap.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const int t = remap.at(raw_time[keep[i]]);
    ds.time_.push_back(t);
    ds.rows_by_time_[t - 1].push_back(static_cast<RowIndex>(i));
  }
  ds.schema_ = std::move(schema);
  ds.features_ = std::move(features);
  ds.labels_ = std::move(labels);
  ds.raw_timestamps_ = std::move(raw_timestamps);
  ds.group_keys_ = std::move(group_keys);
  return ds;
}

const LabelColumn& TemporalDataset::label(const std::string& name) const {
  return labels_[label_index(name)];
}

std::size_t TemporalDataset::label_index(const std::string& name) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i].name == name) return i;
  throw SchemaError("no label column named '" + name + "'");
}

TemporalDataset parse_csv(const std::string& text, std::span<const ColumnSpec> schema,
                          const LoadOptions& options) {
  validate_schema(schema);
  const auto records = csv::parse(text);
  if (records.empty()) throw SchemaError("CSV has no header row");
  const auto& header = records.front();

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!position.emplace(header[i], i).second)
      throw SchemaError("duplicate header column '" + header[i] + "'");
  }
  for (const auto& c : schema)
    if (!position.count(c.name)) throw SchemaError("header is missing column '" + c.name + "'");
  if (header.size() != schema.size()) {
    for (const auto& h : header) {
      bool known = std::any_of(schema.begin(), schema.end(), [&](const ColumnSpec& c) { return c.name == h; });
      if (!known) throw SchemaError("header column '" + h + "' is not in the schema");
    }
  }

  const std::set<std::string> sentinels(options.missing_sentinels.begin(), options.missing_sentinels.end());
  auto is_missing = [&](const std::string& cell) { return sentinels.count(std::string(trim(cell))) > 0; };

  std::vector<FeatureColumn> features;
  std::vector<LabelColumn> labels;
  std::vector<std::size_t> feature_pos, label_pos;
  std::size_t time_pos = 0;
  std::optional<std::size_t> group_pos;
  for (const auto& c : schema) {
    const auto p = position.at(c.name);
    switch (c.kind) {
      case ColumnKind::Categorical:
      case ColumnKind::Numerical:
        features.push_back(FeatureColumn{c.name, c.kind, {}, {}, {}});
        feature_pos.push_back(p);
        break;
      case ColumnKind::Label:
        labels.push_back(LabelColumn{c.label_name.value_or(c.name), {}});
        label_pos.push_back(p);
        break;
      case ColumnKind::Time: time_pos = p; break;
      case ColumnKind::GroupKey: group_pos = p; break;
    }
  }

  std::vector<std::int64_t> raw_time;
  std::vector<std::string> raw_timestamps, groups;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
    if (rec.size() != header.size())
      throw RowError(r, "expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(rec.size()));
    const auto key = parse_time_key(rec[time_pos], options.granularity);
    if (!key) throw RowError(r, "unparseable timestamp '" + rec[time_pos] + "'");
    raw_time.push_back(*key);
    raw_timestamps.push_back(std::string(trim(rec[time_pos])));
    if (group_pos) groups.push_back(rec[*group_pos]);

    for (std::size_t l = 0; l < labels.size(); ++l) {
      const auto cell = trim(rec[label_pos[l]]);
      if (cell == "0") labels[l].values.push_back(0);
      else if (cell == "1") labels[l].values.push_back(1);
      else throw LabelError("row " + std::to_string(r) + ": label '" + labels[l].name +
                            "' has non-binary value '" + std::string(cell) + "'");
    }
    for (std::size_t f = 0; f < features.size(); ++f) {
      auto& col = features[f];
      const auto& cell = rec[feature_pos[f]];
      const bool miss = is_missing(cell);
      col.missing.push_back(miss ? 1 : 0);
      if (col.kind == ColumnKind::Categorical) {
        col.text.push_back(miss ? std::string() : std::string(trim(cell)));
      } else {
        double v = 0.0;
        if (!miss) {
          const auto s = trim(cell);
          auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
          if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
            throw RowError(r, "column '" + col.name + "' has non-numeric value '" + cell + "'");
        }
        col.number.push_back(miss ? std::nan("") : v);
      }
    }
  }

  return TemporalDataset::from_columns(std::vector<ColumnSpec>(schema.begin(), schema.end()),
                                       std::move(features), std::move(labels), std::move(raw_time),
                                       std::move(raw_timestamps), std::move(groups),
                                       options.granularity, options.min_rows_per_timepoint);
}

TemporalDataset load_csv(const std::filesystem::path& path, std::span<const ColumnSpec> schema,
                         const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema, options);
}

std::vector<std::string> PreprocessorState::feature_names() const {
  std::vector<std::string> names;
  for (const auto& slot : slots) {
    if (slot.categorical) {
      const auto& c = categorical[slot.index];
      for (const auto& level : c.vocabulary) names.push_back(dummy_name(c.column, level));
    } else {
      names.push_back(numerical[slot.index].column);
    }
  }
  return names;
}

std::size_t PreprocessorState::width() const {
  std::size_t w = 0;
  for (const auto& slot : slots) w += slot.categorical ? categorical[slot.index].vocabulary.size() : 1;
  return w;
}

PreprocessorState fit_preprocessor(const TemporalDataset& data, std::span<const RowIndex> fit_rows) {
  if (fit_rows.empty()) throw FitError("cannot fit preprocessor on an empty row set");
  PreprocessorState state;
  for (const auto& col : data.features()) {
    if (col.kind == ColumnKind::Categorical) {
      std::set<std::string> levels;
      for (auto r : fit_rows)
        if (!col.is_missing(r)) levels.insert(col.text[r]);
      CategoricalState cs{col.name, {levels.begin(), levels.end()}};
      cs.vocabulary.emplace_back(kMissingLevel);
      state.slots.push_back({true, state.categorical.size()});
      state.categorical.push_back(std::move(cs));
    } else {
      double sum = 0.0;
      std::size_t count = 0;
      for (auto r : fit_rows)
        if (!col.is_missing(r)) {
          sum += col.number[r];
          ++count;
        }
      NumericalState ns{col.name, 0.0, 0.0};
      if (count > 0) {
        ns.mean = sum / static_cast<double>(count);
        double ss = 0.0;
        for (auto r : fit_rows)
          if (!col.is_missing(r)) {
            const double d = col.number[r] - ns.mean;
            ss += d * d;
          }
        ns.stddev = std::sqrt(ss / static_cast<double>(count));
      }
      state.slots.push_back({false, state.numerical.size()});
      state.numerical.push_back(std::move(ns));
    }
  }
  return state;
}

FeatureMatrix transform(const TemporalDataset& data, std::span<const RowIndex> rows,
                        const PreprocessorState& state) {
  if (state.slots.size() != data.features().size())
    throw ShapeError("preprocessor state does not match the dataset's feature columns");
  FeatureMatrix m;
  m.rows = rows.size();
  m.cols = state.width();
  m.feature_names = state.feature_names();
  m.values.assign(m.rows * m.cols, 0.0);
  m.source_rows.assign(rows.begin(), rows.end());
  m.time_points.reserve(rows.size());
  for (auto r : rows) m.time_points.push_back(data.time_of(r));
  m.labels.resize(data.labels().size());
  for (std::size_t l = 0; l < data.labels().size(); ++l) {
    m.labels[l].reserve(rows.size());
    for (auto r : rows) m.labels[l].push_back(data.labels()[l].values[r]);
  }

  std::size_t offset = 0;
  for (std::size_t c = 0; c < state.slots.size(); ++c) {
    const auto& col = data.features()[c];
    const auto& slot = state.slots[c];
    if (slot.categorical) {
      const auto& vocab = state.categorical[slot.index].vocabulary;
      const auto levels_end = vocab.end() - 1;  // last entry is MISSING
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = rows[i];
        double* out = &m.values[i * m.cols + offset];
        if (col.is_missing(r)) {
          out[vocab.size() - 1] = 1.0;
          continue;
        }
        auto it = std::lower_bound(vocab.begin(), levels_end, col.text[r]);
        if (it != levels_end && *it == col.text[r]) out[it - vocab.begin()] = 1.0;
        // unseen level: all-zeros block
      }
      offset += vocab.size();
    } else {
      const auto& ns = state.numerical[slot.index];
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = rows[i];
        double v = 0.0;
        if (!col.is_missing(r) && ns.stddev > 0.0) v = (col.number[r] - ns.mean) / ns.stddev;
        m.values[i * m.cols + offset] = v;
      }
      offset += 1;
    }
  }
  return m;
}

std::vector<std::vector<double>> missingness_profile(const TemporalDataset& data) {
  const int T = data.num_time_points();
  std::vector<std::vector<double>> profile(data.features().size(), std::vector<double>(T, 0.0));
  for (std::size_t c = 0; c < data.features().size(); ++c) {
    const auto& col = data.features()[c];
    for (int t = 1; t <= T; ++t) {
      const auto& rows = data.rows_at(t);
      std::size_t missing = 0;
      for (auto r : rows) missing += col.missing[r];
      profile[c][t - 1] = static_cast<double>(missing) / static_cast<double>(rows.size());
    }
  }
  return profile;
}

}  // namespace emdot::dataset
