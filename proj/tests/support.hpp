#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "emdot/dataset.hpp"
#include "emdot/rng.hpp"

namespace emdot::test {

inline dataset::FeatureMatrix matrix(const std::vector<std::vector<double>>& rows) {
  dataset::FeatureMatrix X;
  X.rows = rows.size();
  X.cols = rows.empty() ? 0 : rows[0].size();
  for (const auto& r : rows) X.values.insert(X.values.end(), r.begin(), r.end());
  for (std::size_t j = 0; j < X.cols; ++j) X.feature_names.push_back("f" + std::to_string(j));
  return X;
}

inline dataset::FeatureMatrix random_matrix(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& r : rows)
    for (auto& v : r) v = rng.normal();
  return matrix(rows);
}

/// Dataset with one numerical feature x, one categorical c, label y and
/// `per_t[t-1]` rows at year 2000+t.
inline dataset::TemporalDataset toy_dataset(const std::vector<int>& per_t, std::uint64_t seed = 1,
                                            bool with_groups = false) {
  Rng rng(seed);
  std::string csv = with_groups ? "year,pid,x,c,y\n" : "year,x,c,y\n";
  int id = 0;
  for (std::size_t t = 0; t < per_t.size(); ++t)
    for (int i = 0; i < per_t[t]; ++i, ++id) {
      const double x = rng.normal();
      const bool y = rng.bernoulli(x > 0 ? 0.7 : 0.3);
      csv += std::to_string(2001 + t) + ",";
      if (with_groups) csv += "p" + std::to_string(id % 37) + ",";
      csv += std::to_string(x) + "," + (rng.bernoulli(0.5) ? "a" : "b") + "," + (y ? "1" : "0") + "\n";
    }
  std::vector<dataset::ColumnSpec> schema{{"year", dataset::ColumnKind::Time, {}},
                                          {"x", dataset::ColumnKind::Numerical, {}},
                                          {"c", dataset::ColumnKind::Categorical, {}},
                                          {"y", dataset::ColumnKind::Label, {}}};
  if (with_groups) schema.insert(schema.begin() + 1, {"pid", dataset::ColumnKind::GroupKey, {}});
  return dataset::parse_csv(csv, schema);
}

/// Fresh empty directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("emdot_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace emdot::test
