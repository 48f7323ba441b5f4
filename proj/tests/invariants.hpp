#pragma once

// Structural checks on split plans and regime sets. Each returns an empty
// string on success or a description of the first violation.

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "emdot/splitter.hpp"

namespace emdot::test {

inline std::string check_plan(const dataset::TemporalDataset& data, const splitter::SplitPlan& plan) {
  if (plan.num_time_points() != data.num_time_points()) return "plan covers the wrong number of time points";
  std::map<std::string, int> group_role;
  for (int t = 1; t <= data.num_time_points(); ++t) {
    const auto& p = plan.at(t);
    std::vector<dataset::RowIndex> all;
    for (const auto* part : {&p.train, &p.val, &p.test}) all.insert(all.end(), part->begin(), part->end());
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) return "overlap at t=" + std::to_string(t);
    if (all != data.rows_at(t)) return "partition at t=" + std::to_string(t) + " is not exhaustive";
    if (plan.grouped && data.has_groups()) {
      int role = 0;
      for (const auto* part : {&p.train, &p.val, &p.test}) {
        for (auto r : *part) {
          auto [it, fresh] = group_role.emplace(data.group_of(r), role);
          if (!fresh && it->second != role) return "group '" + data.group_of(r) + "' straddles roles";
        }
        ++role;
      }
    }
  }
  return {};
}

inline bool is_subset(const dataset::RowSet& a, const dataset::RowSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline std::string check_regimes(const splitter::SplitPlan& plan, int window) {
  using splitter::RegimeKind;
  const int T = plan.num_time_points();
  for (int t = window; t <= T; ++t) {
    const auto sw = splitter::regime_train_val(t, {RegimeKind::SlidingWindow, window}, plan);
    const auto ah = splitter::regime_train_val(t, {RegimeKind::AllHistorical, window}, plan);
    const auto sub = splitter::regime_train_val(t, {RegimeKind::AllHistoricalSubsampled, window}, plan);
    const std::string at = " at t*=" + std::to_string(t);
    if (!is_subset(sw.train, ah.train) || !is_subset(sw.val, ah.val)) return "sliding window not nested" + at;
    if (!is_subset(sub.train, ah.train) || !is_subset(sub.val, ah.val)) return "subsample not nested" + at;
    if (sub.train.size() != sw.train.size() || sub.val.size() != sw.val.size()) return "subsample size" + at;
    if (std::adjacent_find(sub.train.begin(), sub.train.end()) != sub.train.end()) return "subsample repeats" + at;
    std::size_t expected = 0;
    for (int k = t - window + 1; k <= t; ++k) expected += plan.at(k).train.size();
    if (sw.train.size() != expected) return "sliding window size" + at;
  }
  return {};
}

}  // namespace emdot::test
