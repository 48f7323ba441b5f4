#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "emdot/dataset.hpp"

namespace emdot::splitter {

using dataset::RowIndex;
using dataset::RowSet;

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

/// Throws ConfigError unless each ratio is in (0,1) and they sum to 1.
void validate(const SplitRatios& ratios);

enum class Role : std::uint8_t { Train, Val, Test };

struct TimePartition {
  RowSet train, val, test;
};

/// Per-time-point disjoint partitions of D_t. Index t-1 holds time point t.
struct SplitPlan {
  std::vector<TimePartition> parts;
  std::uint64_t seed = 0;
  bool grouped = false;

  int num_time_points() const { return static_cast<int>(parts.size()); }
  const TimePartition& at(int t) const { return parts.at(t - 1); }
};

SplitPlan build_split_plan(const dataset::TemporalDataset& data, const SplitRatios& ratios,
                           std::uint64_t seed, bool grouped);

/// Largest-remainder allocation of n items; ties favour train, then val.
std::array<std::size_t, 3> allocate(std::size_t n, const SplitRatios& ratios);

enum class RegimeKind { SlidingWindow, AllHistorical, AllHistoricalSubsampled };

std::string to_string(RegimeKind kind);
RegimeKind parse_regime(const std::string& text);

struct RegimeSpec {
  RegimeKind kind = RegimeKind::SlidingWindow;
  int window = 4;
};

struct TrainVal {
  RowSet train;
  RowSet val;
};

/// Training/validation union for a simulated deployment date. The subsample
/// draw is seeded from (plan.seed, t_star).
TrainVal regime_train_val(int t_star, const RegimeSpec& regime, const SplitPlan& plan);

struct TestSets {
  RowSet in_period;
  std::map<int, RowSet> out_of_period;
};

TestSets test_sets(int t_star, const SplitPlan& plan, const dataset::TemporalDataset& data);

struct AllPeriodSplit {
  RowSet train, val, test;
};

AllPeriodSplit all_period_split(const SplitPlan& plan);

}  // namespace emdot::splitter
