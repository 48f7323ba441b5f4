#include "emdot/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "emdot/error.hpp"
#include "emdot/rng.hpp"

namespace emdot::splitter {

void validate(const SplitRatios& r) {
  for (auto [name, v] : {std::pair{"train", r.train}, {"val", r.val}, {"test", r.test}}) {
    if (!(v > 0.0 && v < 1.0))
      throw ConfigError(std::string("split ratio '") + name + "' must lie in (0,1)");
  }
  if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");
}

std::array<std::size_t, 3> allocate(std::size_t n, const SplitRatios& ratios) {
  const double share[3] = {ratios.train, ratios.val, ratios.test};
  std::array<std::size_t, 3> sizes{};
  double remainder[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    // Snap values within rounding noise of an integer (0.1 * 10 = 1.0000000000000002).
    const double exact = share[i] * static_cast<double>(n);
    double base = std::floor(exact + 1e-9);
    sizes[i] = static_cast<std::size_t>(base);
    remainder[i] = std::max(0.0, exact - base);
    assigned += sizes[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b] + 1e-12; });
  for (int k = 0; assigned < n; k = (k + 1) % 3) {
    ++sizes[order[k]];
    ++assigned;
  }
  return sizes;
}

namespace {

void assign_rows(RowSet rows, std::uint64_t stream_seed, const SplitRatios& ratios, TimePartition& part) {
  Rng rng(stream_seed);
  rng.shuffle(std::span<RowIndex>(rows));
  const auto sizes = allocate(rows.size(), ratios);
  auto first = rows.begin();
  part.train.assign(first, first + sizes[0]);
  part.val.assign(first + sizes[0], first + sizes[0] + sizes[1]);
  part.test.assign(first + sizes[0] + sizes[1], rows.end());
}

/// Orders group keys by a hash of (seed, key) and allocates whole groups.
std::unordered_map<std::string, Role> assign_groups(std::vector<std::string> groups, std::uint64_t seed,
                                                    const SplitRatios& ratios) {
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  std::vector<std::pair<std::uint64_t, std::string>> keyed;
  keyed.reserve(groups.size());
  for (auto& g : groups) keyed.emplace_back(hash_combine(seed, hash_string(g)), std::move(g));
  std::sort(keyed.begin(), keyed.end());
  const auto sizes = allocate(keyed.size(), ratios);
  std::unordered_map<std::string, Role> roles;
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    const Role role = i < sizes[0] ? Role::Train : (i < sizes[0] + sizes[1] ? Role::Val : Role::Test);
    roles.emplace(keyed[i].second, role);
  }
  return roles;
}

void place(const dataset::TemporalDataset& data, const RowSet& rows,
           const std::unordered_map<std::string, Role>& roles, TimePartition& part) {
  for (auto r : rows) {
    switch (roles.at(data.group_of(r))) {
      case Role::Train: part.train.push_back(r); break;
      case Role::Val: part.val.push_back(r); break;
      case Role::Test: part.test.push_back(r); break;
    }
  }
}

}  // namespace

SplitPlan build_split_plan(const dataset::TemporalDataset& data, const SplitRatios& ratios,
                           std::uint64_t seed, bool grouped) {
  validate(ratios);
  const int T = data.num_time_points();
  SplitPlan plan;
  plan.seed = seed;
  plan.grouped = grouped;
  plan.parts.resize(T);

  if (!grouped || !data.has_groups()) {
    for (int t = 1; t <= T; ++t) {
      if (data.rows_at(t).empty()) throw ConfigError("time point " + std::to_string(t) + " is empty");
      assign_rows(data.rows_at(t), hash_combine(seed, static_cast<std::uint64_t>(t)), ratios,
                  plan.parts[t - 1]);
    }
  } else {
    std::unordered_map<std::string, int> first_time;
    bool recurring = false;
    for (std::size_t r = 0; r < data.num_rows(); ++r) {
      auto [it, inserted] = first_time.emplace(data.group_of(r), data.time_of(r));
      if (!inserted && it->second != data.time_of(r)) recurring = true;
    }
    if (recurring) {
      std::vector<std::string> all;
      all.reserve(first_time.size());
      for (const auto& [g, t] : first_time) all.push_back(g);
      const auto roles = assign_groups(std::move(all), seed, ratios);
      for (int t = 1; t <= T; ++t) place(data, data.rows_at(t), roles, plan.parts[t - 1]);
    } else {
      for (int t = 1; t <= T; ++t) {
        std::vector<std::string> groups;
        for (auto r : data.rows_at(t)) groups.push_back(data.group_of(r));
        const auto roles =
            assign_groups(std::move(groups), hash_combine(seed, static_cast<std::uint64_t>(t)), ratios);
        place(data, data.rows_at(t), roles, plan.parts[t - 1]);
      }
    }
  }
  for (auto& p : plan.parts) {
    std::sort(p.train.begin(), p.train.end());
    std::sort(p.val.begin(), p.val.end());
    std::sort(p.test.begin(), p.test.end());
  }
  return plan;
}

std::string to_string(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::SlidingWindow: return "SlidingWindow";
    case RegimeKind::AllHistorical: return "AllHistorical";
    case RegimeKind::AllHistoricalSubsampled: return "AllHistoricalSubsampled";
  }
  return "?";
}

RegimeKind parse_regime(const std::string& text) {
  if (text == "SlidingWindow") return RegimeKind::SlidingWindow;
  if (text == "AllHistorical") return RegimeKind::AllHistorical;
  if (text == "AllHistoricalSubsampled") return RegimeKind::AllHistoricalSubsampled;
  throw ConfigError("unknown regime '" + text + "'");
}

namespace {

TrainVal union_range(const SplitPlan& plan, int first, int last) {
  TrainVal tv;
  for (int k = first; k <= last; ++k) {
    const auto& p = plan.at(k);
    tv.train.insert(tv.train.end(), p.train.begin(), p.train.end());
    tv.val.insert(tv.val.end(), p.val.begin(), p.val.end());
  }
  std::sort(tv.train.begin(), tv.train.end());
  std::sort(tv.val.begin(), tv.val.end());
  return tv;
}

// Uniform draw of `target` rows without replacement (partial Fisher-Yates),
// returned sorted.
void subsample(RowSet& pool, std::size_t target, std::uint64_t seed) {
  if (target >= pool.size()) return;
  Rng rng(seed);
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(target);
  std::sort(pool.begin(), pool.end());
}

}  // namespace

TrainVal regime_train_val(int t_star, const RegimeSpec& regime, const SplitPlan& plan) {
  const int T = plan.num_time_points();
  const int W = regime.window;
  if (W < 1 || W > T) throw RangeError("window " + std::to_string(W) + " outside [1, T]");
  const int lo = regime.kind == RegimeKind::SlidingWindow ? W : 1;
  if (t_star < lo || t_star > T)
    throw RangeError("deployment date " + std::to_string(t_star) + " outside [" + std::to_string(lo) +
                     ", " + std::to_string(T) + "]");

  switch (regime.kind) {
    case RegimeKind::SlidingWindow: return union_range(plan, t_star - W + 1, t_star);
    case RegimeKind::AllHistorical: return union_range(plan, 1, t_star);
    case RegimeKind::AllHistoricalSubsampled: {
      TrainVal tv = union_range(plan, 1, t_star);
      const TrainVal window = union_range(plan, std::max(1, t_star - W + 1), t_star);
      const std::uint64_t seed = hash_combine(hash_combine(plan.seed, 0x5ab5a3b1eULL), static_cast<std::uint64_t>(t_star));
      subsample(tv.train, window.train.size(), hash_combine(seed, 0));
      subsample(tv.val, window.val.size(), hash_combine(seed, 1));
      return tv;
    }
  }
  return {};
}

TestSets test_sets(int t_star, const SplitPlan& plan, const dataset::TemporalDataset& data) {
  const int T = plan.num_time_points();
  if (t_star < 1 || t_star > T) throw RangeError("deployment date outside [1, T]");
  TestSets ts;
  ts.in_period = plan.at(t_star).test;
  for (int k = t_star + 1; k <= T; ++k) ts.out_of_period.emplace(k, data.rows_at(k));
  return ts;
}

AllPeriodSplit all_period_split(const SplitPlan& plan) {
  AllPeriodSplit s;
  for (const auto& p : plan.parts) {
    s.train.insert(s.train.end(), p.train.begin(), p.train.end());
    s.val.insert(s.val.end(), p.val.begin(), p.val.end());
    s.test.insert(s.test.end(), p.test.begin(), p.test.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace emdot::splitter
