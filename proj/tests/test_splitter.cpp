#include <doctest.h>

#include <algorithm>

#include "emdot/error.hpp"
#include "emdot/splitter.hpp"
#include "invariants.hpp"
#include "support.hpp"

using namespace emdot;
using namespace emdot::splitter;

TEST_CASE("split ratios are validated") {
  CHECK_NOTHROW(validate(SplitRatios{}));
  CHECK_NOTHROW(validate(SplitRatios{0.5, 0.25, 0.25}));
  CHECK_THROWS_AS(validate(SplitRatios{0.8, 0.1, 0.2}), ConfigError);
  CHECK_THROWS_AS(validate(SplitRatios{1.0, 0.0, 0.0}), ConfigError);
}

TEST_CASE("allocation of ten rows") {
  CHECK(allocate(10, {}) == std::array<std::size_t, 3>{8, 1, 1});
  CHECK(allocate(4, {0.5, 0.25, 0.25}) == std::array<std::size_t, 3>{2, 1, 1});
  for (std::size_t n = 0; n < 50; ++n) {
    const auto a = allocate(n, {});
    CHECK(a[0] + a[1] + a[2] == n);
  }
}

TEST_CASE("one time point of ten rows splits 8/1/1") {
  const auto d = test::toy_dataset({10, 10});
  const auto plan = build_split_plan(d, {}, 5, false);
  CHECK(plan.at(1).train.size() == 8);
  CHECK(plan.at(1).val.size() == 1);
  CHECK(plan.at(1).test.size() == 1);
  CHECK(test::check_plan(d, plan).empty());
}

TEST_CASE("plans are deterministic per seed") {
  const auto d = test::toy_dataset({40, 30, 50});
  const auto a = build_split_plan(d, {}, 9, false);
  const auto b = build_split_plan(d, {}, 9, false);
  const auto c = build_split_plan(d, {}, 10, false);
  for (int t = 1; t <= 3; ++t) {
    CHECK(a.at(t).train == b.at(t).train);
    CHECK(a.at(t).test == b.at(t).test);
  }
  CHECK(a.at(1).train != c.at(1).train);
}

TEST_CASE("a group recurring across time keeps one role") {
  const std::vector<dataset::ColumnSpec> schema{{"year", dataset::ColumnKind::Time, {}},
                                                {"pid", dataset::ColumnKind::GroupKey, {}},
                                                {"x", dataset::ColumnKind::Numerical, {}},
                                                {"y", dataset::ColumnKind::Label, {}}};
  std::string csv = "year,pid,x,y\n";
  for (int g = 0; g < 20; ++g) {
    csv += "2001,g" + std::to_string(g) + ",1,0\n";
    csv += "2003,g" + std::to_string(g) + ",2,1\n";
  }
  csv += "2002,solo,1,0\n";
  const auto d = dataset::parse_csv(csv, schema);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto plan = build_split_plan(d, {}, seed, true);
    CHECK(test::check_plan(d, plan).empty());
  }
}

TEST_CASE("sliding window unions the last W training sets") {
  const auto d = test::toy_dataset(std::vector<int>(10, 20));
  const auto plan = build_split_plan(d, {}, 1, false);
  const auto tv = regime_train_val(6, {RegimeKind::SlidingWindow, 4}, plan);
  RowSet expected;
  for (int k : {3, 4, 5, 6}) expected.insert(expected.end(), plan.at(k).train.begin(), plan.at(k).train.end());
  std::sort(expected.begin(), expected.end());
  CHECK(tv.train == expected);
  CHECK(test::check_regimes(plan, 4) == "");
}

TEST_CASE("at t* = W both regimes coincide") {
  const auto d = test::toy_dataset(std::vector<int>(6, 20));
  const auto plan = build_split_plan(d, {}, 2, false);
  const auto sw = regime_train_val(4, {RegimeKind::SlidingWindow, 4}, plan);
  const auto ah = regime_train_val(4, {RegimeKind::AllHistorical, 4}, plan);
  CHECK(sw.train == ah.train);
  CHECK(sw.val == ah.val);
}

TEST_CASE("subsampled history matches the window size") {
  // 38 rows per time point allocate 30 to train: window 4 gives 120 rows,
  // ten time points of history give 300.
  const auto d = test::toy_dataset(std::vector<int>(10, 38));
  const auto plan = build_split_plan(d, {}, 4, false);
  REQUIRE(plan.at(1).train.size() == 30);
  const auto sw = regime_train_val(10, {RegimeKind::SlidingWindow, 4}, plan);
  const auto ah = regime_train_val(10, {RegimeKind::AllHistorical, 4}, plan);
  const auto sub = regime_train_val(10, {RegimeKind::AllHistoricalSubsampled, 4}, plan);
  CHECK(sw.train.size() == 120);
  CHECK(ah.train.size() == 300);
  CHECK(sub.train.size() == 120);
  CHECK(test::is_subset(sub.train, ah.train));
  CHECK(std::adjacent_find(sub.train.begin(), sub.train.end()) == sub.train.end());
  const auto again = regime_train_val(10, {RegimeKind::AllHistoricalSubsampled, 4}, plan);
  CHECK(again.train == sub.train);
}

TEST_CASE("deployment dates outside the valid range throw") {
  const auto d = test::toy_dataset(std::vector<int>(6, 10));
  const auto plan = build_split_plan(d, {}, 2, false);
  CHECK_THROWS_AS(regime_train_val(3, {RegimeKind::SlidingWindow, 4}, plan), RangeError);
  CHECK_THROWS_AS(regime_train_val(7, {RegimeKind::AllHistorical, 4}, plan), RangeError);
  CHECK_THROWS_AS(regime_train_val(5, {RegimeKind::SlidingWindow, 7}, plan), RangeError);
}

TEST_CASE("test sets") {
  const auto d = test::toy_dataset(std::vector<int>(8, 10));
  const auto plan = build_split_plan(d, {}, 2, false);
  const auto at6 = test_sets(6, plan, d);
  CHECK(at6.in_period == plan.at(6).test);
  REQUIRE(at6.out_of_period.size() == 2);
  CHECK(at6.out_of_period.count(7) == 1);
  CHECK(at6.out_of_period.at(7) == d.rows_at(7));
  CHECK(test_sets(8, plan, d).out_of_period.empty());
}

TEST_CASE("all-period split is the union of the per-time roles") {
  const auto d = test::toy_dataset({10, 20, 10}, 3);
  const auto plan = build_split_plan(d, {}, 2, false);
  const auto ap = all_period_split(plan);
  CHECK(ap.test.size() == 4);  // 1 + 2 + 1
  CHECK(ap.train.size() == 32);
}

TEST_CASE("regime names round-trip") {
  for (auto k : {RegimeKind::SlidingWindow, RegimeKind::AllHistorical, RegimeKind::AllHistoricalSubsampled})
    CHECK(parse_regime(to_string(k)) == k);
  CHECK_THROWS_AS(parse_regime("Sliding"), ConfigError);
}
