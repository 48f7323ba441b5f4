#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "emdot/diagnostics.hpp"
#include "emdot/error.hpp"
#include "support.hpp"
#include "svg.hpp"

using namespace emdot;
using namespace emdot::diagnostics;

namespace {

FeatureImportance fi(std::vector<std::string> n, std::vector<double> v) { return {std::move(n), std::move(v)}; }

PrevalenceSeries one_series(const std::string& name, bool categorical, std::vector<double> values) {
  PrevalenceSeries s;
  s.features = {name};
  s.categorical = {categorical};
  s.values = {std::move(values)};
  return s;
}

engine::EvalRecord record(const std::string& regime, int seed, int t_star, int k, double v) {
  engine::EvalRecord r;
  r.regime = regime;
  r.seed = seed;
  r.t_star = t_star;
  r.test_time = k;
  r.staleness = k - t_star;
  r.value.value = v;
  r.value.n_pos = r.value.n_neg = 5;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("top-k union across deployment dates") {
  std::map<int, FeatureImportance> m{{4, fi({"a", "b", "c"}, {3, 2, 1})}, {5, fi({"a", "b", "c"}, {1, 3, 2})}};
  const auto tr = top_feature_union(m, 1);
  CHECK(tr.feature_union == std::vector<std::string>{"a", "b"});
  CHECK(tr.top_k[0] == std::vector<std::string>{"a"});
  CHECK(tr.ranks[0] == std::vector<int>{1, 3});
  CHECK(top_feature_union(m, 10).feature_union == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("importance ties rank by name") {
  std::map<int, FeatureImportance> m{{1, fi({"z", "y"}, {1, 1})}};
  const auto tr = top_feature_union(m, 1);
  CHECK(tr.top_k[0] == std::vector<std::string>{"y"});
}

TEST_CASE("averaging fills absent features with zero") {
  const auto a = average({fi({"a", "b"}, {2, 4}), fi({"a"}, {4})});
  CHECK(a.names == std::vector<std::string>{"a", "b"});
  CHECK(a.values == std::vector<double>{3, 2});
}

TEST_CASE("highlight rules") {
  DiagnosticsConfig c;
  ImportanceTrajectory empty;
  CHECK(highlight_features(one_series("c=a", true, {0.5, 0.5, 0.5}), empty, c)[0].flagged);
  CHECK(highlight_features(one_series("c=a", true, {0.1, 0.1, 0.4}), empty, c)[0].flagged);
  const auto quiet = highlight_features(one_series("c=a", true, {0.1, 0.15, 0.2}), empty, c)[0];
  CHECK_FALSE(quiet.flagged);
  CHECK(quiet.max_jump == doctest::Approx(0.05));

  std::map<int, FeatureImportance> m{{1, fi({"x", "w"}, {5, 1})}, {2, fi({"x", "w"}, {5, 1})}};
  const auto tr = top_feature_union(m, 2);
  auto series = one_series("x", false, {10.0, 11.0});
  const auto h = highlight_features(series, tr, c)[0];
  CHECK(h.flagged);
  CHECK(h.average_rank == 1.0);
  c.rank_threshold = 1.0;
  series.features = {"w"};
  CHECK_FALSE(highlight_features(series, tr, c)[0].flagged);
}

TEST_CASE("max drop takes the worst future point") {
  std::vector<engine::EvalRecord> rs{record("SlidingWindow", 0, 4, 4, 0.85), record("SlidingWindow", 0, 4, 5, 0.80),
                                     record("SlidingWindow", 0, 4, 6, 0.70), record("SlidingWindow", 0, 4, 7, 0.78)};
  auto drops = max_auroc_drop(rs, models::Family::LR, engine::MetricKind::AUROC);
  REQUIRE(drops.size() == 1);
  CHECK(drops[0].defined);
  CHECK(drops[0].drop == doctest::Approx(0.15));

  std::vector<engine::EvalRecord> rising{record("AllHistorical", 0, 4, 4, 0.7), record("AllHistorical", 0, 4, 5, 0.75),
                                         record("AllHistorical", 1, 4, 4, 0.7), record("AllHistorical", 1, 4, 5, 0.8)};
  drops = max_auroc_drop(rising, models::Family::LR, engine::MetricKind::AUROC);
  REQUIRE(drops.size() == 1);
  CHECK(drops[0].drop <= 0.0);
  CHECK(drops[0].drop == doctest::Approx(-0.075));
  CHECK(mean_drop(drops, "AllHistorical") == doctest::Approx(-0.075));
  CHECK(std::isnan(mean_drop(drops, "SlidingWindow")));

  drops = max_auroc_drop({record("SlidingWindow", 0, 8, 8, 0.9)}, models::Family::LR, engine::MetricKind::AUROC);
  CHECK_FALSE(drops[0].defined);
  CHECK(drops[0].flag == "NoFuture");
}

TEST_CASE("prevalence of dummies and the missing indicator sums to one") {
  const std::vector<dataset::ColumnSpec> schema{{"year", dataset::ColumnKind::Time, {}},
                                                {"x", dataset::ColumnKind::Numerical, {}},
                                                {"c", dataset::ColumnKind::Categorical, {}},
                                                {"y", dataset::ColumnKind::Label, {}}};
  const auto d = dataset::parse_csv("year,x,c,y\n2001,1,a,0\n2001,3,b,1\n2001,,,0\n2002,5,a,1\n2002,,a,0\n", schema);
  const auto s = prevalence_series(d, {"c=a", "c=b", "c=MISSING", "x"});
  for (std::size_t t = 0; t < 2; ++t)
    CHECK(s.values[0][t] + s.values[1][t] + s.values[2][t] == doctest::Approx(1.0));
  CHECK(s.values[0][0] == doctest::Approx(1.0 / 3));
  CHECK(s.values[3] == std::vector<double>{2.0, 5.0});
  CHECK_FALSE(s.categorical[3]);
  CHECK_THROWS_AS(prevalence_series(d, {"nope"}), UnknownFeatureError);
  CHECK_THROWS_AS(prevalence_series(d, {"c=zzz"}), UnknownFeatureError);
}

TEST_CASE("heatmap shade is proportional to the value") {
  CHECK(svg::shade(0.0) == 255);
  CHECK(svg::shade(1.0) == 0);
  CHECK(std::abs(svg::shade(0.5) - 128) <= 1);
  CHECK(svg::shade(0.25) > svg::shade(0.75));
}

TEST_CASE("an empty report still writes every file") {
  DiagnosticsReport r;
  r.time_labels = {"2001", "2002"};
  const auto dir = test::scratch_dir("diag_empty");
  const auto files = emit_report(r, dir);
  CHECK_FALSE(files.empty());
  for (const auto& f : files) CHECK(std::filesystem::exists(f));
  const auto json = nlohmann::json::parse(slurp(dir / "diagnostics.json"));
  CHECK(json.at("format") == "emdot.diagnostics");
}

TEST_CASE("report from a run is reproducible") {
  const auto d = test::toy_dataset(std::vector<int>(6, 60));
  engine::ExperimentConfig c;
  c.n_seeds = 1;
  c.grid.candidates[models::Family::LR] = {models::LrParams{1.0}};
  const auto run = engine::run_emdot(c, d);
  DiagnosticsConfig dc;
  dc.k = 2;
  const auto r = build_report(d, run.records, run.models, dc);
  REQUIRE(r.trajectories.size() == c.regimes.size());
  CHECK(r.trajectories[0].t_stars == std::vector<int>{4, 5, 6});
  CHECK_FALSE(r.feature_union.empty());
  CHECK(r.missingness.size() == r.missingness_columns.size());

  const auto a = test::scratch_dir("diag_a");
  const auto b = test::scratch_dir("diag_b");
  const auto fa = emit_report(r, a);
  const auto fb = emit_report(build_report(d, run.records, run.models, dc), b);
  REQUIRE(fa.size() == fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    CHECK(fa[i].filename() == fb[i].filename());
    CHECK(slurp(fa[i]) == slurp(fb[i]));
  }
}

TEST_CASE("diagnostics config parsing") {
  const auto c = config_from_json(nlohmann::json{{"k", 3}, {"family", "GBDT"}});
  CHECK(c.k == 3);
  CHECK(c.family == models::Family::GBDT);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"k", 0}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"p", "x"}}), ConfigError);
}
