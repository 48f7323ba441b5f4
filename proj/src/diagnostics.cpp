#include "emdot/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include "csv.hpp"
#include "emdot/error.hpp"
#include "emdot/results_io.hpp"
#include "svg.hpp"

namespace emdot::diagnostics {

using engine::EvalRecord;
namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTolerance = 1e-12;

void validate(const DiagnosticsConfig& c) {
  if (c.k < 1) throw ConfigError("diagnostics.k must be >= 1");
  if (!(c.p > 0.0 && c.p < 1.0)) throw ConfigError("diagnostics.p must lie in (0,1)");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("diagnostics.delta must lie in (0,1)");
  if (!(c.rank_threshold >= 1.0)) throw ConfigError("diagnostics.rank_threshold must be >= 1");
}

DiagnosticsConfig config_from_json(const nlohmann::json& j) {
  try {
    DiagnosticsConfig c;
    c.k = j.value("k", c.k);
    c.p = j.value("p", c.p);
    c.delta = j.value("delta", c.delta);
    c.rank_threshold = j.value("rank_threshold", c.rank_threshold);
    if (j.contains("family")) c.family = models::parse_family(j.at("family").get<std::string>());
    if (j.contains("metric")) c.metric = engine::parse_metric(j.at("metric").get<std::string>());
    validate(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("diagnostics config: ") + e.what());
  }
}

nlohmann::json to_json(const DiagnosticsConfig& c) {
  return {{"k", c.k},
          {"p", c.p},
          {"delta", c.delta},
          {"rank_threshold", c.rank_threshold},
          {"family", models::to_string(c.family)},
          {"metric", engine::to_string(c.metric)}};
}

FeatureImportance importance_of(const models::TrainedModel& model) {
  return {model.feature_names, models::importance(model)};
}

FeatureImportance average(const std::vector<FeatureImportance>& fits) {
  std::map<std::string, double> sum;
  for (const auto& f : fits)
    for (std::size_t i = 0; i < f.names.size(); ++i) sum[f.names[i]] += f.values[i];
  FeatureImportance out;
  for (const auto& [name, total] : sum) {
    out.names.push_back(name);
    out.values.push_back(fits.empty() ? 0.0 : total / static_cast<double>(fits.size()));
  }
  return out;
}

ImportanceTrajectory top_feature_union(const std::map<int, FeatureImportance>& by_t_star, int k,
                                       const std::string& regime) {
  ImportanceTrajectory tr;
  tr.regime = regime;
  std::set<std::string> names;
  for (const auto& [t, fi] : by_t_star) {
    tr.t_stars.push_back(t);
    names.insert(fi.names.begin(), fi.names.end());
  }
  tr.features.assign(names.begin(), names.end());
  const std::size_t F = tr.features.size(), N = tr.t_stars.size();
  tr.values.assign(F, std::vector<double>(N, 0.0));
  tr.ranks.assign(F, std::vector<int>(N, 0));

  std::set<std::string> united;
  std::size_t col = 0;
  for (const auto& [t, fi] : by_t_star) {
    for (std::size_t i = 0; i < fi.names.size(); ++i) {
      const auto pos = std::lower_bound(tr.features.begin(), tr.features.end(), fi.names[i]) - tr.features.begin();
      tr.values[pos][col] = fi.values[i];
    }
    std::vector<std::size_t> order(F);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      if (tr.values[a][col] != tr.values[b][col]) return tr.values[a][col] > tr.values[b][col];
      return tr.features[a] < tr.features[b];
    });
    std::vector<std::string> top;
    for (std::size_t r = 0; r < F; ++r) {
      tr.ranks[order[r]][col] = static_cast<int>(r) + 1;
      if (r < static_cast<std::size_t>(k)) top.push_back(tr.features[order[r]]);
    }
    united.insert(top.begin(), top.end());
    tr.top_k.push_back(std::move(top));
    ++col;
  }
  tr.feature_union.assign(united.begin(), united.end());
  return tr;
}

PrevalenceSeries prevalence_series(const dataset::TemporalDataset& data, const std::vector<std::string>& features) {
  const int T = data.num_time_points();
  PrevalenceSeries out;
  for (const auto& name : features) {
    const dataset::FeatureColumn* column = nullptr;
    std::string level;
    for (const auto& c : data.features()) {
      if (c.kind == dataset::ColumnKind::Numerical && c.name == name) {
        column = &c;
        break;
      }
      if (c.kind == dataset::ColumnKind::Categorical && name.size() > c.name.size() &&
          name.compare(0, c.name.size(), c.name) == 0 && name[c.name.size()] == '=') {
        column = &c;
        level = name.substr(c.name.size() + 1);
        break;
      }
    }
    if (!column) throw UnknownFeatureError("unknown feature '" + name + "'");
    const bool categorical = column->kind == dataset::ColumnKind::Categorical;
    const bool missing_level = categorical && level == dataset::kMissingLevel;
    if (categorical && !missing_level) {
      bool seen = false;
      for (std::size_t r = 0; r < data.num_rows() && !seen; ++r)
        seen = !column->is_missing(r) && column->text[r] == level;
      if (!seen) throw UnknownFeatureError("level '" + level + "' never occurs in column '" + column->name + "'");
    }
    std::vector<double> series(T, kNaN);
    for (int t = 1; t <= T; ++t) {
      const auto& rows = data.rows_at(t);
      double acc = 0.0;
      std::size_t count = 0;
      for (auto r : rows) {
        if (categorical) {
          const bool hit = missing_level ? column->is_missing(r) : (!column->is_missing(r) && column->text[r] == level);
          acc += hit;
          ++count;
        } else if (!column->is_missing(r)) {
          acc += column->number[r];
          ++count;
        }
      }
      if (count > 0) series[t - 1] = acc / static_cast<double>(count);
    }
    out.features.push_back(name);
    out.categorical.push_back(categorical);
    out.values.push_back(std::move(series));
  }
  return out;
}

std::vector<Highlight> highlight_features(const PrevalenceSeries& series, const ImportanceTrajectory& trajectory,
                                          const DiagnosticsConfig& config) {
  std::vector<Highlight> out;
  for (std::size_t f = 0; f < series.features.size(); ++f) {
    Highlight h;
    h.feature = series.features[f];
    h.categorical = series.categorical[f];
    const auto& v = series.values[f];
    h.min_prevalence = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < v.size(); ++t) {
      if (std::isfinite(v[t])) h.min_prevalence = std::min(h.min_prevalence, v[t]);
      if (t > 0 && std::isfinite(v[t]) && std::isfinite(v[t - 1]))
        h.max_jump = std::max(h.max_jump, std::abs(v[t] - v[t - 1]));
    }
    if (!std::isfinite(h.min_prevalence)) h.min_prevalence = kNaN;

    h.average_rank = kNaN;
    auto it = std::lower_bound(trajectory.features.begin(), trajectory.features.end(), h.feature);
    if (it != trajectory.features.end() && *it == h.feature && !trajectory.t_stars.empty()) {
      const auto& ranks = trajectory.ranks[it - trajectory.features.begin()];
      h.average_rank = std::accumulate(ranks.begin(), ranks.end(), 0.0) / static_cast<double>(ranks.size());
    }
    if (h.categorical) {
      h.flagged = (std::isfinite(h.min_prevalence) && h.min_prevalence >= config.p - kTolerance) ||
                  h.max_jump >= config.delta - kTolerance;
    } else {
      h.flagged = std::isfinite(h.average_rank) && h.average_rank <= config.rank_threshold + kTolerance;
    }
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<DropEntry> max_auroc_drop(const std::vector<EvalRecord>& records, models::Family family,
                                      engine::MetricKind metric) {
  using Key = std::tuple<std::string, int, int>;
  std::map<Key, std::pair<double, std::size_t>> sums;
  std::map<std::pair<std::string, int>, bool> cells;
  for (const auto& r : records) {
    if (r.family != family || r.metric != metric || r.regime == engine::kAllPeriodRegime) continue;
    cells[{r.regime, r.t_star}] = true;
    if (!r.defined()) continue;
    auto& s = sums[{r.regime, r.t_star, r.test_time}];
    s.first += r.value.value;
    ++s.second;
  }
  std::vector<DropEntry> out;
  for (const auto& [cell, unused] : cells) {
    DropEntry e;
    e.regime = cell.first;
    e.t_star = cell.second;
    auto in = sums.find({cell.first, cell.second, cell.second});
    if (in == sums.end()) {
      e.flag = "MissingInPeriod";
      e.drop = kNaN;
      out.push_back(std::move(e));
      continue;
    }
    const double in_period = in->second.first / static_cast<double>(in->second.second);
    double worst = -std::numeric_limits<double>::infinity();
    for (auto it = std::next(in); it != sums.end(); ++it) {
      const auto& [regime, t_star, k] = it->first;
      if (regime != cell.first || t_star != cell.second) break;
      worst = std::max(worst, in_period - it->second.first / static_cast<double>(it->second.second));
    }
    if (std::isfinite(worst)) {
      e.drop = worst;
      e.defined = true;
    } else {
      e.drop = kNaN;
      e.flag = "NoFuture";
    }
    out.push_back(std::move(e));
  }
  return out;
}

double mean_drop(const std::vector<DropEntry>& drops, const std::string& regime) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& d : drops)
    if (d.regime == regime && d.defined) {
      sum += d.drop;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : kNaN;
}

DiagnosticsReport build_report(const dataset::TemporalDataset& data, const std::vector<EvalRecord>& records,
                               const std::vector<engine::CellModel>& cell_models, const DiagnosticsConfig& config) {
  validate(config);
  DiagnosticsReport report;
  report.config = config;
  for (int t = 1; t <= data.num_time_points(); ++t) report.time_labels.push_back(data.time_label(t));

  std::string label;
  std::vector<std::string> regimes;
  for (const auto& m : cell_models) {
    if (m.family != config.family || m.regime == engine::kAllPeriodRegime) continue;
    if (label.empty()) label = m.label;
    if (std::find(regimes.begin(), regimes.end(), m.regime) == regimes.end()) regimes.push_back(m.regime);
  }
  std::set<std::string> united;
  for (const auto& regime : regimes) {
    std::map<int, std::vector<FeatureImportance>> fits;
    for (const auto& m : cell_models)
      if (m.family == config.family && m.regime == regime && m.label == label)
        fits[m.t_star].push_back(importance_of(m.model));
    std::map<int, FeatureImportance> by_t;
    for (const auto& [t, list] : fits) by_t[t] = average(list);
    auto tr = top_feature_union(by_t, config.k, regime);
    united.insert(tr.feature_union.begin(), tr.feature_union.end());
    report.trajectories.push_back(std::move(tr));
  }
  report.feature_union.assign(united.begin(), united.end());

  // Features introduced after a time point may not exist in every dummy
  // expansion; restrict the series to names the full dataset knows.
  std::vector<std::string> known;
  for (const auto& f : report.feature_union) {
    try {
      (void)prevalence_series(data, {f});
      known.push_back(f);
    } catch (const UnknownFeatureError&) {
    }
  }
  report.prevalence = prevalence_series(data, known);
  const ImportanceTrajectory empty;
  report.highlights =
      highlight_features(report.prevalence, report.trajectories.empty() ? empty : report.trajectories.front(), config);
  report.drops = max_auroc_drop(records, config.family, config.metric);

  for (const auto& c : data.features()) report.missingness_columns.push_back(c.name);
  report.missingness = dataset::missingness_profile(data);
  return report;
}

nlohmann::json to_json(const DiagnosticsReport& r) {
  nlohmann::json trajectories = nlohmann::json::array();
  for (const auto& t : r.trajectories)
    trajectories.push_back({{"regime", t.regime},
                            {"t_stars", t.t_stars},
                            {"features", t.features},
                            {"importance", t.values},
                            {"ranks", t.ranks},
                            {"top_k", t.top_k},
                            {"feature_union", t.feature_union}});
  nlohmann::json highlights = nlohmann::json::array();
  for (const auto& h : r.highlights)
    highlights.push_back({{"feature", h.feature},
                          {"categorical", h.categorical},
                          {"flagged", h.flagged},
                          {"min_prevalence", h.min_prevalence},
                          {"max_jump", h.max_jump},
                          {"average_rank", h.average_rank}});
  nlohmann::json drops = nlohmann::json::array();
  for (const auto& d : r.drops)
    drops.push_back({{"regime", d.regime},
                     {"t_star", d.t_star},
                     {"drop", d.defined ? nlohmann::json(d.drop) : nlohmann::json(nullptr)},
                     {"flag", d.flag}});
  std::vector<bool> categorical(r.prevalence.categorical.begin(), r.prevalence.categorical.end());
  return {{"format", "emdot.diagnostics"},
          {"version", 1},
          {"config", to_json(r.config)},
          {"time_labels", r.time_labels},
          {"trajectories", trajectories},
          {"feature_union", r.feature_union},
          {"prevalence",
           {{"features", r.prevalence.features}, {"categorical", categorical}, {"values", r.prevalence.values}}},
          {"highlights", highlights},
          {"max_drop", drops},
          {"missingness", {{"columns", r.missingness_columns}, {"values", r.missingness}}}};
}

namespace {

std::string series_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out = csv::join(header) + "\n";
  for (const auto& row : rows) out += csv::join(row) + "\n";
  return out;
}

bool is_highlighted(const DiagnosticsReport& r, const std::string& feature) {
  for (const auto& h : r.highlights)
    if (h.feature == feature) return h.flagged;
  return false;
}

std::string file_safe(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  return s;
}

}  // namespace

std::vector<fs::path> emit_report(const DiagnosticsReport& r, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  std::vector<fs::path> written;
  auto put = [&](const std::string& name, const std::string& content) {
    const auto path = out_dir / name;
    io::write_file(path, content);
    written.push_back(path);
  };

  put("diagnostics.json", to_json(r).dump(2) + "\n");

  for (const auto& tr : r.trajectories) {
    std::vector<std::string> header{"feature"};
    for (int t : tr.t_stars) header.push_back(std::to_string(t));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t f = 0; f < tr.features.size(); ++f) {
      std::vector<std::string> row{tr.features[f]};
      for (double v : tr.values[f]) row.push_back(io::format_double(v));
      rows.push_back(std::move(row));
    }
    put("importance_" + file_safe(tr.regime) + ".csv", series_csv(header, rows));
  }
  {
    std::vector<std::string> header{"feature", "kind"};
    header.insert(header.end(), r.time_labels.begin(), r.time_labels.end());
    std::vector<std::vector<std::string>> rows;
    for (std::size_t f = 0; f < r.prevalence.features.size(); ++f) {
      std::vector<std::string> row{r.prevalence.features[f], r.prevalence.categorical[f] ? "dummy" : "numerical_mean"};
      for (double v : r.prevalence.values[f]) row.push_back(io::format_double(v));
      rows.push_back(std::move(row));
    }
    put("prevalence.csv", series_csv(header, rows));
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& h : r.highlights)
      rows.push_back({h.feature, h.categorical ? "categorical" : "numerical", h.flagged ? "1" : "0",
                      io::format_double(h.min_prevalence), io::format_double(h.max_jump),
                      io::format_double(h.average_rank)});
    put("highlights.csv",
        series_csv({"feature", "kind", "flagged", "min_prevalence", "max_jump", "average_rank"}, rows));
  }
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& d : r.drops)
      rows.push_back({d.regime, std::to_string(d.t_star), d.defined ? io::format_double(d.drop) : "", d.flag});
    put("max_drop.csv", series_csv({"regime", "t_star", "max_drop", "flag"}, rows));
  }
  {
    std::vector<std::string> header{"column"};
    header.insert(header.end(), r.time_labels.begin(), r.time_labels.end());
    std::vector<std::vector<std::string>> rows;
    for (std::size_t c = 0; c < r.missingness_columns.size(); ++c) {
      std::vector<std::string> row{r.missingness_columns[c]};
      for (double v : r.missingness[c]) row.push_back(io::format_double(v));
      rows.push_back(std::move(row));
    }
    put("missingness.csv", series_csv(header, rows));
  }

  // SVG renderings.
  for (const auto& tr : r.trajectories) {
    svg::LineChart chart;
    chart.title = "|importance| of top features, " + tr.regime;
    chart.x_label = "simulated deployment date";
    chart.y_label = "importance";
    for (int t : tr.t_stars) chart.x_ticks.push_back(r.time_labels.at(t - 1));
    for (const auto& name : tr.feature_union) {
      const auto pos = std::lower_bound(tr.features.begin(), tr.features.end(), name) - tr.features.begin();
      chart.series.push_back({name, {}, tr.values[pos], is_highlighted(r, name), false});
    }
    put("importance_" + file_safe(tr.regime) + ".svg", svg::render(chart));
  }
  for (bool categorical : {true, false}) {
    svg::LineChart chart;
    chart.title = categorical ? "prevalence of important dummies" : "mean of important numerical features";
    chart.x_label = "time";
    chart.y_label = categorical ? "proportion" : "mean";
    chart.x_ticks = r.time_labels;
    for (std::size_t f = 0; f < r.prevalence.features.size(); ++f)
      if (r.prevalence.categorical[f] == categorical)
        chart.series.push_back(
            {r.prevalence.features[f], {}, r.prevalence.values[f], is_highlighted(r, r.prevalence.features[f]), false});
    put(categorical ? "prevalence.svg" : "numerical_means.svg", svg::render(chart));
  }
  {
    svg::LineChart chart;
    chart.title = "max drop after deployment";
    chart.x_label = "simulated deployment date";
    chart.y_label = "max drop";
    chart.x_ticks = r.time_labels;
    std::map<std::string, svg::Series> series;
    for (const auto& d : r.drops) {
      auto& s = series[d.regime];
      s.name = d.regime;
      s.x.push_back(d.t_star - 1);
      s.y.push_back(d.defined ? d.drop : kNaN);
    }
    for (auto& [name, s] : series) chart.series.push_back(std::move(s));
    put("max_drop.svg", svg::render(chart));
  }
  put("missingness.svg",
      svg::render(svg::Heatmap{"missing fraction per column and time", r.missingness_columns, r.time_labels,
                               r.missingness}));
  return written;
}

std::vector<fs::path> emit_run_plots(const std::vector<EvalRecord>& records,
                                     const std::vector<EvalRecord>& all_period, const engine::StalenessCurve* curve,
                                     const std::vector<std::string>& time_labels, models::Family family,
                                     engine::MetricKind metric, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  std::vector<fs::path> written;
  const std::string metric_name = engine::to_string(metric);

  if (curve) {
    svg::LineChart chart;
    chart.title = metric_name + " - " + metric_name + "(" + models::to_string(curve->baseline_family) + " " +
                  curve->baseline_regime + ") vs staleness";
    chart.x_label = "staleness";
    chart.y_label = "delta " + metric_name;
    int max_j = 0;
    std::map<std::pair<models::Family, std::string>, svg::Series> series;
    for (const auto& p : curve->points) {
      if (p.metric != metric) continue;
      auto& s = series[{p.family, p.regime}];
      s.name = models::to_string(p.family) + " " + p.regime;
      s.x.push_back(p.staleness);
      s.y.push_back(p.n ? p.mean : kNaN);
      max_j = std::max(max_j, p.staleness);
    }
    for (int j = 0; j <= max_j; ++j) chart.x_ticks.push_back(std::to_string(j));
    for (const auto& g : curve->gray)
      if (g.grayed) chart.bands.emplace_back(g.staleness - 0.5, g.staleness + 0.5);
    for (auto& [key, s] : series) chart.series.push_back(std::move(s));
    const auto path = out_dir / ("staleness_" + file_safe(metric_name) + ".svg");
    io::write_file(path, svg::render(chart));
    written.push_back(path);
  }

  // Seed means per (regime, t*, k).
  using Key = std::tuple<std::string, int, int>;
  std::map<Key, std::pair<double, int>> means;
  for (const auto& r : records) {
    if (r.family != family || r.metric != metric || !r.defined()) continue;
    auto& m = means[{r.regime, r.t_star, r.test_time}];
    m.first += r.value.value;
    ++m.second;
  }
  std::vector<double> reference(time_labels.size(), kNaN);
  {
    std::map<int, std::pair<double, int>> ap;
    for (const auto& r : all_period)
      if (r.family == family && r.metric == metric && r.defined() && r.test_time > 0) {
        ap[r.test_time].first += r.value.value;
        ++ap[r.test_time].second;
      }
    for (const auto& [t, m] : ap)
      if (t >= 1 && t <= static_cast<int>(reference.size())) reference[t - 1] = m.first / m.second;
  }
  std::map<std::string, std::map<int, svg::Series>> fans;
  for (const auto& [key, m] : means) {
    const auto& [regime, t_star, k] = key;
    auto& s = fans[regime][t_star];
    s.name = "t*=" + time_labels.at(t_star - 1);
    s.x.push_back(k - 1);
    s.y.push_back(m.first / m.second);
  }
  for (auto& [regime, by_t] : fans) {
    svg::LineChart chart;
    chart.title = metric_name + " over time, " + models::to_string(family) + " " + regime;
    chart.x_label = "test time";
    chart.y_label = metric_name;
    chart.x_ticks = time_labels;
    if (!all_period.empty()) chart.series.push_back({"all-period", {}, reference, true, true});
    for (auto& [t, s] : by_t) chart.series.push_back(std::move(s));
    const auto path = out_dir / ("over_time_" + file_safe(regime) + ".svg");
    io::write_file(path, svg::render(chart));
    written.push_back(path);
  }
  return written;
}

}  // namespace emdot::diagnostics
