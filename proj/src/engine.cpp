#include "emdot/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include <omp.h>
#include <spdlog/spdlog.h>

#include "emdot/error.hpp"
#include "emdot/rng.hpp"

namespace emdot::engine {

using models::Family;
using splitter::RegimeKind;

std::string to_string(MetricKind m) {
  switch (m) {
    case MetricKind::AUROC: return "AUROC";
    case MetricKind::AUPRC: return "AUPRC";
    case MetricKind::WeightedAUROC: return "WeightedAUROC";
  }
  return "?";
}

MetricKind parse_metric(const std::string& text) {
  if (text == "AUROC") return MetricKind::AUROC;
  if (text == "AUPRC") return MetricKind::AUPRC;
  if (text == "WeightedAUROC") return MetricKind::WeightedAUROC;
  throw ConfigError("unknown metric '" + text + "'");
}

void validate(const ExperimentConfig& config, const dataset::TemporalDataset& data) {
  splitter::validate(config.ratios);
  const int T = data.num_time_points();
  if (config.n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
  if (config.window < 1 || config.window > T)
    throw ConfigError("window " + std::to_string(config.window) + " must lie in [1, T=" + std::to_string(T) + "]");
  if (config.regimes.empty()) throw ConfigError("no regimes configured");
  if (config.families.empty()) throw ConfigError("no model families configured");
  if (config.metrics.empty()) throw ConfigError("no metrics configured");
  for (auto f : config.families) {
    for (const auto& spec : config.grid.of(f)) {
      if (models::family_of(spec) != f) throw ConfigError("grid for " + models::to_string(f) + " has foreign entries");
      models::validate(spec);
    }
  }
  if (!config.target.empty()) (void)data.label_index(config.target);
}

std::uint64_t plan_seed(std::uint64_t master, int seed_index) {
  return hash_combine(hash_combine(master, 0x91a7ULL), static_cast<std::uint64_t>(seed_index));
}

std::uint64_t fit_seed(std::uint64_t master, int seed_index, int t_star, Family family) {
  std::uint64_t h = hash_combine(master, 0xf17ULL);
  h = hash_combine(h, static_cast<std::uint64_t>(seed_index));
  h = hash_combine(h, static_cast<std::uint64_t>(t_star));
  return hash_combine(h, static_cast<std::uint64_t>(family));
}

std::size_t expected_record_count(const ExperimentConfig& config, int T) {
  std::size_t evaluations = 0;
  for (int t = config.window; t <= T; ++t) evaluations += static_cast<std::size_t>(T - t + 1);
  return static_cast<std::size_t>(config.n_seeds) * config.regimes.size() * config.families.size() * evaluations *
         config.metrics.size();
}

namespace {

struct TestSlice {
  int test_time;
  int staleness;
  dataset::RowSet rows;
};

struct CellInput {
  int seed_index = 0;
  std::string regime;
  Family family = Family::LR;
  int t_star = 0;
  std::uint64_t seed = 0;
  dataset::RowSet train;
  dataset::RowSet val;
  std::vector<TestSlice> tests;
};

struct CellOutput {
  std::vector<EvalRecord> records;
  std::vector<CellModel> models;
  std::optional<CellTrace> trace;
  bool flagged = false;
};

struct Context {
  const ExperimentConfig& config;
  const dataset::TemporalDataset& data;
  std::size_t target;
  std::vector<std::size_t> labels;  // label columns that need a model
  bool keep_traces;
  bool keep_models;
};

CellOutput evaluate_cell(const Context& ctx, const CellInput& in) {
  CellOutput out;
  const auto& data = ctx.data;
  std::string failure;  // non-empty: no usable model for the target
  std::vector<std::optional<models::TrainedModel>> fitted(data.labels().size());
  std::vector<std::string> label_flags(data.labels().size());
  bool fallback = false;
  std::optional<dataset::PreprocessorState> state;

  try {
    if (in.train.empty()) {
      failure = kFlagEmptyTrain;
    } else {
      state = dataset::fit_preprocessor(data, in.train);
      const auto Xtr = dataset::transform(data, in.train, *state);
      const auto Xval = dataset::transform(data, in.val, *state);
      for (auto l : ctx.labels) {
        try {
          auto result = models::grid_search(in.family, ctx.config.grid, Xtr, Xtr.labels[l], Xval, Xval.labels[l],
                                            in.seed);
          fallback = fallback || result.fallback;
          fitted[l] = std::move(result.model);
        } catch (const DegenerateLabelError&) {
          label_flags[l] = kFlagDegenerateTrain;
        } catch (const GridError&) {
          label_flags[l] = kFlagGridError;
        }
      }
      if (!fitted[ctx.target] && failure.empty()) {
        failure = label_flags[ctx.target].empty() ? kFlagCellError : label_flags[ctx.target];
      }
    }
  } catch (const std::exception& e) {
    spdlog::error("cell {} {} seed {} t*={} failed: {}", in.regime, models::to_string(in.family), in.seed_index,
                  in.t_star, e.what());
    failure = kFlagCellError;
    for (auto& f : fitted) f.reset();
  }

  std::string target_hp = "{}";
  if (fitted[ctx.target]) target_hp = models::hyperparams_json(fitted[ctx.target]->spec).dump();
  nlohmann::json all_hp = nlohmann::json::object();
  for (auto l : ctx.labels)
    if (fitted[l]) all_hp[data.labels()[l].name] = models::hyperparams_json(fitted[l]->spec);

  for (const auto& slice : in.tests) {
    dataset::FeatureMatrix Xtest;
    std::vector<std::optional<std::vector<double>>> scores(data.labels().size());
    if (state && !slice.rows.empty()) {
      Xtest = dataset::transform(data, slice.rows, *state);
      for (auto l : ctx.labels)
        if (fitted[l]) scores[l] = models::predict_scores(*fitted[l], Xtest);
    }
    for (auto metric : ctx.config.metrics) {
      EvalRecord rec;
      rec.regime = in.regime;
      rec.family = in.family;
      rec.seed = in.seed_index;
      rec.t_star = in.t_star;
      rec.test_time = slice.test_time;
      rec.staleness = slice.staleness;
      rec.metric = metric;
      rec.n_test = slice.rows.size();
      if (metric == MetricKind::WeightedAUROC) {
        rec.hyperparams = all_hp.dump();
        std::vector<std::vector<double>> s;
        std::vector<std::vector<std::uint8_t>> y;
        for (auto l : ctx.labels) {
          if (!scores[l]) continue;
          s.push_back(*scores[l]);
          y.push_back(Xtest.labels[l]);
        }
        if (!s.empty()) rec.value = metrics::weighted_multilabel_auroc(s, y);
        if (s.empty()) rec.flag = failure.empty() ? kFlagDegenerateTrain : failure;
      } else {
        rec.hyperparams = target_hp;
        if (scores[ctx.target]) {
          const auto& y = Xtest.labels[ctx.target];
          rec.value = metric == MetricKind::AUROC ? metrics::auroc(*scores[ctx.target], y)
                                                  : metrics::auprc(*scores[ctx.target], y);
        } else if (!failure.empty()) {
          rec.flag = failure;
        } else {
          rec.flag = slice.rows.empty() ? kFlagSingleClass : kFlagCellError;
        }
      }
      if (rec.flag.empty()) {
        if (rec.value.flag == metrics::Flag::SingleClass || !rec.value.defined())
          rec.flag = kFlagSingleClass;
        else if (fallback)
          rec.flag = kFlagValidationFallback;
      }
      out.records.push_back(std::move(rec));
    }
  }

  out.flagged = !failure.empty();
  if (ctx.keep_models) {
    for (auto l : ctx.labels)
      if (fitted[l]) out.models.push_back({in.regime, in.family, in.seed_index, in.t_star, data.labels()[l].name, *fitted[l]});
  }
  if (ctx.keep_traces) {
    CellTrace trace;
    trace.regime = in.regime;
    trace.family = in.family;
    trace.seed = in.seed_index;
    trace.t_star = in.t_star;
    trace.train = in.train;
    trace.val = in.val;
    if (state) trace.preprocessor_rows = in.train;
    for (const auto& slice : in.tests) trace.test[slice.test_time] = slice.rows;
    out.trace = std::move(trace);
  }
  return out;
}

/// Serial reference loop.
std::vector<CellOutput> run_cells_serial(const Context& ctx, const std::vector<CellInput>& cells) {
  std::vector<CellOutput> outputs;
  outputs.reserve(cells.size());
  for (const auto& cell : cells) outputs.push_back(evaluate_cell(ctx, cell));
  return outputs;
}

/// OpenMP loop over independent cells. Each thread writes only its own slot,
/// so the merged output matches the serial loop exactly.
std::vector<CellOutput> run_cells_parallel(const Context& ctx, const std::vector<CellInput>& cells, int jobs) {
  std::vector<CellOutput> outputs(cells.size());
  const auto count = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::ptrdiff_t i = 0; i < count; ++i) outputs[i] = evaluate_cell(ctx, cells[i]);
  return outputs;
}

Context make_context(const ExperimentConfig& config, const dataset::TemporalDataset& data, const RunOptions& options) {
  Context ctx{config, data, config.target.empty() ? 0 : data.label_index(config.target), {}, options.keep_traces,
              options.keep_models};
  const bool weighted = std::find(config.metrics.begin(), config.metrics.end(), MetricKind::WeightedAUROC) !=
                        config.metrics.end();
  if (weighted) {
    ctx.labels.resize(data.labels().size());
    std::iota(ctx.labels.begin(), ctx.labels.end(), std::size_t{0});
  } else {
    ctx.labels = {ctx.target};
  }
  return ctx;
}

RunResult collect(std::vector<CellOutput> outputs) {
  RunResult result;
  for (auto& out : outputs) {
    result.flagged_cells += out.flagged;
    std::move(out.records.begin(), out.records.end(), std::back_inserter(result.records));
    std::move(out.models.begin(), out.models.end(), std::back_inserter(result.models));
    if (out.trace) result.traces.push_back(std::move(*out.trace));
  }
  return result;
}

std::vector<CellOutput> dispatch(const Context& ctx, const std::vector<CellInput>& cells, int jobs) {
  return jobs <= 1 ? run_cells_serial(ctx, cells) : run_cells_parallel(ctx, cells, jobs);
}

}  // namespace

RunResult run_emdot(const ExperimentConfig& config, const dataset::TemporalDataset& data, const RunOptions& options) {
  validate(config, data);
  const int T = data.num_time_points();
  const Context ctx = make_context(config, data, options);

  std::vector<double> train_rows(T, 0.0);
  std::vector<CellInput> cells;
  for (int s = 0; s < config.n_seeds; ++s) {
    const auto plan = splitter::build_split_plan(data, config.ratios, plan_seed(config.master_seed, s), config.grouped);
    for (int t = 1; t <= T; ++t) train_rows[t - 1] += static_cast<double>(plan.at(t).train.size());
    for (auto regime : config.regimes) {
      const splitter::RegimeSpec spec{regime, config.window};
      for (auto family : config.families) {
        for (int t_star = config.window; t_star <= T; ++t_star) {
          CellInput cell;
          cell.seed_index = s;
          cell.regime = splitter::to_string(regime);
          cell.family = family;
          cell.t_star = t_star;
          cell.seed = fit_seed(config.master_seed, s, t_star, family);
          auto tv = splitter::regime_train_val(t_star, spec, plan);
          cell.train = std::move(tv.train);
          cell.val = std::move(tv.val);
          auto ts = splitter::test_sets(t_star, plan, data);
          cell.tests.push_back({t_star, 0, std::move(ts.in_period)});
          for (auto& [k, rows] : ts.out_of_period) cell.tests.push_back({k, k - t_star, std::move(rows)});
          cells.push_back(std::move(cell));
        }
      }
    }
  }

  RunResult result = collect(dispatch(ctx, cells, options.jobs));
  result.train_rows_per_time = std::move(train_rows);
  if (result.flagged_cells > 0) spdlog::warn("{} of {} cells flagged", result.flagged_cells, cells.size());
  return result;
}

RunResult run_all_period(const ExperimentConfig& config, const dataset::TemporalDataset& data,
                         const RunOptions& options) {
  validate(config, data);
  const int T = data.num_time_points();
  const Context ctx = make_context(config, data, options);

  std::vector<double> train_rows(T, 0.0);
  std::vector<CellInput> cells;
  for (int s = 0; s < config.n_seeds; ++s) {
    const auto plan = splitter::build_split_plan(data, config.ratios, plan_seed(config.master_seed, s), config.grouped);
    for (int t = 1; t <= T; ++t) train_rows[t - 1] += static_cast<double>(plan.at(t).train.size());
    auto split = splitter::all_period_split(plan);
    for (auto family : config.families) {
      CellInput cell;
      cell.seed_index = s;
      cell.regime = kAllPeriodRegime;
      cell.family = family;
      cell.t_star = 0;
      cell.seed = fit_seed(config.master_seed, s, 0, family);
      cell.train = split.train;
      cell.val = split.val;
      cell.tests.push_back({0, 0, split.test});
      for (int t = 1; t <= T; ++t) cell.tests.push_back({t, 0, plan.at(t).test});
      cells.push_back(std::move(cell));
    }
  }
  RunResult result = collect(dispatch(ctx, cells, options.jobs));
  result.train_rows_per_time = std::move(train_rows);
  return result;
}

// -- aggregation --------------------------------------------------------------

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

}  // namespace

std::vector<GrayFlag> gray_flags(const std::vector<double>& train_rows_per_time, int window) {
  const int T = static_cast<int>(train_rows_per_time.size());
  std::vector<double> cumulative(T + 1, 0.0);
  for (int t = 1; t <= T; ++t) cumulative[t] = cumulative[t - 1] + train_rows_per_time[t - 1];
  std::vector<GrayFlag> flags;
  for (int j = 0; j <= T - window; ++j) {
    GrayFlag g;
    g.staleness = j;
    for (int t_star = window; t_star + j <= T; ++t_star) {
      ++g.contributing;
      const double first_window = cumulative[std::min(window, t_star)];
      if (cumulative[t_star] > 0.0 && 2.0 * first_window >= cumulative[t_star]) ++g.qualifying;
    }
    g.grayed = g.contributing > 0 && 2 * g.qualifying >= g.contributing;
    flags.push_back(g);
  }
  return flags;
}

StalenessCurve aggregate_by_staleness(const std::vector<EvalRecord>& records,
                                      const std::vector<double>& train_rows_per_time, int window,
                                      Family baseline_family, const std::string& baseline_regime) {
  using Key = std::tuple<int, int, int, MetricKind>;  // seed, t*, k, metric
  std::map<Key, const EvalRecord*> baseline;
  for (const auto& r : records)
    if (r.family == baseline_family && r.regime == baseline_regime)
      baseline[{r.seed, r.t_star, r.test_time, r.metric}] = &r;

  using GroupKey = std::tuple<Family, std::string, MetricKind, int>;
  std::map<GroupKey, std::pair<std::vector<double>, std::size_t>> groups;
  std::vector<std::string> holes;
  for (const auto& r : records) {
    if (r.regime == kAllPeriodRegime) continue;
    auto it = baseline.find({r.seed, r.t_star, r.test_time, r.metric});
    if (it == baseline.end()) {
      if (holes.size() < 10)
        holes.push_back("seed " + std::to_string(r.seed) + " t*=" + std::to_string(r.t_star) +
                        " k=" + std::to_string(r.test_time) + " " + to_string(r.metric));
      else if (holes.size() == 10)
        holes.push_back("...");
      continue;
    }
    auto& g = groups[{r.family, r.regime, r.metric, r.staleness}];
    if (r.defined() && it->second->defined())
      g.first.push_back(r.value.value - it->second->value.value);
    else
      ++g.second;
  }
  if (!holes.empty()) {
    std::string msg = "missing baseline (" + models::to_string(baseline_family) + ", " + baseline_regime + ") for:";
    for (const auto& h : holes) msg += " [" + h + "]";
    throw AggregationError(msg);
  }

  StalenessCurve curve;
  curve.baseline_family = baseline_family;
  curve.baseline_regime = baseline_regime;
  for (const auto& [key, g] : groups) {
    const auto ms = mean_std(g.first);
    curve.points.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), ms.mean, ms.std,
                            g.first.size(), g.second});
  }
  curve.gray = gray_flags(train_rows_per_time, window);
  return curve;
}

SummaryTable summarize(const std::vector<EvalRecord>& records) {
  using Key = std::tuple<Family, std::string, MetricKind, int, int>;
  std::map<Key, std::pair<std::vector<double>, std::size_t>> groups;
  for (const auto& r : records) {
    auto& g = groups[{r.family, r.regime, r.metric, r.t_star, r.test_time}];
    if (r.defined()) g.first.push_back(r.value.value); else ++g.second;
  }
  SummaryTable table;
  for (const auto& [key, g] : groups) {
    const auto ms = mean_std(g.first);
    SummaryRow row{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), std::get<4>(key),
                   ms.mean, ms.std, g.first.size(), g.second};
    (g.first.empty() ? table.omitted : table.rows).push_back(std::move(row));
  }
  return table;
}

}  // namespace emdot::engine
