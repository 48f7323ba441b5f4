// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "../invariants.hpp"
#include "../model_checks.hpp"
#include "../oracles.hpp"
#include "../support.hpp"
#include "commands.hpp"
#include "emdot/diagnostics.hpp"
#include "emdot/engine.hpp"
#include "emdot/metrics.hpp"
#include "emdot/models.hpp"
#include "emdot/results_io.hpp"
#include "emdot/synth.hpp"

using namespace emdot;
namespace fs = std::filesystem;
using splitter::RegimeKind;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char line[512];
  std::snprintf(line, sizeof line, "%s %2d %s (%.2fs) %s", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs,
                o.detail.c_str());
  std::puts(line);
  std::fflush(stdout);
  failures += !o.pass;
}

double elapsed(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome metric_oracles() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng.below(199);
    const int levels = 1 + static_cast<int>(rng.below(12));
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = static_cast<double>(rng.below(levels)) / levels;
      y[k] = rng.bernoulli(0.4);
    }
    y[0] = 1;
    y[1] = 0;
    worst = std::max(worst, std::abs(metrics::auroc(s, y).value - oracle::pairwise_auroc(s, y)));
    worst = std::max(worst, std::abs(metrics::auprc(s, y).value - oracle::sweep_auprc(s, y)));
  }
  const double secs = elapsed(start);
  return {worst < 1e-12 && secs < 5.0, fmt("max |diff| %.3g, %.2f s", worst, secs)};
}

Outcome split_invariants() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(202);
  for (int i = 0; i < 100; ++i) {
    const int T = 2 + static_cast<int>(rng.below(11));
    std::vector<int> per_t(T);
    for (auto& n : per_t) n = 3 + static_cast<int>(rng.below(78));
    const bool grouped = rng.bernoulli(0.5);
    const auto data = test::toy_dataset(per_t, rng.next(), grouped);
    splitter::SplitRatios ratios;
    ratios.train = 0.5 + 0.3 * rng.uniform();
    ratios.val = (1.0 - ratios.train) * (0.2 + 0.6 * rng.uniform());
    ratios.test = 1.0 - ratios.train - ratios.val;
    const auto plan = splitter::build_split_plan(data, ratios, rng.next(), grouped);
    const int W = 1 + static_cast<int>(rng.below(T));
    auto problem = test::check_plan(data, plan);
    if (problem.empty()) problem = test::check_regimes(plan, W);
    if (!problem.empty()) return {false, "config " + std::to_string(i) + ": " + problem};
  }
  const double secs = elapsed(start);
  return {secs < 10.0, fmt("100 configs, %.2f s", secs)};
}

engine::ExperimentConfig quick_config() {
  engine::ExperimentConfig c;
  c.n_seeds = 2;
  c.grid.candidates[models::Family::LR] = {models::LrParams{0.1}, models::LrParams{1.0}};
  return c;
}

Outcome regime_equivalence() {
  auto spec = synth::churn_spec();
  spec.T = 6;
  spec.n_t = 300;
  for (auto& b : spec.blocks) {
    b.t_on = std::min(b.t_on, 6);
    b.t_off = std::min(b.t_off, 6);
  }
  const auto data = synth::generate(spec).data;
  auto c = quick_config();
  c.window = 6;
  c.families = {models::Family::LR, models::Family::GBDT, models::Family::MLP};
  c.grid.candidates[models::Family::GBDT] = {models::GbdtParams{10, 3, 0.1}};
  c.grid.candidates[models::Family::MLP] = {models::MlpParams{3, 0.01}};
  c.regimes = {RegimeKind::SlidingWindow};
  const auto sw = engine::run_emdot(c, data).records;
  c.regimes = {RegimeKind::AllHistorical};
  auto ah = engine::run_emdot(c, data).records;
  for (auto& r : ah) r.regime = "SlidingWindow";
  const bool same = io::records_to_csv(sw) == io::records_to_csv(ah);
  return {same && !sw.empty(), std::to_string(sw.size()) + " records each"};
}

Outcome loop_arithmetic() {
  const auto data = test::toy_dataset(std::vector<int>(8, 80), 3);
  engine::ExperimentConfig c;
  c.n_seeds = 2;
  c.window = 4;
  c.regimes = {RegimeKind::SlidingWindow, RegimeKind::AllHistorical, RegimeKind::AllHistoricalSubsampled};
  c.families = {models::Family::LR, models::Family::GBDT};
  c.metrics = {engine::MetricKind::AUROC, engine::MetricKind::AUPRC};
  c.grid.candidates[models::Family::LR] = {models::LrParams{1.0}};
  c.grid.candidates[models::Family::GBDT] = {models::GbdtParams{5, 2, 0.1}};
  std::size_t sum = 0;
  for (int t = 4; t <= 8; ++t) sum += 8 - t + 1;
  const std::size_t expected = 2 * 3 * 2 * sum * 2;
  const auto got = engine::run_emdot(c, data).records.size();
  return {got == expected, std::to_string(got) + " records, expected " + std::to_string(expected)};
}

Outcome leakage_audit() {
  auto spec = synth::churn_spec();
  spec.n_t = 300;
  const auto data = synth::generate(spec).data;
  auto c = quick_config();
  c.grouped = true;
  c.regimes = {RegimeKind::SlidingWindow, RegimeKind::AllHistorical, RegimeKind::AllHistoricalSubsampled};
  engine::RunOptions o;
  o.keep_traces = true;
  o.keep_models = false;
  const auto run = engine::run_emdot(c, data, o);
  std::size_t compared = 0;
  std::vector<char> role(data.num_rows());
  for (const auto& tr : run.traces) {
    std::fill(role.begin(), role.end(), 0);
    for (auto r : tr.train) {
      if (data.time_of(r) > tr.t_star) return {false, "training row after t* at t*=" + std::to_string(tr.t_star)};
      role[r] = 1;
    }
    for (auto r : tr.val) {
      if (role[r]) return {false, "row in train and val"};
      role[r] = 2;
    }
    if (tr.preprocessor_rows != tr.train) return {false, "preprocessor fitted beyond the training rows"};
    for (const auto& [k, rows] : tr.test)
      for (auto r : rows) {
        ++compared;
        if (role[r]) return {false, "test row shared with train/val at t*=" + std::to_string(tr.t_star)};
        if (data.time_of(r) != k) return {false, "test row from the wrong time point"};
      }
  }
  return {!run.traces.empty(), std::to_string(run.traces.size()) + " cells, " + std::to_string(compared) +
                                   " test rows checked"};
}

Outcome gradient_checks() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(606);
  bool ok = true;
  double worst_abs = 0.0, worst_rel = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto in = test::random_instance(5 + rng.below(40), 1 + rng.below(6), rng);
    const double C = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
    for (const auto& gap : {test::lr_gradient_gap(in, C, rng), test::mlp_gradient_gap(in, 3 + rng.below(3), rng.next())}) {
      worst_abs = std::max(worst_abs, gap.max_abs);
      worst_rel = std::max(worst_rel, gap.max_rel);
      ok = ok && (gap.max_abs < 1e-4 || gap.max_rel < 1e-3);
    }
  }
  const double secs = elapsed(start);
  return {ok && secs < 10.0, fmt("worst abs %.2g, worst rel %.2g, %.2f s", worst_abs, worst_rel, secs)};
}

// Shared churn run for criteria 7 and 8.
struct ChurnRun {
  engine::RunResult emdot;
  engine::RunResult all_period;
  double seconds = 0.0;
  int T = 0;
  int W = 0;
};

const ChurnRun& churn_run() {
  static const ChurnRun run = [] {
    const auto start = std::chrono::steady_clock::now();
    const auto data = synth::generate(synth::churn_spec()).data;
    const engine::ExperimentConfig c;
    engine::RunOptions o;
    o.keep_models = false;
    ChurnRun r;
    r.emdot = engine::run_emdot(c, data, o);
    r.all_period = engine::run_all_period(c, data, o);
    r.seconds = elapsed(start);
    r.T = data.num_time_points();
    r.W = c.window;
    return r;
  }();
  return run;
}

// Seed-mean LR AUROC keyed by (regime, t*, k).
std::map<std::tuple<std::string, int, int>, double> seed_means(const std::vector<engine::EvalRecord>& records) {
  std::map<std::tuple<std::string, int, int>, std::pair<double, int>> acc;
  for (const auto& r : records) {
    if (r.family != models::Family::LR || r.metric != engine::MetricKind::AUROC || !r.defined()) continue;
    auto& [sum, n] = acc[{r.regime, r.t_star, r.test_time}];
    sum += r.value.value;
    ++n;
  }
  std::map<std::tuple<std::string, int, int>, double> out;
  for (const auto& [key, v] : acc) out[key] = v.first / v.second;
  return out;
}

Outcome churn_robustness() {
  const auto& run = churn_run();
  const auto m = seed_means(run.emdot.records);
  const double rise = m.at({"SlidingWindow", 5, 5}) - m.at({"SlidingWindow", 4, 4});
  const auto drops = diagnostics::max_auroc_drop(run.emdot.records, models::Family::LR, engine::MetricKind::AUROC);
  const double sw = diagnostics::mean_drop(drops, "SlidingWindow");
  const double ah = diagnostics::mean_drop(drops, "AllHistorical");
  const bool ok = rise >= 0.05 && sw - ah >= 0.05 && run.seconds < 60.0;
  return {ok, fmt("rise %.3f, drop gap %.3f, ", rise, sw - ah) + fmt("%.1f s", run.seconds)};
}

Outcome all_period_optimism() {
  const auto& run = churn_run();
  const auto m = seed_means(run.emdot.records);
  std::map<int, std::pair<double, int>> ap;
  for (const auto& r : run.all_period.records)
    if (r.test_time > 0 && r.metric == engine::MetricKind::AUROC && r.defined()) {
      ap[r.test_time].first += r.value.value;
      ++ap[r.test_time].second;
    }
  int hits = 0, points = 0;
  for (int t = run.W + 1; t <= run.T; ++t) {
    double best = -1.0;
    for (const auto& [key, v] : m)
      if (std::get<2>(key) == t && std::get<1>(key) < t) best = std::max(best, v);
    const double all = ap.at(t).first / ap.at(t).second;
    hits += all >= best;
    ++points;
  }
  const double frac = static_cast<double>(hits) / points;
  return {frac >= 0.7, fmt("all-period >= best deployable at %.3f of time points", frac)};
}

Outcome graying_rule() {
  const auto flags = engine::gray_flags(std::vector<double>(8, 100.0), 4);
  const auto it = std::find_if(flags.begin(), flags.end(), [](const auto& g) { return g.staleness == 4; });
  std::string grayed;
  for (const auto& g : flags)
    if (g.grayed) grayed += " " + std::to_string(g.staleness);
  return {it != flags.end() && it->grayed, "grayed stalenesses:" + grayed};
}

Outcome determinism() {
  const auto dir = test::scratch_dir("acceptance_jobs");
  auto spec = synth::churn_spec();
  spec.n_t = 200;
  std::ofstream(dir / "spec.json") << synth::to_json(spec).dump(2);
  cli::SynthArgs sa;
  sa.spec = dir / "spec.json";
  sa.out = dir / "data";
  if (cli::cmd_synth(sa) != cli::kOk) return {false, "synth failed"};
  auto cfg = nlohmann::json::parse(slurp(dir / "data" / "config.json"));
  cfg["experiment"] = {
      {"n_seeds", 2},
      {"families", {"LR", "GBDT", "MLP"}},
      {"regimes", {"SlidingWindow", "AllHistorical", "AllHistoricalSubsampled"}},
      {"metrics", {"AUROC", "AUPRC"}},
      {"grids",
       {{"LR", {{{"C", 1.0}}}},
        {"GBDT", {{{"n_estimators", 10}, {"max_depth", 3}, {"learning_rate", 0.1}}}},
        {"MLP", {{{"hidden_layer_size", 3}, {"learning_rate_init", 0.01}}}}}}};
  std::ofstream(dir / "data" / "run.json") << cfg.dump(2);
  for (int jobs : {1, 4}) {
    cli::RunArgs ra;
    ra.config = dir / "data" / "run.json";
    ra.out = dir / ("jobs" + std::to_string(jobs));
    ra.jobs = jobs;
    if (cli::cmd_run(ra) != cli::kOk) return {false, "run failed with jobs=" + std::to_string(jobs)};
  }
  const bool records = slurp(dir / "jobs1" / "records.csv") == slurp(dir / "jobs4" / "records.csv");
  const bool summary = slurp(dir / "jobs1" / "summary.json") == slurp(dir / "jobs4" / "summary.json");
  return {records && summary, std::string("records.csv ") + (records ? "identical" : "differs") + ", summary.json " +
                                  (summary ? "identical" : "differs")};
}

Outcome grid_fidelity() {
  const auto grid = models::HyperGrid::defaults();
  std::set<double> lr;
  for (const auto& p : grid.of(models::Family::LR)) lr.insert(std::get<models::LrParams>(p).C);
  std::set<std::tuple<int, int, double>> gbdt;
  for (const auto& p : grid.of(models::Family::GBDT)) {
    const auto& g = std::get<models::GbdtParams>(p);
    gbdt.insert({g.n_estimators, g.max_depth, g.learning_rate});
  }
  std::set<std::pair<int, double>> mlp;
  for (const auto& p : grid.of(models::Family::MLP)) {
    const auto& g = std::get<models::MlpParams>(p);
    mlp.insert({g.hidden_layer_size, g.learning_rate_init});
  }
  std::set<std::tuple<int, int, double>> want_gbdt;
  for (int n : {50, 100})
    for (int d : {3, 5})
      for (double r : {0.01, 0.1}) want_gbdt.insert({n, d, r});
  std::set<std::pair<int, double>> want_mlp;
  for (int h : {3, 5})
    for (double r : {1e-4, 1e-3, 1e-2}) want_mlp.insert({h, r});
  const bool ok = grid.of(models::Family::LR).size() == 8 && grid.of(models::Family::GBDT).size() == 8 &&
                  grid.of(models::Family::MLP).size() == 6 &&
                  lr == std::set<double>{0.01, 0.1, 1.0, 10.0, 100.0, 1000.0, 1e4, 1e5} && gbdt == want_gbdt &&
                  mlp == want_mlp;
  return {ok, std::to_string(grid.of(models::Family::LR).size()) + "/" +
                  std::to_string(grid.of(models::Family::GBDT).size()) + "/" +
                  std::to_string(grid.of(models::Family::MLP).size()) + " candidates"};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  report(1, "metric oracle equivalence", metric_oracles);
  report(2, "split and regime invariants", split_invariants);
  report(3, "W = T regime equivalence", regime_equivalence);
  report(4, "record count arithmetic", loop_arithmetic);
  report(5, "no-leakage audit", leakage_audit);
  report(6, "LR and MLP gradient checks", gradient_checks);
  report(7, "feature churn robustness", churn_robustness);
  report(8, "all-period over-optimism", all_period_optimism);
  report(9, "graying rule", graying_rule);
  report(10, "jobs-independent output", determinism);
  report(11, "default hyperparameter grids", grid_fidelity);
  return failures == 0 ? 0 : 1;
}
