#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "emdot/config.hpp"
#include "emdot/diagnostics.hpp"
#include "emdot/engine.hpp"
#include "emdot/error.hpp"
#include "emdot/results_io.hpp"
#include "emdot/synth.hpp"

namespace emdot::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(const Error& e) {
  switch (e.error_class()) {
    case ErrorClass::Config: return kConfigError;
    case ErrorClass::Data: return kDataError;
    case ErrorClass::Runtime: return kRuntimeError;
  }
  return kRuntimeError;
}

// Runs a command body and maps failures to exit codes.
template <class F>
int guarded(const char* command, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    spdlog::error("{}: {}", command, e.what());
    return exit_code_for(e);
  } catch (const json::exception& e) {
    spdlog::error("{}: malformed JSON: {}", command, e.what());
    return kDataError;
  } catch (const std::exception& e) {
    spdlog::error("{}: {}", command, e.what());
    return kRuntimeError;
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

int resolve_jobs(const std::optional<int>& flag) {
  int jobs = 1;
  if (flag) {
    jobs = *flag;
  } else if (auto e = env("EMDOT_JOBS")) {
    try {
      jobs = std::stoi(*e);
    } catch (const std::exception&) {
      throw ConfigError("EMDOT_JOBS must be an integer, got '" + *e + "'");
    }
  }
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  return jobs;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

dataset::TemporalDataset load_dataset(const config::RunConfig& cfg) {
  spdlog::info("loading {}", cfg.dataset_path.string());
  return dataset::load_csv(cfg.dataset_path, cfg.schema, cfg.load);
}

// Staleness deltas are taken against LR all-historical when both were run.
std::pair<models::Family, std::string> baseline_of(const engine::ExperimentConfig& x) {
  const auto& fams = x.families;
  const auto family = std::find(fams.begin(), fams.end(), models::Family::LR) != fams.end() ? models::Family::LR
                                                                                           : fams.front();
  const auto& regs = x.regimes;
  const auto regime = std::find(regs.begin(), regs.end(), splitter::RegimeKind::AllHistorical) != regs.end()
                          ? splitter::RegimeKind::AllHistorical
                          : regs.front();
  return {family, splitter::to_string(regime)};
}

std::vector<std::string> time_labels_of(const dataset::TemporalDataset& data) {
  std::vector<std::string> labels;
  for (int t = 1; t <= data.num_time_points(); ++t) labels.push_back(data.time_label(t));
  return labels;
}

}  // namespace

int cmd_synth(const SynthArgs& args) {
  return guarded("synth", [&] {
    synth::DriftSpec spec;
    if (args.spec) {
      json doc;
      try {
        doc = json::parse(io::read_file(*args.spec));
      } catch (const json::parse_error& e) {
        throw ConfigError("'" + args.spec->string() + "' is not valid JSON: " + e.what());
      } catch (const IoError& e) {
        throw ConfigError(e.what());
      }
      spec = synth::spec_from_json(doc);
    } else if (args.preset == "churn") {
      spec = synth::churn_spec();
    } else {
      throw ConfigError("unknown preset '" + args.preset + "'");
    }
    if (args.seed) spec.seed = *args.seed;
    synth::validate(spec);

    const auto generated = synth::generate(spec);
    make_dir(args.out);
    io::write_file(args.out / "data.csv", generated.csv);
    io::write_file(args.out / "schema.json", generated.schema.dump(2) + "\n");
    io::write_file(args.out / "manifest.json", generated.manifest.dump(2) + "\n");
    const json run{{"dataset", generated.schema}, {"output_dir", "results"}};
    io::write_file(args.out / "config.json", run.dump(2) + "\n");
    spdlog::info("wrote {} rows over {} time points to {}", generated.data.num_rows(),
                 generated.data.num_time_points(), args.out.string());
    return kOk;
  });
}

int cmd_run(const RunArgs& args) {
  return guarded("run", [&] {
    auto cfg = config::load_run_config(args.config);
    if (args.out)
      cfg.output_dir = *args.out;
    else if (auto e = env("EMDOT_OUT"))
      cfg.output_dir = *e;
    if (args.seed) cfg.experiment.master_seed = *args.seed;
    const int jobs = resolve_jobs(args.jobs);

    const auto data = load_dataset(cfg);
    engine::validate(cfg.experiment, data);

    engine::RunOptions options;
    options.jobs = jobs;
    spdlog::info("running {} EMDOT records on {} job(s)",
                 engine::expected_record_count(cfg.experiment, data.num_time_points()), jobs);
    auto emdot = engine::run_emdot(cfg.experiment, data, options);
    engine::RunResult all_period;
    if (cfg.all_period) all_period = engine::run_all_period(cfg.experiment, data, options);

    const auto [baseline_family, baseline_regime] = baseline_of(cfg.experiment);
    const auto curve = engine::aggregate_by_staleness(emdot.records, emdot.train_rows_per_time, cfg.experiment.window,
                                                      baseline_family, baseline_regime);

    std::vector<engine::CellModel> models = std::move(emdot.models);
    models.insert(models.end(), std::make_move_iterator(all_period.models.begin()),
                  std::make_move_iterator(all_period.models.end()));

    std::vector<engine::EvalRecord> flagged;
    for (const auto* list : {&emdot.records, &all_period.records})
      for (const auto& r : *list)
        if (!r.flag.empty()) flagged.push_back(r);

    const auto hash = config::config_hash(cfg);
    json summary{{"format", "emdot.summary"},
                 {"version", 1},
                 {"config_hash", hash},
                 {"master_seed", cfg.experiment.master_seed},
                 {"config", config::to_json(cfg, false)},
                 {"time_labels", time_labels_of(data)},
                 {"record_count", emdot.records.size()},
                 {"flagged_records", flagged.size()},
                 {"train_rows_per_time", emdot.train_rows_per_time},
                 {"summary", io::to_json(engine::summarize(emdot.records))},
                 {"all_period_summary", io::to_json(engine::summarize(all_period.records))},
                 {"staleness_curve", io::to_json(curve)},
                 {"notes",
                  {{"staleness_mean", "mean and std over every (t*, seed) pair at a staleness"},
                   {"summary_std", "population std over seeds"}}}};

    const auto& out = cfg.output_dir;
    make_dir(out);
    io::write_file(out / "records.csv", io::records_to_csv(emdot.records));
    io::write_file(out / "all_period.csv", io::records_to_csv(all_period.records));
    io::write_file(out / "summary.json", summary.dump(2) + "\n");
    io::write_file(out / "models.json", io::to_json(models).dump() + "\n");
    if (!flagged.empty()) io::write_file(out / "flagged.csv", io::records_to_csv(flagged));
    const json manifest{{"format", "emdot.manifest"},
                        {"version", 1},
                        {"created_at", utc_timestamp()},
                        {"config_hash", hash},
                        {"master_seed", cfg.experiment.master_seed},
                        {"jobs", jobs},
                        {"resolved_config", config::to_json(cfg)},
                        {"files", {"records.csv", "all_period.csv", "summary.json", "models.json"}}};
    io::write_file(out / "manifest.json", manifest.dump(2) + "\n");
    spdlog::info("wrote results to {}", out.string());

    const std::size_t total = emdot.records.size() + all_period.records.size();
    if (total > 0 && flagged.size() == total) {
      spdlog::error("every record is flagged; see {}", (out / "flagged.csv").string());
      return static_cast<int>(kRuntimeError);
    }
    if (!flagged.empty()) spdlog::warn("{} flagged records listed in {}", flagged.size(), (out / "flagged.csv").string());
    return static_cast<int>(kOk);
  });
}

int cmd_report(const ReportArgs& args) {
  return guarded("report", [&] {
    const auto& dir = args.results;
    config::RunConfig cfg;
    json summary;
    std::vector<engine::EvalRecord> records, all_period;
    std::vector<engine::CellModel> models;
    try {
      const auto manifest = json::parse(io::read_file(dir / "manifest.json"));
      cfg = config::parse_run_config(manifest, fs::absolute(dir));
      summary = json::parse(io::read_file(dir / "summary.json"));
      records = io::read_records_csv(dir / "records.csv");
      all_period = io::read_records_csv(dir / "all_period.csv");
      models = io::cell_models_from_json(json::parse(io::read_file(dir / "models.json")));
    } catch (const json::exception& e) {
      throw IoError("corrupt results bundle in '" + dir.string() + "': " + e.what());
    } catch (const ConfigError& e) {
      throw IoError("corrupt manifest in '" + dir.string() + "': " + e.what());
    }
    if (args.config) {
      json doc;
      try {
        doc = json::parse(io::read_file(*args.config));
      } catch (const json::parse_error& e) {
        throw ConfigError("'" + args.config->string() + "' is not valid JSON: " + e.what());
      } catch (const IoError& e) {
        throw ConfigError(e.what());
      }
      cfg.diagnostics = diagnostics::config_from_json(doc.contains("diagnostics") ? doc.at("diagnostics") : doc);
    }

    const auto data = load_dataset(cfg);
    std::vector<double> train_rows;
    try {
      train_rows = summary.at("train_rows_per_time").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw IoError("corrupt summary.json: " + std::string(e.what()));
    }
    if (static_cast<int>(train_rows.size()) != data.num_time_points())
      throw IoError("summary.json does not match the dataset's time points");

    const fs::path out = args.out ? *args.out : dir / "report";
    const auto report = diagnostics::build_report(data, records, models, cfg.diagnostics);
    auto written = diagnostics::emit_report(report, out);

    const auto [baseline_family, baseline_regime] = baseline_of(cfg.experiment);
    const auto curve = engine::aggregate_by_staleness(records, train_rows, cfg.experiment.window, baseline_family,
                                                      baseline_regime);
    for (auto metric : cfg.experiment.metrics) {
      auto plots = diagnostics::emit_run_plots(records, all_period, &curve, report.time_labels,
                                               cfg.diagnostics.family, metric, out);
      written.insert(written.end(), plots.begin(), plots.end());
    }
    spdlog::info("wrote {} report files to {}", written.size(), out.string());
    return static_cast<int>(kOk);
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"EMDOT temporal backtesting"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  SynthArgs synth;
  std::string spec_path;
  std::uint64_t synth_seed = 0;
  auto* s = app.add_subcommand("synth", "Generate a synthetic drift dataset");
  s->add_option("--config", spec_path, "Drift spec JSON (default: built-in preset)");
  s->add_option("--preset", synth.preset, "Built-in spec when no --config is given")->check(CLI::IsMember({"churn"}));
  s->add_option("--out", synth.out, "Output directory");
  auto* synth_seed_opt = s->add_option("--seed", synth_seed, "Override the spec seed");

  RunArgs run;
  std::string run_out;
  int jobs = 1;
  std::uint64_t run_seed = 0;
  auto* r = app.add_subcommand("run", "Run an experiment config");
  r->add_option("--config", run.config, "Run config JSON or a previous manifest.json")->required();
  auto* run_out_opt = r->add_option("--out", run_out, "Output directory (env EMDOT_OUT)");
  auto* jobs_opt = r->add_option("--jobs", jobs, "Parallel cells (env EMDOT_JOBS)");
  auto* run_seed_opt = r->add_option("--seed", run_seed, "Override the master seed");

  ReportArgs report;
  std::string report_config, report_out;
  auto* p = app.add_subcommand("report", "Build diagnostics from a results directory");
  p->add_option("results", report.results, "Results directory written by run")->required();
  auto* report_config_opt = p->add_option("--config", report_config, "Diagnostics config JSON");
  auto* report_out_opt = p->add_option("--out", report_out, "Output directory (default: <results>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? static_cast<int>(kOk) : static_cast<int>(kConfigError);
  }
  if (!spdlog::get("emdot")) spdlog::set_default_logger(spdlog::stderr_color_mt("emdot"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  if (s->parsed()) {
    if (!spec_path.empty()) synth.spec = spec_path;
    if (*synth_seed_opt) synth.seed = synth_seed;
    return cmd_synth(synth);
  }
  if (r->parsed()) {
    if (*run_out_opt) run.out = run_out;
    if (*jobs_opt) run.jobs = jobs;
    if (*run_seed_opt) run.seed = run_seed;
    return cmd_run(run);
  }
  if (*report_config_opt) report.config = report_config;
  if (*report_out_opt) report.out = report_out;
  return cmd_report(report);
}

}  // namespace emdot::cli
