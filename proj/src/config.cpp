#include "emdot/config.hpp"

#include <array>
#include <set>

#include "emdot/error.hpp"
#include "emdot/results_io.hpp"
#include "emdot/rng.hpp"

namespace emdot::config {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> names;
  for (const char* a : allowed) names.insert(a);
  for (const auto& [key, value] : obj.items())
    if (!names.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + "." + key + " is required");
  return obj.at(key);
}

template <class T>
T get_as(const json& v, const std::string& field) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(field + " has the wrong type");
  }
}

template <class T>
T optional_field(const json& obj, const char* key, const std::string& where, T fallback) {
  return obj.contains(key) ? get_as<T>(obj.at(key), where + "." + key) : fallback;
}

// Wraps parse helpers from other modules so bad names surface as config
// errors with the field path.
template <class F>
auto as_config(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

void parse_dataset(const json& d, const fs::path& base_dir, RunConfig& c) {
  check_keys(d, "dataset", {"path", "granularity", "missing_sentinels", "min_rows_per_timepoint", "schema"});
  fs::path path = get_as<std::string>(require(d, "path", "dataset"), "dataset.path");
  if (path.is_relative()) path = base_dir / path;
  c.dataset_path = path.lexically_normal();
  if (d.contains("granularity"))
    c.load.granularity = as_config("dataset.granularity", [&] {
      return dataset::parse_granularity(get_as<std::string>(d.at("granularity"), "dataset.granularity"));
    });
  if (d.contains("missing_sentinels"))
    c.load.missing_sentinels =
        get_as<std::vector<std::string>>(d.at("missing_sentinels"), "dataset.missing_sentinels");
  const auto min_rows = optional_field<long long>(d, "min_rows_per_timepoint", "dataset", 1);
  if (min_rows < 1) throw ConfigError("dataset.min_rows_per_timepoint must be >= 1");
  c.load.min_rows_per_timepoint = static_cast<std::size_t>(min_rows);

  const auto& schema = require(d, "schema", "dataset");
  if (!schema.is_array()) throw ConfigError("dataset.schema must be an array");
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const std::string where = "dataset.schema[" + std::to_string(i) + "]";
    check_keys(schema[i], where, {"name", "kind", "label_name"});
    dataset::ColumnSpec col;
    col.name = get_as<std::string>(require(schema[i], "name", where), where + ".name");
    col.kind = as_config(where + ".kind", [&] {
      return dataset::parse_column_kind(get_as<std::string>(require(schema[i], "kind", where), where + ".kind"));
    });
    if (schema[i].contains("label_name"))
      col.label_name = get_as<std::string>(schema[i].at("label_name"), where + ".label_name");
    c.schema.push_back(std::move(col));
  }
  as_config("dataset.schema", [&] {
    dataset::validate_schema(c.schema);
    return 0;
  });
}

void parse_experiment(const json& e, RunConfig& c) {
  check_keys(e, "experiment",
             {"target", "split", "window", "regimes", "families", "grids", "n_seeds", "master_seed", "metrics",
              "grouped", "all_period"});
  auto& x = c.experiment;
  x.target = optional_field<std::string>(e, "target", "experiment", "");
  if (e.contains("split")) {
    const auto& s = e.at("split");
    check_keys(s, "experiment.split", {"train", "val", "test"});
    x.ratios.train = get_as<double>(require(s, "train", "experiment.split"), "experiment.split.train");
    x.ratios.val = get_as<double>(require(s, "val", "experiment.split"), "experiment.split.val");
    x.ratios.test = get_as<double>(require(s, "test", "experiment.split"), "experiment.split.test");
  }
  splitter::validate(x.ratios);
  x.window = optional_field<int>(e, "window", "experiment", x.window);
  if (x.window < 1) throw ConfigError("experiment.window must be >= 1");
  if (e.contains("regimes")) {
    x.regimes.clear();
    for (const auto& name : get_as<std::vector<std::string>>(e.at("regimes"), "experiment.regimes"))
      x.regimes.push_back(as_config("experiment.regimes", [&] { return splitter::parse_regime(name); }));
  }
  if (e.contains("families")) {
    x.families.clear();
    for (const auto& name : get_as<std::vector<std::string>>(e.at("families"), "experiment.families"))
      x.families.push_back(as_config("experiment.families", [&] { return models::parse_family(name); }));
  }
  if (e.contains("grids")) {
    const auto& g = e.at("grids");
    check_keys(g, "experiment.grids", {"LR", "GBDT", "MLP"});
    for (const auto& [name, list] : g.items()) {
      const auto family = models::parse_family(name);
      if (!list.is_array() || list.empty())
        throw ConfigError("experiment.grids." + name + " must be a non-empty array");
      std::vector<models::ModelSpec> candidates;
      for (const auto& item : list) candidates.push_back(models::spec_from_json(family, item));
      x.grid.candidates[family] = std::move(candidates);
    }
  }
  x.n_seeds = optional_field<int>(e, "n_seeds", "experiment", x.n_seeds);
  if (x.n_seeds < 1) throw ConfigError("experiment.n_seeds must be >= 1");
  x.master_seed = optional_field<std::uint64_t>(e, "master_seed", "experiment", x.master_seed);
  if (e.contains("metrics")) {
    x.metrics.clear();
    for (const auto& name : get_as<std::vector<std::string>>(e.at("metrics"), "experiment.metrics"))
      x.metrics.push_back(as_config("experiment.metrics", [&] { return engine::parse_metric(name); }));
  }
  if (x.regimes.empty()) throw ConfigError("experiment.regimes must not be empty");
  if (x.families.empty()) throw ConfigError("experiment.families must not be empty");
  if (x.metrics.empty()) throw ConfigError("experiment.metrics must not be empty");
  x.grouped = optional_field<bool>(e, "grouped", "experiment", x.grouped);
  c.all_period = optional_field<bool>(e, "all_period", "experiment", c.all_period);
}

}  // namespace

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
  if (doc.is_object() && doc.value("format", "") == "emdot.manifest") {
    if (!doc.contains("resolved_config")) throw ConfigError("manifest lacks resolved_config");
    return parse_run_config(doc.at("resolved_config"), base_dir);
  }
  check_keys(doc, "config", {"dataset", "experiment", "diagnostics", "output_dir"});
  RunConfig c;
  parse_dataset(require(doc, "dataset", "config"), base_dir, c);
  if (doc.contains("experiment")) parse_experiment(doc.at("experiment"), c);
  if (doc.contains("diagnostics")) {
    check_keys(doc.at("diagnostics"), "diagnostics", {"k", "p", "delta", "rank_threshold", "family", "metric"});
    c.diagnostics = diagnostics::config_from_json(doc.at("diagnostics"));
  }
  if (doc.contains("output_dir")) {
    fs::path out = get_as<std::string>(doc.at("output_dir"), "output_dir");
    c.output_dir = out.is_relative() ? (base_dir / out).lexically_normal() : out;
  } else {
    c.output_dir = (base_dir / c.output_dir).lexically_normal();
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  const auto base = fs::absolute(path).parent_path();
  return parse_run_config(doc, base);
}

json to_json(const RunConfig& c, bool with_output) {
  json schema = json::array();
  for (const auto& col : c.schema) {
    json j{{"name", col.name}, {"kind", dataset::to_string(col.kind)}};
    if (col.label_name) j["label_name"] = *col.label_name;
    schema.push_back(std::move(j));
  }
  const auto& x = c.experiment;
  json regimes = json::array(), families = json::array(), metrics = json::array();
  for (auto r : x.regimes) regimes.push_back(splitter::to_string(r));
  for (auto f : x.families) families.push_back(models::to_string(f));
  for (auto m : x.metrics) metrics.push_back(engine::to_string(m));
  json grids = json::object();
  for (const auto& [family, list] : x.grid.candidates) {
    json arr = json::array();
    for (const auto& spec : list) arr.push_back(models::hyperparams_json(spec));
    grids[models::to_string(family)] = std::move(arr);
  }
  json doc{{"dataset",
            {{"path", fs::absolute(c.dataset_path).lexically_normal().string()},
             {"granularity", dataset::to_string(c.load.granularity)},
             {"missing_sentinels", c.load.missing_sentinels},
             {"min_rows_per_timepoint", c.load.min_rows_per_timepoint},
             {"schema", schema}}},
           {"experiment",
            {{"target", x.target},
             {"split", {{"train", x.ratios.train}, {"val", x.ratios.val}, {"test", x.ratios.test}}},
             {"window", x.window},
             {"regimes", regimes},
             {"families", families},
             {"grids", grids},
             {"n_seeds", x.n_seeds},
             {"master_seed", x.master_seed},
             {"metrics", metrics},
             {"grouped", x.grouped},
             {"all_period", c.all_period}}},
           {"diagnostics", diagnostics::to_json(c.diagnostics)}};
  if (with_output) doc["output_dir"] = fs::absolute(c.output_dir).lexically_normal().string();
  return doc;
}

std::string config_hash(const RunConfig& c) {
  const std::uint64_t h = hash_string(to_json(c, false).dump());
  static constexpr char hex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[15 - i] = hex[(h >> (4 * i)) & 0xf];
  return out;
}

}  // namespace emdot::config
