#include "emdot/results_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "emdot/error.hpp"

namespace emdot::io {

using engine::EvalRecord;

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf, ptr);
}

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> columns{"regime", "family",  "seed",   "t_star", "test_time", "staleness",
                                                "metric", "value",   "n_test", "n_pos",  "flag",      "hyperparams_json"};
  return columns;
}

std::string records_to_csv(const std::vector<EvalRecord>& records) {
  std::string out = csv::join(record_columns());
  out.push_back('\n');
  for (const auto& r : records) {
    out += csv::join({r.regime, models::to_string(r.family), std::to_string(r.seed), std::to_string(r.t_star),
                      std::to_string(r.test_time), std::to_string(r.staleness), engine::to_string(r.metric),
                      r.defined() ? format_double(r.value.value) : std::string(), std::to_string(r.n_test),
                      std::to_string(r.value.n_pos), r.flag, r.hyperparams});
    out.push_back('\n');
  }
  return out;
}

namespace {

long parse_long(const std::string& s, const char* what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError(std::string("records.csv: bad ") + what + " '" + s + "'");
  return v;
}

}  // namespace

std::vector<EvalRecord> records_from_csv(const std::string& text) {
  const auto rows = csv::parse(text);
  if (rows.empty() || rows.front() != record_columns()) throw IoError("records.csv: unexpected header");
  std::vector<EvalRecord> records;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != record_columns().size()) throw IoError("records.csv: row " + std::to_string(i) + " has wrong width");
    EvalRecord r;
    r.regime = f[0];
    r.family = models::parse_family(f[1]);
    r.seed = static_cast<int>(parse_long(f[2], "seed"));
    r.t_star = static_cast<int>(parse_long(f[3], "t_star"));
    r.test_time = static_cast<int>(parse_long(f[4], "test_time"));
    r.staleness = static_cast<int>(parse_long(f[5], "staleness"));
    r.metric = engine::parse_metric(f[6]);
    r.n_test = static_cast<std::size_t>(parse_long(f[8], "n_test"));
    r.value.n_pos = static_cast<std::size_t>(parse_long(f[9], "n_pos"));
    r.flag = f[10];
    r.hyperparams = f[11];
    if (!f[7].empty()) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f[7].data(), f[7].data() + f[7].size(), v);
      if (ec != std::errc()) throw IoError("records.csv: bad value '" + f[7] + "'");
      r.value.value = v;
      // n_neg is not stored; a present value implies both classes were seen.
      r.value.n_neg = r.n_test > r.value.n_pos ? r.n_test - r.value.n_pos : 1;
    } else {
      r.value.flag = metrics::Flag::SingleClass;
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<EvalRecord> read_records_csv(const std::filesystem::path& path) { return records_from_csv(read_file(path)); }

nlohmann::json to_json(const engine::SummaryTable& table) {
  auto row_json = [](const engine::SummaryRow& r) {
    return nlohmann::json{{"family", models::to_string(r.family)},
                          {"regime", r.regime},
                          {"metric", engine::to_string(r.metric)},
                          {"t_star", r.t_star},
                          {"test_time", r.test_time},
                          {"mean", r.mean},
                          {"std", r.std},
                          {"n", r.n},
                          {"excluded", r.excluded}};
  };
  nlohmann::json rows = nlohmann::json::array(), omitted = nlohmann::json::array();
  for (const auto& r : table.rows) rows.push_back(row_json(r));
  for (const auto& r : table.omitted) {
    auto j = row_json(r);
    j.erase("mean");
    j.erase("std");
    omitted.push_back(std::move(j));
  }
  return {{"rows", rows}, {"omitted", omitted}};
}

nlohmann::json to_json(const engine::StalenessCurve& curve) {
  nlohmann::json points = nlohmann::json::array(), gray = nlohmann::json::array();
  for (const auto& p : curve.points)
    points.push_back({{"family", models::to_string(p.family)},
                      {"regime", p.regime},
                      {"metric", engine::to_string(p.metric)},
                      {"staleness", p.staleness},
                      {"mean_delta", p.mean},
                      {"std_delta", p.std},
                      {"n", p.n},
                      {"excluded", p.excluded}});
  for (const auto& g : curve.gray)
    gray.push_back({{"staleness", g.staleness},
                    {"grayed", g.grayed},
                    {"contributing_dates", g.contributing},
                    {"qualifying_dates", g.qualifying}});
  return {{"baseline", {{"family", models::to_string(curve.baseline_family)}, {"regime", curve.baseline_regime}}},
          {"points", points},
          {"gray", gray}};
}

nlohmann::json to_json(const std::vector<engine::CellModel>& cells) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cells)
    arr.push_back({{"regime", c.regime},
                   {"family", models::to_string(c.family)},
                   {"seed", c.seed},
                   {"t_star", c.t_star},
                   {"label", c.label},
                   {"model", models::to_json(c.model)}});
  return {{"format", "emdot.models"}, {"version", 1}, {"models", arr}};
}

std::vector<engine::CellModel> cell_models_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "emdot.models") throw IoError("not a models bundle");
    std::vector<engine::CellModel> out;
    for (const auto& m : j.at("models")) {
      out.push_back({m.at("regime").get<std::string>(), models::parse_family(m.at("family").get<std::string>()),
                     m.at("seed").get<int>(), m.at("t_star").get<int>(), m.at("label").get<std::string>(),
                     models::model_from_json(m.at("model"))});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed models bundle: ") + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace emdot::io
