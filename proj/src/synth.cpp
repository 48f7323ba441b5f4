#include "emdot/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "emdot/error.hpp"
#include "emdot/rng.hpp"
#include "numeric.hpp"

namespace emdot::synth {

using dataset::ColumnKind;
using dataset::ColumnSpec;

void validate(const DriftSpec& spec) {
  if (spec.T < 2) throw ConfigError("T must be >= 2");
  if (spec.n_t < 1) throw ConfigError("n_t must be >= 1");
  if (!(spec.seasonal_amplitude >= 0.0 && spec.seasonal_amplitude < 1.0))
    throw ConfigError("seasonal_amplitude must lie in [0, 1)");
  if (spec.seasonal_period < 1) throw ConfigError("seasonal_period must be >= 1");
  if (spec.noise_features < 0) throw ConfigError("noise_features must be >= 0");
  if (spec.prevalence.size() != 1 && spec.prevalence.size() != static_cast<std::size_t>(spec.T))
    throw ConfigError("prevalence must have 1 or T entries");
  for (std::size_t i = 0; i < spec.prevalence.size(); ++i)
    if (!(spec.prevalence[i] > 0.0 && spec.prevalence[i] < 1.0))
      throw ConfigError("prevalence[" + std::to_string(i) + "] must lie in (0, 1)");
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    const auto& blk = spec.blocks[b];
    const std::string field = "blocks[" + std::to_string(b) + "]";
    if (blk.name.empty()) throw ConfigError(field + ".name must be nonempty");
    if (blk.kind != ColumnKind::Categorical && blk.kind != ColumnKind::Numerical)
      throw ConfigError(field + ".kind must be categorical or numerical");
    if (blk.width < 1) throw ConfigError(field + ".width must be >= 1");
    if (blk.t_on < 1) throw ConfigError(field + ".t_on must be >= 1");
    if (blk.t_on > blk.t_off) throw ConfigError(field + ".t_on must not exceed " + field + ".t_off");
    if (blk.t_off > spec.T) throw ConfigError(field + ".t_off must not exceed T");
    if (!(blk.observation_noise >= 0.0)) throw ConfigError(field + ".observation_noise must be >= 0");
    if (blk.period_codes && blk.kind != ColumnKind::Categorical)
      throw ConfigError(field + ".period_codes requires a categorical block");
    if (blk.latent_of) {
      const int src = *blk.latent_of;
      if (src < 0 || src >= static_cast<int>(spec.blocks.size()) || src == static_cast<int>(b) ||
          spec.blocks[src].latent_of)
        throw ConfigError(field + ".latent_of must name another block that has its own latent");
    }
    for (std::size_t o = 0; o < b; ++o)
      if (spec.blocks[o].name == blk.name) throw ConfigError(field + ".name duplicates another block");
  }
}

DriftSpec spec_from_json(const nlohmann::json& j) {
  try {
    DriftSpec s;
    s.T = j.value("T", s.T);
    s.n_t = j.value("n_t", s.n_t);
    s.seasonal_amplitude = j.value("seasonal_amplitude", s.seasonal_amplitude);
    s.seasonal_period = j.value("seasonal_period", s.seasonal_period);
    s.noise_features = j.value("noise_features", s.noise_features);
    s.seed = j.value("seed", s.seed);
    s.start_year = j.value("start_year", s.start_year);
    if (j.contains("prevalence")) {
      const auto& p = j.at("prevalence");
      s.prevalence = p.is_array() ? p.get<std::vector<double>>() : std::vector<double>{p.get<double>()};
    }
    for (const auto& jb : j.value("blocks", nlohmann::json::array())) {
      FeatureBlock b;
      b.name = jb.at("name").get<std::string>();
      b.kind = dataset::parse_column_kind(jb.value("kind", std::string("numerical")));
      b.width = jb.value("width", 1);
      b.strength = jb.value("strength", 1.0);
      b.t_on = jb.value("t_on", 1);
      b.t_off = jb.value("t_off", s.T);
      b.observation_noise = jb.value("observation_noise", 0.0);
      b.period_codes = jb.value("period_codes", false);
      if (jb.contains("latent_of") && !jb.at("latent_of").is_null()) b.latent_of = jb.at("latent_of").get<int>();
      s.blocks.push_back(std::move(b));
    }
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("drift spec: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("drift spec: ") + e.what());
  }
}

nlohmann::json to_json(const DriftSpec& s) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : s.blocks) {
    nlohmann::json jb{{"name", b.name},
                      {"kind", dataset::to_string(b.kind)},
                      {"width", b.width},
                      {"strength", b.strength},
                      {"t_on", b.t_on},
                      {"t_off", b.t_off},
                      {"observation_noise", b.observation_noise},
                      {"period_codes", b.period_codes}};
    jb["latent_of"] = b.latent_of ? nlohmann::json(*b.latent_of) : nlohmann::json(nullptr);
    blocks.push_back(std::move(jb));
  }
  return {{"T", s.T},
          {"n_t", s.n_t},
          {"seasonal_amplitude", s.seasonal_amplitude},
          {"seasonal_period", s.seasonal_period},
          {"blocks", blocks},
          {"prevalence", s.prevalence},
          {"noise_features", s.noise_features},
          {"seed", s.seed},
          {"start_year", s.start_year}};
}

int rows_at(const DriftSpec& spec, int t) {
  const double wave = std::sin(2.0 * std::numbers::pi * t / spec.seasonal_period);
  return std::max(1, static_cast<int>(std::lround(spec.n_t * (1.0 + spec.seasonal_amplitude * wave))));
}

double solve_intercept(double prevalence, double logit_sd) {
  // Trapezoid rule over the standard normal density.
  auto expected = [logit_sd](double b) {
    constexpr int kSteps = 1600;
    constexpr double kLo = -8.0, kHi = 8.0;
    const double h = (kHi - kLo) / kSteps;
    double total = 0.0;
    for (int i = 0; i <= kSteps; ++i) {
      const double z = kLo + i * h;
      const double w = (i == 0 || i == kSteps) ? 0.5 : 1.0;
      total += w * std::exp(-0.5 * z * z) * detail::sigmoid(b + logit_sd * z);
    }
    return total * h / std::sqrt(2.0 * std::numbers::pi);
  };
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (expected(mid) < prevalence ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

int latent_count(const FeatureBlock& b) { return b.kind == ColumnKind::Numerical ? b.width : 1; }

std::vector<std::string> column_names(const FeatureBlock& b) {
  if (b.kind == ColumnKind::Categorical || b.width == 1) return {b.name};
  std::vector<std::string> names;
  for (int c = 1; c <= b.width; ++c) names.push_back(b.name + "_" + std::to_string(c));
  return names;
}

double normal_quantile(double p) {
  double lo = -12.0, hi = 12.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::numbers::sqrt2);
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::vector<ColumnSpec> schema_of(const DriftSpec& spec) {
  std::vector<ColumnSpec> schema{{"year", ColumnKind::Time, {}}, {"id", ColumnKind::GroupKey, {}}};
  for (const auto& b : spec.blocks)
    for (const auto& name : column_names(b)) schema.push_back({name, b.kind, {}});
  for (int k = 1; k <= spec.noise_features; ++k)
    schema.push_back({"noise_" + std::to_string(k), ColumnKind::Numerical, {}});
  schema.push_back({"y", ColumnKind::Label, {}});
  return schema;
}

Generated generate(const DriftSpec& spec) {
  validate(spec);
  const auto schema = schema_of(spec);
  const std::size_t B = spec.blocks.size();

  // Category cut points per categorical block.
  std::vector<std::vector<double>> cuts(B);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& blk = spec.blocks[b];
    if (blk.kind != ColumnKind::Categorical) continue;
    const double scale = std::sqrt(1.0 + blk.observation_noise * blk.observation_noise);
    for (int i = 1; i < blk.width; ++i) cuts[b].push_back(scale * normal_quantile(static_cast<double>(i) / blk.width));
  }

  nlohmann::json intercepts = nlohmann::json::array(), row_counts = nlohmann::json::array(),
                 empirical = nlohmann::json::array(), logit_sds = nlohmann::json::array();
  std::string csv;
  {
    std::vector<std::string> header;
    for (const auto& c : schema) header.push_back(c.name);
    for (std::size_t i = 0; i < header.size(); ++i) csv += (i ? "," : "") + header[i];
    csv += "\n";
  }

  Rng rng(hash_combine(spec.seed, 0xd21f7ULL));
  std::size_t row_id = 0;
  std::vector<std::vector<double>> latent(B);
  for (int t = 1; t <= spec.T; ++t) {
    double var = 0.0;
    for (const auto& blk : spec.blocks)
      if (!blk.latent_of && blk.t_on <= t && t <= blk.t_off) var += blk.strength * blk.strength;
    const double sd = std::sqrt(var);
    const double intercept = solve_intercept(spec.prevalence_at(t), sd);
    const int n = rows_at(spec, t);
    std::size_t positives = 0;

    for (int i = 0; i < n; ++i, ++row_id) {
      for (std::size_t b = 0; b < B; ++b) {
        const auto& blk = spec.blocks[b];
        latent[b].assign(blk.latent_of ? 0 : latent_count(blk), 0.0);
        for (auto& z : latent[b]) z = rng.normal();
      }
      double eta = intercept;
      for (std::size_t b = 0; b < B; ++b) {
        const auto& blk = spec.blocks[b];
        if (blk.latent_of || t < blk.t_on || t > blk.t_off) continue;
        double u = 0.0;
        for (double z : latent[b]) u += z;
        eta += blk.strength * u / std::sqrt(static_cast<double>(latent[b].size()));
      }
      const bool label = rng.bernoulli(detail::sigmoid(eta));
      positives += label;

      std::string line = std::to_string(spec.start_year + t - 1) + ",r" + std::to_string(row_id);
      for (std::size_t b = 0; b < B; ++b) {
        const auto& blk = spec.blocks[b];
        const auto& src = latent[blk.latent_of ? static_cast<std::size_t>(*blk.latent_of) : b];
        const bool active = blk.t_on <= t && t <= blk.t_off;
        if (blk.kind == ColumnKind::Numerical) {
          for (int c = 0; c < blk.width; ++c) {
            const double obs = src[static_cast<std::size_t>(c) % src.size()] + blk.observation_noise * rng.normal();
            line += "," + (active ? fixed6(obs) : std::string());
          }
        } else {
          double u = 0.0;
          for (double z : src) u += z;
          u /= std::sqrt(static_cast<double>(src.size()));
          const double obs = u + blk.observation_noise * rng.normal();
          int level = 0;
          while (level < static_cast<int>(cuts[b].size()) && obs > cuts[b][level]) ++level;
          std::string code = "L" + std::to_string(level + 1);
          if (blk.period_codes) code += "-" + std::to_string(spec.start_year + t - 1);
          line += "," + (active ? code : std::string());
        }
      }
      for (int k = 0; k < spec.noise_features; ++k) line += "," + fixed6(rng.normal());
      line += label ? ",1\n" : ",0\n";
      csv += line;
    }
    intercepts.push_back(intercept);
    logit_sds.push_back(sd);
    row_counts.push_back(n);
    empirical.push_back(static_cast<double>(positives) / n);
  }

  dataset::LoadOptions options;
  options.granularity = dataset::Granularity::Year;
  options.missing_sentinels = {""};

  Generated out;
  out.data = dataset::parse_csv(csv, schema, options);
  out.csv = std::move(csv);

  nlohmann::json schema_json = nlohmann::json::array();
  for (const auto& c : schema) schema_json.push_back({{"name", c.name}, {"kind", dataset::to_string(c.kind)}});
  out.schema = {{"path", "data.csv"},
                {"granularity", "year"},
                {"missing_sentinels", {""}},
                {"min_rows_per_timepoint", 1},
                {"schema", schema_json}};

  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& blk : spec.blocks) {
    const auto names = column_names(blk);
    nlohmann::json coef = nlohmann::json::object();
    if (!blk.latent_of) {
      const double per = blk.strength / std::sqrt(static_cast<double>(latent_count(blk)));
      if (blk.kind == ColumnKind::Numerical)
        for (const auto& name : names) coef[name] = per;
      else
        coef[blk.name] = blk.strength;
    }
    nlohmann::json jb{{"name", blk.name},
                      {"kind", dataset::to_string(blk.kind)},
                      {"columns", names},
                      {"active_interval", {blk.t_on, blk.t_off}},
                      {"latent_coefficients", coef},
                      {"observation_noise", blk.observation_noise},
                      {"category_cuts", cuts[&blk - spec.blocks.data()]}};
    jb["latent_of"] = blk.latent_of ? nlohmann::json(spec.blocks[*blk.latent_of].name) : nlohmann::json(nullptr);
    blocks.push_back(std::move(jb));
  }
  out.manifest = {{"format", "emdot.synth_manifest"},
                  {"version", 1},
                  {"spec", to_json(spec)},
                  {"blocks", blocks},
                  {"intercepts", intercepts},
                  {"logit_sd", logit_sds},
                  {"rows_per_time", row_counts},
                  {"empirical_prevalence", empirical},
                  {"label_model", "y ~ Bernoulli(sigmoid(intercept_t + sum over active own-latent blocks of "
                                  "strength * mean-normalised latent))"}};
  return out;
}

DriftSpec churn_spec() {
  DriftSpec s;
  s.T = 20;
  s.n_t = 1500;
  s.seasonal_amplitude = 0.0;
  s.prevalence = {0.3};
  s.noise_features = 4;
  s.seed = 20;
  s.blocks.push_back({"risk", ColumnKind::Numerical, 1, 3.5, 1, 20, std::nullopt, 0.9});
  s.blocks.push_back({"stage", ColumnKind::Categorical, 16, 0.0, 5, 12, 0, 0.0});
  s.blocks.push_back({"age", ColumnKind::Numerical, 1, 0.5, 1, 20, std::nullopt, 0.0});
  s.blocks.push_back({"code", ColumnKind::Categorical, 3, 1.3, 1, 20, std::nullopt, 0.0, true});
  return s;
}

}  // namespace emdot::synth
