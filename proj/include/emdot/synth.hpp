#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "emdot/dataset.hpp"

namespace emdot::synth {

/// A group of generated feature columns sharing an activity interval.
///
/// A block either carries its own standard-normal latent (and contributes
/// `strength * latent` to the label logit while active) or, with
/// `latent_of`, re-observes another block's latent without adding signal.
/// Categorical blocks bin their observed value into `width` equiprobable
/// levels; numerical blocks emit `width` columns. Cells are missing outside
/// [t_on, t_off]. With `period_codes`, categorical levels are renamed at every
/// time point (a recoding each period, so levels never recur).
struct FeatureBlock {
  std::string name;
  dataset::ColumnKind kind = dataset::ColumnKind::Numerical;
  int width = 1;
  double strength = 1.0;
  int t_on = 1;
  int t_off = 1;
  std::optional<int> latent_of;
  double observation_noise = 0.0;
  bool period_codes = false;
};

struct DriftSpec {
  int T = 10;
  int n_t = 1000;
  double seasonal_amplitude = 0.0;
  int seasonal_period = 12;
  std::vector<FeatureBlock> blocks;
  /// Scheduled label prevalence; one entry per time point, or a single
  /// entry used for all of them.
  std::vector<double> prevalence{0.3};
  int noise_features = 0;
  std::uint64_t seed = 0;
  int start_year = 2001;

  double prevalence_at(int t) const { return prevalence.size() == 1 ? prevalence[0] : prevalence.at(t - 1); }
};

/// Throws ConfigError naming the offending field.
void validate(const DriftSpec& spec);

DriftSpec spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DriftSpec& spec);

struct Generated {
  dataset::TemporalDataset data;
  std::string csv;
  /// Dataset section of a run config: path, granularity, schema.
  nlohmann::json schema;
  /// Ground truth: coefficients, intercepts, activity intervals, row counts.
  nlohmann::json manifest;
};

/// Rows at time t: round(n_t * (1 + amplitude * sin(2 pi t / period))).
int rows_at(const DriftSpec& spec, int t);

/// Intercept b with E[sigmoid(b + sd * Z)] = prevalence for Z ~ N(0,1).
double solve_intercept(double prevalence, double logit_sd);

Generated generate(const DriftSpec& spec);

/// Schema of the generated CSV.
std::vector<dataset::ColumnSpec> schema_of(const DriftSpec& spec);

/// Coding-system churn: a noisy always-on measurement of the risk factor plus
/// a precise categorical recoding of it that exists only on [5, 12], and a
/// site code whose levels are reissued every period.
DriftSpec churn_spec();

}  // namespace emdot::synth
