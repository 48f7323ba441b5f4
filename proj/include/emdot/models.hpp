#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "emdot/dataset.hpp"

namespace emdot::models {

using dataset::FeatureMatrix;
using Labels = std::span<const std::uint8_t>;

enum class Family { LR, GBDT, MLP };

std::string to_string(Family f);
Family parse_family(const std::string& text);

struct LrParams {
  double C = 1.0;
};
struct GbdtParams {
  int n_estimators = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
};
struct MlpParams {
  int hidden_layer_size = 5;
  double learning_rate_init = 1e-3;
};

/// Family tag plus its hyperparameters.
using ModelSpec = std::variant<LrParams, GbdtParams, MlpParams>;

Family family_of(const ModelSpec& spec);
/// Throws ConfigError on out-of-domain hyperparameters.
void validate(const ModelSpec& spec);
nlohmann::json hyperparams_json(const ModelSpec& spec);
ModelSpec spec_from_json(Family family, const nlohmann::json& j);

/// Candidates per family, searched in declaration order.
struct HyperGrid {
  std::map<Family, std::vector<ModelSpec>> candidates;

  /// The grids used throughout the evaluation protocol: 8 LR, 8 GBDT, 6 MLP.
  static HyperGrid defaults();
  const std::vector<ModelSpec>& of(Family f) const;
};

struct LrModel {
  std::vector<double> weights;
  double intercept = 0.0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double gain = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> x) const;
};

struct GbdtModel {
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<Tree> trees;
};

/// hidden: row-major (hidden x inputs).
struct MlpModel {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  int iterations = 0;
  double final_objective = 0.0;
  /// Per-stage training loss (GBDT) or per-epoch loss (MLP).
  std::vector<double> trace;
};

struct TrainedModel {
  ModelSpec spec;
  std::vector<std::string> feature_names;
  std::variant<LrModel, GbdtModel, MlpModel> params;
  TrainingMetadata metadata;

  Family family() const { return family_of(spec); }
};

// -- logistic regression ---------------------------------------------------

/// Mean logistic loss + ||w||^2 / (2 C n), intercept unpenalised. Returns the
/// objective and writes the gradient (weights then intercept) to `grad`.
double lr_objective(const FeatureMatrix& X, Labels y, double C, std::span<const double> weights,
                    double intercept, std::span<double> grad);

TrainedModel fit_lr(const FeatureMatrix& X, Labels y, double C, std::uint64_t seed = 0);

// -- gradient boosted trees ------------------------------------------------

TrainedModel fit_gbdt(const FeatureMatrix& X, Labels y, int n_estimators, int max_depth,
                      double learning_rate, std::uint64_t seed = 0);

// -- one-hidden-layer perceptron -------------------------------------------

struct MlpSchedule {
  std::size_t batch_size = 128;
  int max_epochs = 200;
  double tolerance = 1e-5;
  int patience = 10;
};

/// Mean logistic loss of the network; gradient laid out as w1, b1, w2, b2.
double mlp_objective(const MlpModel& net, const FeatureMatrix& X, Labels y, std::span<double> grad);

/// Parameter count of a network, matching the gradient layout.
std::size_t mlp_parameter_count(const MlpModel& net);
std::vector<double> mlp_flatten(const MlpModel& net);
void mlp_unflatten(MlpModel& net, std::span<const double> flat);
MlpModel mlp_init(std::size_t inputs, std::size_t hidden, std::uint64_t seed);

TrainedModel fit_mlp(const FeatureMatrix& X, Labels y, int hidden_layer_size, double learning_rate_init,
                     std::uint64_t seed = 0, const MlpSchedule& schedule = {});

// -- common surface ----------------------------------------------------------

TrainedModel fit(const ModelSpec& spec, const FeatureMatrix& X, Labels y, std::uint64_t seed);

std::vector<double> predict_scores(const TrainedModel& model, const FeatureMatrix& X);

/// |w| for LR, total split gain for GBDT, mean |first-layer weight| for MLP.
std::vector<double> importance(const TrainedModel& model);

struct GridResult {
  TrainedModel model;
  std::size_t candidate_index = 0;
  std::size_t fits = 0;
  double selection_score = 0.0;
  /// Validation had a single class; selection used training loss.
  bool fallback = false;
  /// Candidates skipped after divergence.
  std::size_t failed = 0;
};

/// Fits every candidate and keeps the best validation AUROC; ties keep the
/// earlier candidate.
GridResult grid_search(Family family, const HyperGrid& grid, const FeatureMatrix& train, Labels train_y,
                       const FeatureMatrix& val, Labels val_y, std::uint64_t seed);

nlohmann::json to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

}  // namespace emdot::models
