#include "emdot/models.hpp"

#include <cmath>
#include <optional>

#include "emdot/error.hpp"
#include "emdot/metrics.hpp"
#include "numeric.hpp"

namespace emdot::models {

std::string to_string(Family f) {
  switch (f) {
    case Family::LR: return "LR";
    case Family::GBDT: return "GBDT";
    case Family::MLP: return "MLP";
  }
  return "?";
}

Family parse_family(const std::string& text) {
  if (text == "LR") return Family::LR;
  if (text == "GBDT") return Family::GBDT;
  if (text == "MLP") return Family::MLP;
  throw ConfigError("unknown model family '" + text + "'");
}

Family family_of(const ModelSpec& spec) {
  return static_cast<Family>(spec.index());
}

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
}  // namespace

void validate(const ModelSpec& spec) {
  std::visit(overloaded{
                 [](const LrParams& p) {
                   if (!(p.C > 0.0) || !std::isfinite(p.C)) throw ConfigError("LR: C must be positive");
                 },
                 [](const GbdtParams& p) {
                   if (p.n_estimators < 1) throw ConfigError("GBDT: n_estimators must be >= 1");
                   if (p.max_depth < 1) throw ConfigError("GBDT: max_depth must be >= 1");
                   if (!(p.learning_rate > 0.0)) throw ConfigError("GBDT: learning_rate must be positive");
                 },
                 [](const MlpParams& p) {
                   if (p.hidden_layer_size < 1) throw ConfigError("MLP: hidden_layer_size must be >= 1");
                   if (!(p.learning_rate_init > 0.0))
                     throw ConfigError("MLP: learning_rate_init must be positive");
                 },
             },
             spec);
}

nlohmann::json hyperparams_json(const ModelSpec& spec) {
  return std::visit(overloaded{
                        [](const LrParams& p) { return nlohmann::json{{"C", p.C}}; },
                        [](const GbdtParams& p) {
                          return nlohmann::json{{"learning_rate", p.learning_rate},
                                                {"max_depth", p.max_depth},
                                                {"n_estimators", p.n_estimators}};
                        },
                        [](const MlpParams& p) {
                          return nlohmann::json{{"hidden_layer_size", p.hidden_layer_size},
                                                {"learning_rate_init", p.learning_rate_init}};
                        },
                    },
                    spec);
}

ModelSpec spec_from_json(Family family, const nlohmann::json& j) {
  try {
    ModelSpec spec;
    switch (family) {
      case Family::LR: spec = LrParams{j.at("C").get<double>()}; break;
      case Family::GBDT:
        spec = GbdtParams{j.at("n_estimators").get<int>(), j.at("max_depth").get<int>(),
                          j.at("learning_rate").get<double>()};
        break;
      case Family::MLP:
        spec = MlpParams{j.at("hidden_layer_size").get<int>(), j.at("learning_rate_init").get<double>()};
        break;
    }
    validate(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(to_string(family) + " hyperparameters: " + e.what());
  }
}

HyperGrid HyperGrid::defaults() {
  HyperGrid grid;
  auto& lr = grid.candidates[Family::LR];
  for (double C : {0.01, 0.1, 1.0, 10.0, 1e2, 1e3, 1e4, 1e5}) lr.push_back(LrParams{C});
  auto& gbdt = grid.candidates[Family::GBDT];
  for (int n : {50, 100})
    for (int depth : {3, 5})
      for (double rate : {0.01, 0.1}) gbdt.push_back(GbdtParams{n, depth, rate});
  auto& mlp = grid.candidates[Family::MLP];
  for (int hidden : {3, 5})
    for (double rate : {1e-4, 1e-3, 1e-2}) mlp.push_back(MlpParams{hidden, rate});
  return grid;
}

const std::vector<ModelSpec>& HyperGrid::of(Family f) const {
  auto it = candidates.find(f);
  if (it == candidates.end() || it->second.empty())
    throw ConfigError("no hyperparameter grid for family " + to_string(f));
  return it->second;
}

TrainedModel fit(const ModelSpec& spec, const FeatureMatrix& X, Labels y, std::uint64_t seed) {
  return std::visit(overloaded{
                        [&](const LrParams& p) { return fit_lr(X, y, p.C, seed); },
                        [&](const GbdtParams& p) {
                          return fit_gbdt(X, y, p.n_estimators, p.max_depth, p.learning_rate, seed);
                        },
                        [&](const MlpParams& p) {
                          return fit_mlp(X, y, p.hidden_layer_size, p.learning_rate_init, seed);
                        },
                    },
                    spec);
}

namespace {

double mlp_forward(const MlpModel& net, std::span<const double> x) {
  double z = net.b2;
  for (std::size_t j = 0; j < net.hidden; ++j) {
    double a = net.b1[j];
    const double* w = &net.w1[j * net.inputs];
    for (std::size_t i = 0; i < net.inputs; ++i) a += w[i] * x[i];
    if (a > 0.0) z += net.w2[j] * a;
  }
  return z;
}

}  // namespace

std::vector<double> predict_scores(const TrainedModel& model, const FeatureMatrix& X) {
  if (X.cols != model.feature_names.size())
    throw ShapeError("feature count " + std::to_string(X.cols) + " does not match the model's " +
                     std::to_string(model.feature_names.size()));
  if (X.feature_names != model.feature_names) throw ShapeError("feature names do not match the model");
  std::vector<double> scores(X.rows);
  std::visit(overloaded{
                 [&](const LrModel& m) {
                   for (std::size_t i = 0; i < X.rows; ++i) {
                     const auto x = X.row(i);
                     double z = m.intercept;
                     for (std::size_t j = 0; j < X.cols; ++j) z += m.weights[j] * x[j];
                     scores[i] = detail::sigmoid(z);
                   }
                 },
                 [&](const GbdtModel& m) {
                   for (std::size_t i = 0; i < X.rows; ++i) {
                     double z = m.base_score;
                     for (const auto& tree : m.trees) z += m.learning_rate * tree.predict(X.row(i));
                     scores[i] = detail::sigmoid(z);
                   }
                 },
                 [&](const MlpModel& m) {
                   for (std::size_t i = 0; i < X.rows; ++i) scores[i] = detail::sigmoid(mlp_forward(m, X.row(i)));
                 },
             },
             model.params);
  return scores;
}

std::vector<double> importance(const TrainedModel& model) {
  const std::size_t d = model.feature_names.size();
  std::vector<double> out(d, 0.0);
  std::visit(overloaded{
                 [&](const LrModel& m) {
                   for (std::size_t j = 0; j < d; ++j) out[j] = std::abs(m.weights[j]);
                 },
                 [&](const GbdtModel& m) {
                   for (const auto& tree : m.trees)
                     for (const auto& node : tree.nodes)
                       if (node.feature >= 0) out[node.feature] += node.gain;
                 },
                 [&](const MlpModel& m) {
                   for (std::size_t j = 0; j < m.hidden; ++j)
                     for (std::size_t i = 0; i < d; ++i) out[i] += std::abs(m.w1[j * d + i]);
                   for (auto& v : out) v /= static_cast<double>(m.hidden);
                 },
             },
             model.params);
  return out;
}

GridResult grid_search(Family family, const HyperGrid& grid, const FeatureMatrix& train, Labels train_y,
                       const FeatureMatrix& val, Labels val_y, std::uint64_t seed) {
  const auto& candidates = grid.of(family);
  bool val_usable = val.rows > 0;
  if (val_usable) {
    std::size_t pos = 0;
    for (auto v : val_y) pos += v != 0;
    val_usable = pos > 0 && pos < val_y.size();
  }

  GridResult result;
  result.fallback = !val_usable;
  bool have = false;
  std::string last_error;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    ModelSpec spec = candidates[c];
    std::optional<TrainedModel> model;
    try {
      model = fit(spec, train, train_y, seed);
    } catch (const DivergenceError& e) {
      // One retry at a tenth of the learning rate.
      if (auto* mlp = std::get_if<MlpParams>(&spec)) {
        try {
          model = fit_mlp(train, train_y, mlp->hidden_layer_size, mlp->learning_rate_init / 10.0, seed);
          model->spec = candidates[c];
        } catch (const DivergenceError& e2) {
          last_error = e2.what();
        }
      } else {
        last_error = e.what();
      }
    }
    ++result.fits;
    if (!model) {
      ++result.failed;
      continue;
    }
    double selection;
    if (val_usable) {
      selection = metrics::auroc(predict_scores(*model, val), val_y).value;
    } else {
      selection = -model->metadata.final_objective;  // training loss
    }
    if (!have || selection > result.selection_score) {
      result.model = std::move(*model);
      result.candidate_index = c;
      result.selection_score = selection;
      have = true;
    }
  }
  if (!have) throw GridError("all " + std::to_string(candidates.size()) + " candidates failed: " + last_error);
  return result;
}

// -- serialization -----------------------------------------------------------

nlohmann::json to_json(const TrainedModel& model) {
  nlohmann::json j;
  j["format"] = "emdot.model";
  j["version"] = 1;
  j["family"] = to_string(model.family());
  j["hyperparameters"] = hyperparams_json(model.spec);
  j["feature_names"] = model.feature_names;
  j["metadata"] = {{"seed", model.metadata.seed},
                   {"iterations", model.metadata.iterations},
                   {"final_objective", model.metadata.final_objective}};
  std::visit(overloaded{
                 [&](const LrModel& m) { j["parameters"] = {{"weights", m.weights}, {"intercept", m.intercept}}; },
                 [&](const GbdtModel& m) {
                   nlohmann::json trees = nlohmann::json::array();
                   for (const auto& tree : m.trees) {
                     nlohmann::json nodes = nlohmann::json::array();
                     for (const auto& nd : tree.nodes) {
                       if (nd.feature < 0)
                         nodes.push_back({{"value", nd.value}});
                       else
                         nodes.push_back({{"feature", nd.feature},
                                          {"threshold", nd.threshold},
                                          {"left", nd.left},
                                          {"right", nd.right},
                                          {"gain", nd.gain}});
                     }
                     trees.push_back(std::move(nodes));
                   }
                   j["parameters"] = {{"base_score", m.base_score},
                                      {"learning_rate", m.learning_rate},
                                      {"trees", std::move(trees)}};
                 },
                 [&](const MlpModel& m) {
                   j["parameters"] = {{"inputs", m.inputs}, {"hidden", m.hidden}, {"w1", m.w1},
                                      {"b1", m.b1},         {"w2", m.w2},         {"b2", m.b2}};
                 },
             },
             model.params);
  return j;
}

TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "emdot.model" || j.at("version").get<int>() != 1)
      throw ConfigError("unsupported model document");
    TrainedModel model;
    const Family family = parse_family(j.at("family").get<std::string>());
    model.spec = spec_from_json(family, j.at("hyperparameters"));
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto& meta = j.at("metadata");
    model.metadata.seed = meta.at("seed").get<std::uint64_t>();
    model.metadata.iterations = meta.at("iterations").get<int>();
    model.metadata.final_objective = meta.at("final_objective").get<double>();
    const auto& p = j.at("parameters");
    switch (family) {
      case Family::LR:
        model.params = LrModel{p.at("weights").get<std::vector<double>>(), p.at("intercept").get<double>()};
        break;
      case Family::GBDT: {
        GbdtModel m;
        m.base_score = p.at("base_score").get<double>();
        m.learning_rate = p.at("learning_rate").get<double>();
        for (const auto& jt : p.at("trees")) {
          Tree tree;
          for (const auto& jn : jt) {
            TreeNode nd;
            if (jn.contains("feature")) {
              nd.feature = jn.at("feature").get<int>();
              nd.threshold = jn.at("threshold").get<double>();
              nd.left = jn.at("left").get<int>();
              nd.right = jn.at("right").get<int>();
              nd.gain = jn.at("gain").get<double>();
            } else {
              nd.value = jn.at("value").get<double>();
            }
            tree.nodes.push_back(nd);
          }
          m.trees.push_back(std::move(tree));
        }
        model.params = std::move(m);
        break;
      }
      case Family::MLP: {
        MlpModel m;
        m.inputs = p.at("inputs").get<std::size_t>();
        m.hidden = p.at("hidden").get<std::size_t>();
        m.w1 = p.at("w1").get<std::vector<double>>();
        m.b1 = p.at("b1").get<std::vector<double>>();
        m.w2 = p.at("w2").get<std::vector<double>>();
        m.b2 = p.at("b2").get<double>();
        model.params = std::move(m);
        break;
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace emdot::models
