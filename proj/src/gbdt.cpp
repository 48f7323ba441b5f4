#include <algorithm>
#include <cmath>
#include <numeric>

#include "emdot/error.hpp"
#include "emdot/models.hpp"
#include "numeric.hpp"

namespace emdot::models {

namespace {

constexpr double kLeafL2 = 1.0;
constexpr double kMinGain = -1e-12;

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
  std::size_t count = 0;
};

double score(double g, double h) { return g * g / (h + kLeafL2); }

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = -1.0;
};

/// Per-node scan state while walking one feature's sorted order.
struct ScanState {
  NodeStats left;
  double last_value = 0.0;
};

double mean_loss(std::span<const double> margin, Labels y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) loss += detail::logistic_loss(margin[i], y[i]);
  return loss / static_cast<double>(y.size());
}

/// Depth-limited exact-split regression tree on (gradient, hessian), grown
/// level by level. Each level costs one pass over every presorted feature.
Tree grow_tree(const FeatureMatrix& X, const std::vector<std::vector<std::uint32_t>>& sorted,
               std::span<const double> grad, std::span<const double> hess, int max_depth) {
  const std::size_t n = X.rows;
  Tree tree;
  tree.nodes.emplace_back();
  std::vector<int> node_of(n, 0);

  NodeStats root;
  for (std::size_t i = 0; i < n; ++i) {
    root.g += grad[i];
    root.h += hess[i];
  }
  root.count = n;

  std::vector<int> frontier{0};
  std::vector<NodeStats> stats{root};  // indexed by node id

  for (int depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
    const std::size_t width = tree.nodes.size();
    std::vector<int> slot(width, -1);
    for (std::size_t k = 0; k < frontier.size(); ++k) slot[frontier[k]] = static_cast<int>(k);
    std::vector<SplitCandidate> best(frontier.size());

    for (std::size_t f = 0; f < X.cols; ++f) {
      std::vector<ScanState> scan(frontier.size());
      for (auto r : sorted[f]) {
        const int nd = node_of[r];
        if (nd < 0) continue;
        const int k = slot[nd];
        if (k < 0) continue;
        auto& st = scan[k];
        const double v = X.at(r, f);
        if (st.left.count > 0 && v > st.last_value) {
          const auto& parent = stats[nd];
          const double gr = parent.g - st.left.g;
          const double hr = parent.h - st.left.h;
          const double gain =
              0.5 * (score(st.left.g, st.left.h) + score(gr, hr) - score(parent.g, parent.h));
          if (gain > best[k].gain) best[k] = {static_cast<int>(f), 0.5 * (st.last_value + v), gain};
        }
        st.left.g += grad[r];
        st.left.h += hess[r];
        ++st.left.count;
        st.last_value = v;
      }
    }

    std::vector<int> next;
    for (std::size_t k = 0; k < frontier.size(); ++k) {
      const int nd = frontier[k];
      if (best[k].feature < 0 || best[k].gain < kMinGain) continue;
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      stats.resize(tree.nodes.size());
      auto& node = tree.nodes[nd];
      node.feature = best[k].feature;
      node.threshold = best[k].threshold;
      node.gain = std::max(0.0, best[k].gain);
      node.left = left;
      node.right = left + 1;
      next.push_back(left);
      next.push_back(left + 1);
    }
    for (std::size_t r = 0; r < n; ++r) {
      const int nd = node_of[r];
      if (nd < 0) continue;
      const auto& node = tree.nodes[nd];
      if (node.feature < 0) {
        continue;
      }
      const int child = X.at(r, node.feature) <= node.threshold ? node.left : node.right;
      node_of[r] = child;
      auto& cs = stats[child];
      cs.g += grad[r];
      cs.h += hess[r];
      ++cs.count;
    }
    frontier = std::move(next);
  }

  for (std::size_t nd = 0; nd < tree.nodes.size(); ++nd) {
    auto& node = tree.nodes[nd];
    if (node.feature < 0) node.value = -stats[nd].g / (stats[nd].h + kLeafL2);
  }
  return tree;
}

}  // namespace

double Tree::predict(std::span<const double> x) const {
  int nd = 0;
  while (nodes[nd].feature >= 0) {
    const auto& node = nodes[nd];
    nd = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes[nd].value;
}

TrainedModel fit_gbdt(const FeatureMatrix& X, Labels y, int n_estimators, int max_depth,
                      double learning_rate, std::uint64_t seed) {
  validate(GbdtParams{n_estimators, max_depth, learning_rate});
  if (X.rows == 0) throw ShapeError("empty training matrix");
  if (y.size() != X.rows) throw ShapeError("label count does not match rows");
  const std::size_t n = X.rows;
  std::size_t pos = 0;
  for (auto v : y) pos += v != 0;
  if (pos == 0 || pos == n) throw DegenerateLabelError("training labels contain a single class");

  std::vector<std::vector<std::uint32_t>> sorted(X.cols);
  for (std::size_t f = 0; f < X.cols; ++f) {
    auto& order = sorted[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return X.at(a, f) < X.at(b, f); });
  }

  const double mean = static_cast<double>(pos) / static_cast<double>(n);
  GbdtModel gbdt;
  gbdt.base_score = std::log(mean / (1.0 - mean));
  gbdt.learning_rate = learning_rate;

  TrainingMetadata meta;
  meta.seed = seed;
  std::vector<double> margin(n, gbdt.base_score), grad(n), hess(n);
  meta.trace.push_back(mean_loss(margin, y));
  for (int stage = 0; stage < n_estimators; ++stage) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = detail::sigmoid(margin[i]);
      grad[i] = p - y[i];
      hess[i] = std::max(p * (1.0 - p), 1e-16);
    }
    Tree tree = grow_tree(X, sorted, grad, hess, max_depth);
    for (std::size_t i = 0; i < n; ++i) margin[i] += learning_rate * tree.predict(X.row(i));
    gbdt.trees.push_back(std::move(tree));
    meta.trace.push_back(mean_loss(margin, y));
  }
  meta.iterations = n_estimators;
  meta.final_objective = meta.trace.back();

  TrainedModel model;
  model.spec = GbdtParams{n_estimators, max_depth, learning_rate};
  model.feature_names = X.feature_names;
  model.params = std::move(gbdt);
  model.metadata = std::move(meta);
  return model;
}

}  // namespace emdot::models
