#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "emdot/error.hpp"
#include "emdot/models.hpp"
#include "emdot/rng.hpp"
#include "numeric.hpp"

namespace emdot::models {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

/// Accumulates loss and gradient over `rows` (unnormalised sums).
double accumulate(const MlpModel& net, const FeatureMatrix& X, Labels y, std::span<const std::size_t> rows,
                  std::span<double> grad, std::vector<double>& hidden) {
  const std::size_t d = net.inputs, h = net.hidden;
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + h * d;
  double* g_w2 = g_b1 + h;
  double& g_b2 = grad[h * d + 2 * h];
  double loss = 0.0;
  hidden.resize(h);
  for (auto r : rows) {
    const auto x = X.row(r);
    double z = net.b2;
    for (std::size_t j = 0; j < h; ++j) {
      double a = net.b1[j];
      const double* w = &net.w1[j * d];
      for (std::size_t i = 0; i < d; ++i) a += w[i] * x[i];
      hidden[j] = a > 0.0 ? a : 0.0;
      z += net.w2[j] * hidden[j];
    }
    loss += detail::logistic_loss(z, y[r]);
    const double delta = detail::sigmoid(z) - y[r];
    g_b2 += delta;
    for (std::size_t j = 0; j < h; ++j) {
      g_w2[j] += delta * hidden[j];
      if (hidden[j] <= 0.0) continue;
      const double back = delta * net.w2[j];
      g_b1[j] += back;
      double* gw = &g_w1[j * d];
      for (std::size_t i = 0; i < d; ++i) gw[i] += back * x[i];
    }
  }
  return loss;
}

}  // namespace

std::size_t mlp_parameter_count(const MlpModel& net) { return net.hidden * net.inputs + 2 * net.hidden + 1; }

std::vector<double> mlp_flatten(const MlpModel& net) {
  std::vector<double> flat;
  flat.reserve(mlp_parameter_count(net));
  flat.insert(flat.end(), net.w1.begin(), net.w1.end());
  flat.insert(flat.end(), net.b1.begin(), net.b1.end());
  flat.insert(flat.end(), net.w2.begin(), net.w2.end());
  flat.push_back(net.b2);
  return flat;
}

void mlp_unflatten(MlpModel& net, std::span<const double> flat) {
  if (flat.size() != mlp_parameter_count(net)) throw ShapeError("MLP parameter vector has wrong size");
  auto it = flat.begin();
  std::copy_n(it, net.w1.size(), net.w1.begin());
  it += static_cast<std::ptrdiff_t>(net.w1.size());
  std::copy_n(it, net.b1.size(), net.b1.begin());
  it += static_cast<std::ptrdiff_t>(net.b1.size());
  std::copy_n(it, net.w2.size(), net.w2.begin());
  it += static_cast<std::ptrdiff_t>(net.w2.size());
  net.b2 = *it;
}

MlpModel mlp_init(std::size_t inputs, std::size_t hidden, std::uint64_t seed) {
  MlpModel net;
  net.inputs = inputs;
  net.hidden = hidden;
  Rng rng(seed);
  // Glorot-uniform bounds per layer.
  const double bound1 = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
  const double bound2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  net.w1.resize(hidden * inputs);
  for (auto& w : net.w1) w = rng.uniform(-bound1, bound1);
  net.b1.resize(hidden);
  for (auto& b : net.b1) b = rng.uniform(-bound1, bound1);
  net.w2.resize(hidden);
  for (auto& w : net.w2) w = rng.uniform(-bound2, bound2);
  net.b2 = rng.uniform(-bound2, bound2);
  return net;
}

double mlp_objective(const MlpModel& net, const FeatureMatrix& X, Labels y, std::span<double> grad) {
  if (X.cols != net.inputs || y.size() != X.rows) throw ShapeError("mlp_objective: dimension mismatch");
  if (grad.size() != mlp_parameter_count(net)) throw ShapeError("mlp_objective: gradient buffer size");
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<std::size_t> rows(X.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<double> hidden;
  const double n = static_cast<double>(X.rows);
  const double loss = accumulate(net, X, y, rows, grad, hidden);
  for (auto& g : grad) g /= n;
  return loss / n;
}

TrainedModel fit_mlp(const FeatureMatrix& X, Labels y, int hidden_layer_size, double learning_rate_init,
                     std::uint64_t seed, const MlpSchedule& schedule) {
  validate(MlpParams{hidden_layer_size, learning_rate_init});
  if (X.rows == 0) throw ShapeError("empty training matrix");
  if (y.size() != X.rows) throw ShapeError("label count does not match rows");
  std::size_t pos = 0;
  for (auto v : y) pos += v != 0;
  if (pos == 0 || pos == y.size()) throw DegenerateLabelError("training labels contain a single class");

  MlpModel net = mlp_init(X.cols, static_cast<std::size_t>(hidden_layer_size), seed);
  const std::size_t P = mlp_parameter_count(net);
  std::vector<double> theta = mlp_flatten(net), m(P, 0.0), v(P, 0.0), grad(P);
  std::vector<std::size_t> order(X.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> hidden;
  Rng shuffler(hash_combine(seed, 0x5u));

  TrainingMetadata meta;
  meta.seed = seed;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  long step = 0;
  const std::size_t batch = std::max<std::size_t>(1, std::min(schedule.batch_size, X.rows));

  int epoch = 0;
  for (; epoch < schedule.max_epochs; ++epoch) {
    shuffler.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      epoch_loss += accumulate(net, X, y, rows, grad, hidden);
      const double scale = 1.0 / static_cast<double>(rows.size());
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      const double lr = learning_rate_init * std::sqrt(c2) / c1;
      for (std::size_t p = 0; p < P; ++p) {
        const double g = grad[p] * scale;
        m[p] = kBeta1 * m[p] + (1.0 - kBeta1) * g;
        v[p] = kBeta2 * v[p] + (1.0 - kBeta2) * g * g;
        theta[p] -= lr * m[p] / (std::sqrt(v[p]) + kAdamEps);
      }
      mlp_unflatten(net, theta);
    }
    epoch_loss /= static_cast<double>(X.rows);
    if (!std::isfinite(epoch_loss)) throw DivergenceError("MLP training loss became non-finite");
    meta.trace.push_back(epoch_loss);
    if (epoch_loss > best - schedule.tolerance) {
      if (++stale >= schedule.patience) {
        ++epoch;
        break;
      }
    } else {
      stale = 0;
    }
    best = std::min(best, epoch_loss);
  }
  meta.iterations = epoch;
  meta.final_objective = meta.trace.empty() ? 0.0 : meta.trace.back();

  TrainedModel model;
  model.spec = MlpParams{hidden_layer_size, learning_rate_init};
  model.feature_names = X.feature_names;
  model.params = std::move(net);
  model.metadata = std::move(meta);
  return model;
}

}  // namespace emdot::models
