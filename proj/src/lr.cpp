#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "emdot/error.hpp"
#include "emdot/models.hpp"
#include "numeric.hpp"

namespace emdot::models {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

constexpr double kGradientTolerance = 1e-6;
constexpr int kMaxIterations = 500;

void require_two_classes(const FeatureMatrix& X, Labels y) {
  if (X.rows == 0) throw ShapeError("empty training matrix");
  if (y.size() != X.rows) throw ShapeError("label count does not match rows");
  std::size_t pos = 0;
  for (auto v : y) pos += v != 0;
  if (pos == 0 || pos == y.size()) throw DegenerateLabelError("training labels contain a single class");
}

// Row-compressed copy of X. One-hot blocks leave most entries zero, and the
// Hessian only needs products of nonzeros.
struct SparseRows {
  std::vector<std::size_t> offsets{0};
  std::vector<Eigen::Index> cols;
  std::vector<double> vals;

  explicit SparseRows(const FeatureMatrix& X) {
    for (std::size_t i = 0; i < X.rows; ++i) {
      for (std::size_t j = 0; j < X.cols; ++j) {
        const double v = X.at(i, j);
        if (v != 0.0) {
          cols.push_back(static_cast<Eigen::Index>(j));
          vals.push_back(v);
        }
      }
      offsets.push_back(cols.size());
    }
  }

  std::size_t rows() const { return offsets.size() - 1; }

  Eigen::VectorXd times(const Eigen::VectorXd& w, double b) const {
    Eigen::VectorXd z(static_cast<Eigen::Index>(rows()));
    for (std::size_t i = 0; i < rows(); ++i) {
      double acc = b;
      for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) acc += vals[k] * w[cols[k]];
      z[static_cast<Eigen::Index>(i)] = acc;
    }
    return z;
  }
};

struct Objective {
  const SparseRows& X;
  const Eigen::VectorXd& y;
  double penalty;  // 1 / (C n)

  double value(const Eigen::VectorXd& w, double b) const {
    const Eigen::VectorXd z = X.times(w, b);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) loss += detail::logistic_loss(z[i], y[i]);
    return loss / static_cast<double>(z.size()) + 0.5 * penalty * w.squaredNorm();
  }
};

}  // namespace

double lr_objective(const FeatureMatrix& X, Labels y, double C, std::span<const double> weights,
                    double intercept, std::span<double> grad) {
  if (weights.size() != X.cols || grad.size() != X.cols + 1 || y.size() != X.rows)
    throw ShapeError("lr_objective: dimension mismatch");
  const ConstMatrixMap Xm(X.values.data(), static_cast<Eigen::Index>(X.rows), static_cast<Eigen::Index>(X.cols));
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
  const double n = static_cast<double>(X.rows);
  const double penalty = 1.0 / (C * n);
  const Eigen::VectorXd z = (Xm * w).array() + intercept;
  Eigen::VectorXd residual(z.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    loss += detail::logistic_loss(z[i], y[i]);
    residual[i] = detail::sigmoid(z[i]) - y[i];
  }
  Eigen::Map<Eigen::VectorXd> g(grad.data(), static_cast<Eigen::Index>(X.cols));
  g = Xm.transpose() * residual / n + penalty * w;
  grad[X.cols] = residual.sum() / n;
  return loss / n + 0.5 * penalty * w.squaredNorm();
}

TrainedModel fit_lr(const FeatureMatrix& X, Labels y, double C, std::uint64_t seed) {
  if (!(C > 0.0)) throw ConfigError("LR: C must be positive");
  require_two_classes(X, y);

  const auto n = static_cast<Eigen::Index>(X.rows);
  const auto d = static_cast<Eigen::Index>(X.cols);
  const SparseRows Xs(X);
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[i];
  const double nd = static_cast<double>(n);
  const Objective objective{Xs, yv, 1.0 / (C * nd)};

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  double f = objective.value(w, b);
  int iteration = 0;
  Eigen::VectorXd grad(d + 1);
  Eigen::MatrixXd H(d + 1, d + 1);

  for (; iteration < kMaxIterations; ++iteration) {
    const Eigen::VectorXd z = Xs.times(w, b);
    grad.setZero();
    H.setZero();
    // Lower triangle of the Hessian of the augmented design [X 1]; the
    // intercept is the last coordinate.
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = detail::sigmoid(z[i]);
      const double r = p - yv[i];
      const double s = p * (1.0 - p);
      const std::size_t lo = Xs.offsets[i], hi = Xs.offsets[i + 1];
      for (std::size_t a = lo; a < hi; ++a) {
        const Eigen::Index ca = Xs.cols[a];
        const double sa = s * Xs.vals[a];
        grad[ca] += r * Xs.vals[a];
        for (std::size_t c = lo; c <= a; ++c) H(ca, Xs.cols[c]) += sa * Xs.vals[c];
        H(d, ca) += sa;
      }
      grad[d] += r;
      H(d, d) += s;
    }
    grad /= nd;
    grad.head(d) += objective.penalty * w;
    if (grad.lpNorm<Eigen::Infinity>() < kGradientTolerance) break;
    H /= nd;
    H.topLeftCorner(d, d).diagonal().array() += objective.penalty;

    // Ridge damping keeps the system solvable on (near-)separable data.
    double damping = 1e-10 * std::max(1.0, H.diagonal().maxCoeff());
    Eigen::VectorXd step;
    for (int attempt = 0; attempt < 20; ++attempt) {
      Eigen::MatrixXd damped = H;
      damped.diagonal().array() += damping;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        step = -ldlt.solve(grad);
        if (step.allFinite() && step.dot(grad) < 0.0) break;
      }
      damping *= 100.0;
      step.resize(0);
    }
    if (step.size() == 0) step = -grad;

    const double slope = step.dot(grad);
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      const Eigen::VectorXd w_new = w + t * step.head(d);
      const double b_new = b + t * step[d];
      const double f_new = objective.value(w_new, b_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * t * slope) {
        w = w_new;
        b = b_new;
        f = f_new;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no representable decrease left
  }

  TrainedModel model;
  model.spec = LrParams{C};
  model.feature_names = X.feature_names;
  model.params = LrModel{{w.data(), w.data() + d}, b};
  model.metadata.seed = seed;
  model.metadata.iterations = iteration;
  model.metadata.final_objective = f;
  return model;
}

}  // namespace emdot::models
