#pragma once

// Brute-force references for the metric kernels.

#include <algorithm>
#include <cstdint>
#include <set>
#include <span>

namespace emdot::oracle {

inline double pairwise_auroc(std::span<const double> s, std::span<const std::uint8_t> y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!y[i] || y[j]) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  return wins / pairs;
}

/// Average precision by thresholding at every distinct score.
inline double sweep_auprc(std::span<const double> s, std::span<const std::uint8_t> y) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  double total_pos = 0.0;
  for (auto v : y) total_pos += v;
  double prev_recall = 0.0, area = 0.0;
  for (double th : thresholds) {
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= th) (y[i] ? tp : fp) += 1.0;
    const double recall = tp / total_pos;
    area += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return area;
}

}  // namespace emdot::oracle

#include <cmath>
#include <functional>
#include <vector>

namespace emdot::oracle {

struct GradientGap {
  double max_abs = 0.0;
  double max_rel = 0.0;
};

/// Compares `analytic` with central differences of `f` at `x`.
inline GradientGap central_difference_gap(const std::function<double(const std::vector<double>&)>& f,
                                          std::vector<double> x, const std::vector<double>& analytic,
                                          double eps = 1e-5) {
  GradientGap gap;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = f(x);
    x[i] = keep - eps;
    const double down = f(x);
    x[i] = keep;
    const double numeric = (up - down) / (2.0 * eps);
    const double abs_err = std::abs(numeric - analytic[i]);
    gap.max_abs = std::max(gap.max_abs, abs_err);
    gap.max_rel = std::max(gap.max_rel, abs_err / std::max(1e-8, std::abs(numeric) + std::abs(analytic[i])));
  }
  return gap;
}

}  // namespace emdot::oracle
