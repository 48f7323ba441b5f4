#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace emdot::metrics {

enum class Flag { None, SingleClass };

struct MetricValue {
  double value = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  Flag flag = Flag::None;

  bool defined() const { return n_pos > 0 && n_neg > 0 && flag == Flag::None; }
};

/// Mann-Whitney AUROC, (wins + ties/2) / (n_pos * n_neg), in O(n log n).
MetricValue auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Step-wise average precision: sum over distinct thresholds (descending) of
/// (R_i - R_{i-1}) * P_i, tied scores handled as one block.
MetricValue auprc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Prevalence-weighted AUROC over independent binary tasks. scores[l] and
/// labels[l] hold column l. Labels with an undefined AUROC are dropped and
/// the weights renormalised over the rest.
MetricValue weighted_multilabel_auroc(std::span<const std::vector<double>> scores,
                                      std::span<const std::vector<std::uint8_t>> labels);

double prevalence(std::span<const std::uint8_t> labels);

}  // namespace emdot::metrics
