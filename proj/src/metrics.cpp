#include "emdot/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "emdot/error.hpp"

namespace emdot::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b || a == 0) throw ShapeError("scores and labels must have equal nonzero length");
}

MetricValue count_classes(std::span<const std::uint8_t> labels) {
  MetricValue m;
  for (auto y : labels) (y ? m.n_pos : m.n_neg)++;
  if (m.n_pos == 0 || m.n_neg == 0) m.flag = Flag::SingleClass;
  return m;
}

std::vector<std::size_t> order_by_score(std::span<const double> scores, bool descending) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (descending)
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  else
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

MetricValue auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size());
  MetricValue m = count_classes(labels);
  if (m.flag != Flag::None) return m;

  // Sweep ascending; for a tie block, every positive beats all negatives
  // below the block and ties with the block's negatives. Counted in
  // half-units so the result is an exact integer ratio.
  const auto order = order_by_score(scores, false);
  std::uint64_t twice_wins = 0;
  std::uint64_t negatives_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0, neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? pos : neg)++;
      ++j;
    }
    twice_wins += pos * (2 * negatives_below + neg);
    negatives_below += neg;
    i = j;
  }
  m.value = static_cast<double>(twice_wins) / (2.0 * static_cast<double>(m.n_pos) * static_cast<double>(m.n_neg));
  return m;
}

MetricValue auprc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size());
  MetricValue m = count_classes(labels);
  if (m.flag != Flag::None) return m;

  const auto order = order_by_score(scores, true);
  std::size_t tp = 0, fp = 0;
  double prev_recall = 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] ? tp : fp)++;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(m.n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  m.value = area;
  return m;
}

MetricValue weighted_multilabel_auroc(std::span<const std::vector<double>> scores,
                                      std::span<const std::vector<std::uint8_t>> labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw ShapeError("weighted AUROC needs matching, nonempty label sets");
  MetricValue out;
  double weighted = 0.0;
  double total_pos = 0.0;
  for (std::size_t l = 0; l < scores.size(); ++l) {
    const auto a = auroc(scores[l], labels[l]);
    out.n_pos += a.n_pos;
    out.n_neg += a.n_neg;
    if (!a.defined()) continue;
    weighted += static_cast<double>(a.n_pos) * a.value;
    total_pos += static_cast<double>(a.n_pos);
  }
  if (total_pos == 0.0) {
    out.flag = Flag::SingleClass;
    return out;
  }
  out.value = weighted / total_pos;
  return out;
}

double prevalence(std::span<const std::uint8_t> labels) {
  if (labels.empty()) throw ShapeError("prevalence of an empty label vector");
  std::size_t pos = 0;
  for (auto y : labels) pos += y != 0;
  return static_cast<double>(pos) / static_cast<double>(labels.size());
}

}  // namespace emdot::metrics
