#include "tpgnn/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "tpgnn/errors.hpp"

namespace tpgnn {
namespace {

void check_binary(std::span<const double> scores, std::span<const int> labels, const char* what) {
  if (scores.size() != labels.size()) throw UsageError(std::string(what) + ": scores and labels differ in length");
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw UsageError(std::string(what) + ": labels must be 0 or 1");
    pos += static_cast<std::size_t>(l);
  }
  if (pos == 0 || pos == labels.size()) {
    throw UsageError(std::string(what) + ": needs at least one positive and one negative label");
  }
}

std::vector<std::size_t> order_by_score_desc(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels, "average_precision");
  const auto order = order_by_score_desc(scores);
  const double total_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (labels[order[i]] == 1) tp += 1.0; else fp += 1.0;
    const bool boundary = i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]];
    if (!boundary) continue;
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return ap;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels, "roc_auc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of (1-based, tie-averaged) ranks of the positives.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t q = i; q <= j; ++q)
      if (labels[order[q]] == 1) rank_sum += avg_rank;
    i = j + 1;
  }
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double neg = static_cast<double>(labels.size()) - pos;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size() || scores.empty()) throw UsageError("accuracy: empty or mismatched input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) hits += ((scores[i] >= threshold) == (labels[i] == 1)) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

bool EarlyStopping::update(double score) {
  ++epochs_;
  improved_last_ = best_epoch_ == 0 || score > best_;
  if (improved_last_) {
    best_ = score;
    best_epoch_ = epochs_;
    stale_ = 0;
  } else {
    ++stale_;
  }
  return stale_ >= patience_;
}

}  // namespace tpgnn
