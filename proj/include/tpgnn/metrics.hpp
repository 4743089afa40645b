#pragma once

#include <span>

namespace tpgnn {

/// Area under the precision-recall step curve, sum over thresholds of
/// (R_n - R_{n-1}) * P_n. Tied scores form a single threshold.
double average_precision(std::span<const double> scores, std::span<const int> labels);

/// Normalised Mann-Whitney U; a tied positive/negative pair counts 1/2.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Fraction of predictions (score >= threshold) that match the label.
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// Stops after `patience` consecutive epochs without strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Records one epoch's score; returns true when training should stop.
  bool update(double score);
  /// 1-based epoch of the best score so far (0 before any update).
  int best_epoch() const { return best_epoch_; }
  double best_score() const { return best_; }
  int epochs_seen() const { return epochs_; }
  bool improved_last() const { return improved_last_; }

 private:
  int patience_;
  int epochs_ = 0;
  int best_epoch_ = 0;
  int stale_ = 0;
  double best_ = 0.0;
  bool improved_last_ = false;
};

}  // namespace tpgnn
