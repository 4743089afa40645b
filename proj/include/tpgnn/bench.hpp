#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tpgnn/config.hpp"
#include "tpgnn/events.hpp"
#include "tpgnn/training.hpp"

namespace tpgnn {

struct BenchPoint {
  std::string parameter;  // "k" or "B"
  std::size_t value = 0;
  double train_seconds_per_epoch = 0.0;  // median over epochs
  double infer_ms_per_batch = 0.0;       // median over evaluation passes
  double ap = 0.0;                       // test split, after the last epoch
  double accuracy = 0.0;
  double first_loss = 0.0;
  double last_loss = 0.0;
  std::size_t batches = 0;               // training batches per epoch
};

struct BenchReport {
  std::vector<BenchPoint> points;
};

struct BenchOptions {
  int epochs = 3;
};

/// Trains a fresh model for a fixed number of epochs and measures it. Each
/// epoch streams train then validation from an empty state; the test split
/// is streamed after the last validation pass. Timings cover the training
/// pass and the evaluation batches only.
BenchPoint bench_run(const EventLog& log, const Config& config, const BenchOptions& options,
                     const MetricsCallback& on_metrics = {});

BenchReport bench_depth(const EventLog& log, const Config& config, const std::vector<int>& k_values,
                        const BenchOptions& options, const MetricsCallback& on_metrics = {});
BenchReport bench_batch(const EventLog& log, const Config& config, const std::vector<std::size_t>& b_values,
                        const BenchOptions& options, const MetricsCallback& on_metrics = {});

void write_csv(std::ostream& out, const BenchReport& report);

}  // namespace tpgnn
