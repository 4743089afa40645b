#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpgnn/decoder.hpp"
#include "tpgnn/events.hpp"
#include "tpgnn/memory_store.hpp"
#include "tpgnn/model.hpp"
#include "tpgnn/neighbor_index.hpp"
#include "tpgnn/optim.hpp"

namespace tpgnn {

enum class Task { link, node };
enum class NegativeFeatures { reuse, zeros };

struct TrainOptions {
  std::size_t batch_size = 200;
  std::size_t neighbors = 20;
  double learning_rate = 1e-4;
  NegativeFeatures negative_features = NegativeFeatures::reuse;
  std::uint64_t seed = 0;
};

/// Per-epoch (or per-evaluation) summary.
struct RunMetrics {
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  double accuracy = 0.0;
  double ap = 0.0;
  double auc = 0.0;
  double train_seconds = 0.0;
  double infer_ms_per_batch = 0.0;   // encode + decode
  double update_ms_per_batch = 0.0;  // drain, commit, index insert, dissemination
  std::size_t batches = 0;
  std::size_t events = 0;
};

/// Scores one positive event and its sampled negative.
struct EventScore {
  std::size_t event = 0;
  NodeId negative = 0;
  double positive_prob = 0.0;
  double negative_prob = 0.0;
};

/// Raised when a batch produces a non-finite loss or representation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything that evolves while streaming events, besides parameters.
struct StreamState {
  MemoryStore memory;
  NeighborIndex index;
  friend bool operator==(const StreamState&, const StreamState&) = default;
};

/// Drives the batch lifecycle over an EventLog. Per batch:
///  1. drain mailboxes of touched nodes through the per-layer GRU (on tape)
///  2. encode touched nodes
///  3. decode, loss, backprop and one Adam step (training only)
///  4. commit memories and cache representations, detached
///  5. insert the batch edges into the neighbor index
///  6. generate messages and stage them along k-hop neighbor walks
class Trainer {
 public:
  Trainer(const EventLog& log, Model model, TrainOptions options);

  /// Fresh memories and an empty neighbor index.
  void reset_state();
  StreamState snapshot() const { return state_; }
  void restore(StreamState s) { state_ = std::move(s); }

  /// Link-prediction training pass over `split`.
  RunMetrics train_epoch(Split split, int epoch = 0);
  /// Streams `split` without touching parameters. Link task reports accuracy
  /// and AP (and AUC); node task reports the node decoder's ROC-AUC over
  /// labeled events. Per-event link scores are appended to `scores`.
  RunMetrics evaluate(Split split, Task task = Task::link, std::vector<EventScore>* scores = nullptr);
  /// Streams `split` updating only the node decoder.
  RunMetrics train_node_epoch(Split split, int epoch = 0);

  Model& model() { return model_; }
  const Model& model() const { return model_; }
  AdamState& adam() { return adam_; }
  const AdamState& adam() const { return adam_; }
  StreamState& state() { return state_; }
  const StreamState& state() const { return state_; }
  const TrainOptions& options() const { return options_; }
  const EventLog& log() const { return *log_; }
  std::uint64_t steps() const { return adam_.step; }

 private:
  enum class Mode { train_link, eval_link, train_node, eval_node };
  struct BatchResult {
    double loss = 0.0;
    double infer_seconds = 0.0;
    double update_seconds = 0.0;
  };
  struct Accumulator;

  BatchResult process_batch(const Batch& batch, Mode mode, std::mt19937_64& negative_rng, Accumulator& acc,
                            std::size_t batch_id);
  RunMetrics run(Split split, Mode mode, int epoch, std::vector<EventScore>* scores);

  const EventLog* log_;
  Model model_;
  TrainOptions options_;
  AdamState adam_;
  AdamState node_adam_;
  StreamState state_;
  std::uint64_t dropout_counter_ = 0;
};

struct FitOptions {
  TrainOptions train;
  Task task = Task::link;
  int patience = 5;
  int max_epochs = 50;
  /// Epochs for the node-decoder phase (node task only).
  int node_max_epochs = 50;
};

/// Parameters, optimiser and stream state at a point in a run.
struct Checkpoint {
  ModelDims dims;
  ParamStore params;
  AdamState adam;
  StreamState state;
  std::uint64_t cursor = 0;  // next event index in the log
  int epoch = 0;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

Checkpoint make_checkpoint(const Trainer& trainer, std::uint64_t cursor, int epoch);
void load_checkpoint(Trainer& trainer, const Checkpoint& ckpt);

struct FitResult {
  std::vector<RunMetrics> history;  // alternating train / val records
  int best_epoch = 0;
  int epochs_run = 0;
  RunMetrics test;
  Checkpoint best;
};

using MetricsCallback = std::function<void(const RunMetrics&)>;

/// Trains with early stopping on validation AP (or, for the node task, a
/// second phase with early stopping on validation AUC), restores the best
/// checkpoint and evaluates the test split once.
FitResult fit(const EventLog& log, const ModelDims& dims, const FitOptions& options,
              const MetricsCallback& on_metrics = {});

}  // namespace tpgnn
