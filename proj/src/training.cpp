#include "tpgnn/training.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "tpgnn/encoder.hpp"
#include "tpgnn/errors.hpp"
#include "tpgnn/metrics.hpp"
#include "tpgnn/ops.hpp"
#include "tpgnn/propagator.hpp"

namespace tpgnn {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

StreamState fresh_state(const EventLog& log, const ModelDims& dims) {
  return StreamState{MemoryStore(log.num_nodes(), dims.layers, dims.dim, dims.message_dim()),
                     NeighborIndex(log.num_nodes())};
}

bool has_both_classes(const std::vector<int>& labels) {
  bool pos = false, neg = false;
  for (int l : labels) (l == 1 ? pos : neg) = true;
  return pos && neg;
}

}  // namespace

struct Trainer::Accumulator {
  std::vector<double> scores;
  std::vector<int> labels;
  double loss_sum = 0.0;
  std::size_t loss_weight = 0;
  double infer_seconds = 0.0;
  double update_seconds = 0.0;
  std::size_t batches = 0;
  std::vector<EventScore>* event_scores = nullptr;
};

Trainer::Trainer(const EventLog& log, Model model, TrainOptions options)
    : log_(&log), model_(std::move(model)), options_(options) {
  if (model_.dims.edge_dim != log.feature_dim()) {
    throw ConfigError("model expects " + std::to_string(model_.dims.edge_dim) + " edge features, log has " +
                      std::to_string(log.feature_dim()));
  }
  if (options_.batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (options_.neighbors == 0) throw ConfigError("neighbor count must be at least 1");
  adam_ = AdamState(model_.params, options_.learning_rate);
  node_adam_ = AdamState(model_.params, options_.learning_rate);
  reset_state();
}

void Trainer::reset_state() { state_ = fresh_state(*log_, model_.dims); }

RunMetrics Trainer::train_epoch(Split split, int epoch) { return run(split, Mode::train_link, epoch, nullptr); }

RunMetrics Trainer::evaluate(Split split, Task task, std::vector<EventScore>* scores) {
  return run(split, task == Task::link ? Mode::eval_link : Mode::eval_node, 0, scores);
}

RunMetrics Trainer::train_node_epoch(Split split, int epoch) { return run(split, Mode::train_node, epoch, nullptr); }

RunMetrics Trainer::run(Split split, Mode mode, int epoch, std::vector<EventScore>* scores) {
  const bool training = mode == Mode::train_link || mode == Mode::train_node;
  // Negative draws depend only on the seed and the position in the log, so
  // repeated evaluations of one split see the same negatives.
  const std::uint64_t salt = training ? 0x7261696eULL + static_cast<std::uint64_t>(epoch)
                                      : 0x6576616cULL + split.begin * 1000003ULL + split.end;
  std::mt19937_64 negative_rng(derive_seed(options_.seed, salt));
  Accumulator acc;
  acc.event_scores = scores;
  const auto start = Clock::now();
  BatchCursor cursor(*log_, split, options_.batch_size);
  std::size_t batch_id = 0;
  while (auto batch = cursor.next_batch()) {
    const BatchResult r = process_batch(*batch, mode, negative_rng, acc, batch_id++);
    acc.infer_seconds += r.infer_seconds;
    acc.update_seconds += r.update_seconds;
    ++acc.batches;
  }
  RunMetrics m;
  m.epoch = epoch;
  m.split = mode == Mode::train_link || mode == Mode::train_node ? "train" : "eval";
  m.train_seconds = seconds_since(start);
  m.batches = acc.batches;
  m.events = split.size();
  if (acc.batches > 0) {
    m.infer_ms_per_batch = 1e3 * acc.infer_seconds / static_cast<double>(acc.batches);
    m.update_ms_per_batch = 1e3 * acc.update_seconds / static_cast<double>(acc.batches);
  }
  if (acc.loss_weight > 0) m.loss = acc.loss_sum / static_cast<double>(acc.loss_weight);
  const bool link = mode == Mode::train_link || mode == Mode::eval_link;
  if (link) {
    if (!acc.scores.empty()) {
      m.accuracy = accuracy(acc.scores, acc.labels);
      m.ap = average_precision(acc.scores, acc.labels);
      m.auc = roc_auc(acc.scores, acc.labels);
    }
  } else {
    if (mode == Mode::eval_node && acc.labels.empty()) {
      throw UsageError("node evaluation: split has no labeled events");
    }
    if (has_both_classes(acc.labels)) {
      m.auc = roc_auc(acc.scores, acc.labels);
      m.ap = average_precision(acc.scores, acc.labels);
    } else if (mode == Mode::eval_node) {
      throw UsageError("node evaluation: labeled events of only one class");
    }
    if (!acc.scores.empty()) m.accuracy = accuracy(acc.scores, acc.labels);
  }
  return m;
}

Trainer::BatchResult Trainer::process_batch(const Batch& batch, Mode mode, std::mt19937_64& negative_rng,
                                            Accumulator& acc, std::size_t batch_id) {
  const EventLog& log = *log_;
  const ModelDims& dims = model_.dims;
  const bool link = mode == Mode::train_link || mode == Mode::eval_link;
  const bool learn_link = mode == Mode::train_link;
  const std::size_t tk = dims.tokens(), d = dims.dim, de = dims.edge_dim;
  const auto layers = static_cast<std::size_t>(dims.layers);
  const std::size_t count = batch.size();
  MemoryStore& memory = state_.memory;
  BatchResult result;

  std::vector<NodeId> negatives;
  if (link) {
    std::vector<NodeId> dsts(count);
    for (std::size_t i = 0; i < count; ++i) dsts[i] = log.dst(batch.begin + i);
    negatives = sample_negatives(dsts, NodeRange{log.first_dst(), log.num_dst()}, negative_rng);
  }

  // Touched nodes in first-appearance order; each is encoded once from its
  // pre-batch state.
  std::vector<NodeId> touched;
  std::unordered_map<NodeId, std::uint32_t> row_of;
  auto row = [&](NodeId n) {
    auto [it, inserted] = row_of.emplace(n, static_cast<std::uint32_t>(touched.size()));
    if (inserted) touched.push_back(n);
    return it->second;
  };
  std::vector<std::uint32_t> src_rows(count), dst_rows(count), neg_rows(link ? count : 0);
  for (std::size_t i = 0; i < count; ++i) {
    src_rows[i] = row(log.src(batch.begin + i));
    dst_rows[i] = row(log.dst(batch.begin + i));
    if (link) neg_rows[i] = row(negatives[i]);
  }
  const std::size_t rows = touched.size();

  // Step 1: deferred memory update through the per-layer GRU.
  auto phase = Clock::now();
  const std::uint64_t dropout_seed = learn_link ? derive_seed(options_.seed, 0x64726f70ULL + dropout_counter_++) : 0;
  Tape tape(learn_link, learn_link, dropout_seed);
  struct Pending {
    std::uint32_t row;
    std::vector<double> message;
    double t;
  };
  std::vector<std::vector<Pending>> per_layer(layers);
  Tensor base(rows * tk, d);
  for (std::size_t m = 0; m < rows; ++m) {
    const NodeState& s = memory.init_node(touched[m]);
    std::copy(s.prev_repr.begin(), s.prev_repr.end(), base.row_span(m * tk).begin());
    for (std::size_t n = 0; n < layers; ++n)
      std::copy(s.memories[n].begin(), s.memories[n].end(), base.row_span(m * tk + n + 1).begin());
    for (DrainedMessage& dm : memory.drain_mailboxes(touched[m])) {
      per_layer[static_cast<std::size_t>(dm.layer - 1)].push_back(
          Pending{static_cast<std::uint32_t>(m), std::move(dm.combined), dm.t});
    }
  }
  std::vector<Var> sources{tape.constant(std::move(base))};
  std::vector<std::pair<std::uint32_t, std::uint32_t>> refs(rows * tk);
  for (std::size_t r = 0; r < refs.size(); ++r) refs[r] = {0, static_cast<std::uint32_t>(r)};
  struct Update {
    std::uint32_t row;
    int layer;
    std::uint32_t source;
    std::uint32_t source_row;
    double t;
  };
  std::vector<Update> updates;
  for (std::size_t n = 0; n < layers; ++n) {
    const auto& pending = per_layer[n];
    if (pending.empty()) continue;
    Tensor prev(pending.size(), d), messages(pending.size(), dims.message_dim());
    for (std::size_t i = 0; i < pending.size(); ++i) {
      const auto& mem = memory.state(touched[pending[i].row]).memories[n];
      std::copy(mem.begin(), mem.end(), prev.row_span(i).begin());
      std::copy(pending[i].message.begin(), pending[i].message.end(), messages.row_span(i).begin());
    }
    const int layer = static_cast<int>(n + 1);
    sources.push_back(
        gru_update(tape, model_, layer, tape.constant(std::move(prev)), tape.constant(std::move(messages))));
    const auto source = static_cast<std::uint32_t>(sources.size() - 1);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      refs[pending[i].row * tk + n + 1] = {source, static_cast<std::uint32_t>(i)};
      updates.push_back(Update{pending[i].row, layer, source, static_cast<std::uint32_t>(i), pending[i].t});
    }
  }
  const Var tokens = sources.size() == 1 ? sources.front() : ops::gather_rows_multi(sources, refs);
  result.update_seconds += seconds_since(phase);

  // Steps 2-3: encode and score.
  phase = Clock::now();
  const Var z = encode(tape, model_, tokens);
  std::optional<Var> loss;
  if (link) {
    Tensor pos_features(count, de), neg_features(count, de);
    for (std::size_t i = 0; i < count; ++i) {
      const auto f = log.features(batch.begin + i);
      for (std::size_t c = 0; c < de; ++c) {
        pos_features(i, c) = f[c];
        if (options_.negative_features == NegativeFeatures::reuse) neg_features(i, c) = f[c];
      }
    }
    const Var src_z = ops::gather_rows(z, src_rows);
    const std::array<Var, 3> pos_parts{src_z, tape.constant(std::move(pos_features)), ops::gather_rows(z, dst_rows)};
    const std::array<Var, 3> neg_parts{src_z, tape.constant(std::move(neg_features)), ops::gather_rows(z, neg_rows)};
    const Var pos_prob = ops::sigmoid(link_logits(tape, model_, ops::concat_cols(pos_parts)));
    const Var neg_prob = ops::sigmoid(link_logits(tape, model_, ops::concat_cols(neg_parts)));
    loss = ops::link_loss(pos_prob, neg_prob);
    result.infer_seconds += seconds_since(phase);

    const double loss_value = loss->value()[0];
    if (!std::isfinite(loss_value) || !z.value().all_finite()) {
      std::ostringstream msg;
      msg << "non-finite loss in batch " << batch_id << " (events " << batch.begin << ".." << batch.end
          << "); offending nodes:";
      for (std::size_t m = 0; m < rows; ++m) {
        bool bad = false;
        for (double v : z.value().row_span(m)) bad = bad || !std::isfinite(v);
        if (bad) msg << ' ' << touched[m];
      }
      throw NumericError(msg.str());
    }
    acc.loss_sum += loss_value * static_cast<double>(count);
    acc.loss_weight += count;
    for (std::size_t i = 0; i < count; ++i) {
      acc.scores.push_back(pos_prob.value()[i]);
      acc.labels.push_back(1);
      acc.scores.push_back(neg_prob.value()[i]);
      acc.labels.push_back(0);
      if (acc.event_scores) {
        acc.event_scores->push_back(
            EventScore{batch.begin + i, negatives[i], pos_prob.value()[i], neg_prob.value()[i]});
      }
    }
    if (learn_link) {
      tape.backward(*loss);
      adam_step(model_.params, tape.param_grads(model_.params), adam_);
    }
  } else {
    result.infer_seconds += seconds_since(phase);
    if (!z.value().all_finite()) throw NumericError("non-finite representation in batch " + std::to_string(batch_id));
    std::vector<std::uint32_t> labeled_rows;
    std::vector<int> labels;
    for (std::size_t i = 0; i < count; ++i) {
      if (const auto l = log.label(batch.begin + i)) {
        labeled_rows.push_back(src_rows[i]);
        labels.push_back(*l);
      }
    }
    if (!labeled_rows.empty()) {
      const bool learn = mode == Mode::train_node;
      Tape head(learn);
      const Var inputs = head.constant(ops::gather_rows(z, labeled_rows).value());
      const Var logits = node_logits(head, model_, inputs);
      const Var ce = ops::softmax_cross_entropy(logits, labels);
      const Var probs = ops::softmax_rows(logits);
      acc.loss_sum += ce.value()[0] * static_cast<double>(labels.size());
      acc.loss_weight += labels.size();
      for (std::size_t i = 0; i < labels.size(); ++i) {
        acc.scores.push_back(probs.value()(i, 1));
        acc.labels.push_back(labels[i]);
      }
      if (learn) {
        head.backward(ce);
        const auto active = model_.node_decoder_params();
        adam_step(model_.params, head.param_grads(model_.params), node_adam_, active);
      }
    }
  }

  // Step 4: commit detached values.
  phase = Clock::now();
  for (const Update& u : updates) {
    memory.commit(touched[u.row], u.layer, sources[u.source].value().row_span(u.source_row), u.t);
  }
  for (std::size_t m = 0; m < rows; ++m) memory.cache_repr(touched[m], z.value().row_span(m));

  // Step 5: index the batch edges.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t e = batch.begin + i;
    state_.index.insert_edge(log.src(e), log.dst(e), log.time(e), e);
  }

  // Step 6: generate and disseminate messages.
  std::vector<double> features(de);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t e = batch.begin + i;
    const auto f = log.features(e);
    std::copy(f.begin(), f.end(), features.begin());
    const auto [msg_src, msg_dst] =
        generate_messages(z.value().row_span(src_rows[i]), features, z.value().row_span(dst_rows[i]));
    const double t = log.time(e);
    for (const auto& [anchor, message] : {std::pair{log.src(e), &msg_src}, std::pair{log.dst(e), &msg_dst}}) {
      for (const Delivery& dl : disseminate(state_.index, anchor, t, options_.neighbors, dims.layers)) {
        memory.stage_message(dl.node, dl.hop, *message, t, dl.paths);
      }
    }
  }
  result.update_seconds += seconds_since(phase);
  if (loss) result.loss = loss->value()[0];
  return result;
}

Checkpoint make_checkpoint(const Trainer& trainer, std::uint64_t cursor, int epoch) {
  return Checkpoint{trainer.model().dims, trainer.model().params, trainer.adam(), trainer.state(), cursor, epoch};
}

void load_checkpoint(Trainer& trainer, const Checkpoint& ckpt) {
  if (!(ckpt.dims == trainer.model().dims)) throw ConfigError("checkpoint was written for different model sizes");
  if (ckpt.params.size() != trainer.model().params.size()) throw ConfigError("checkpoint parameter count differs");
  for (ParamId i = 0; i < ckpt.params.size(); ++i) {
    if (ckpt.params.name(i) != trainer.model().params.name(i) ||
        !ckpt.params[i].same_shape(trainer.model().params[i])) {
      throw ConfigError("checkpoint parameter " + ckpt.params.name(i) + " does not match the model");
    }
  }
  trainer.model().params = ckpt.params;
  trainer.adam() = ckpt.adam;
  trainer.restore(ckpt.state);
}

FitResult fit(const EventLog& log, const ModelDims& dims, const FitOptions& options,
              const MetricsCallback& on_metrics) {
  ModelDims sized = dims;
  sized.edge_dim = log.feature_dim();
  Trainer trainer(log, Model::create(sized, options.train.seed), options.train);
  const SplitSet splits = chronological_split(log);
  auto emit = [&](RunMetrics m, const char* split, FitResult& out) {
    m.split = split;
    out.history.push_back(m);
    if (on_metrics) on_metrics(m);
    return m;
  };

  FitResult result;
  EarlyStopping stopper(options.patience);
  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    trainer.reset_state();
    emit(trainer.train_epoch(splits.train, epoch), "train", result);
    RunMetrics val = trainer.evaluate(splits.val);
    val.epoch = epoch;
    emit(val, "val", result);
    result.epochs_run = epoch;
    const bool stop = stopper.update(val.ap);
    if (stopper.improved_last()) result.best = make_checkpoint(trainer, splits.val.end, epoch);
    if (stop) break;
  }
  result.best_epoch = stopper.best_epoch();
  load_checkpoint(trainer, result.best);

  if (options.task == Task::node) {
    EarlyStopping node_stopper(options.patience);
    std::optional<Checkpoint> node_best;
    for (int epoch = 1; epoch <= options.node_max_epochs; ++epoch) {
      trainer.reset_state();
      emit(trainer.train_node_epoch(splits.train, epoch), "node-train", result);
      RunMetrics val = trainer.evaluate(splits.val, Task::node);
      val.epoch = epoch;
      emit(val, "node-val", result);
      const bool stop = node_stopper.update(val.auc);
      if (node_stopper.improved_last()) node_best = make_checkpoint(trainer, splits.val.end, epoch);
      if (stop) break;
    }
    if (node_best) {
      result.best = *node_best;
      load_checkpoint(trainer, *node_best);
    }
  }

  RunMetrics test = trainer.evaluate(splits.test, options.task);
  test.epoch = result.best.epoch;
  result.test = emit(test, "test", result);
  return result;
}

}  // namespace tpgnn
