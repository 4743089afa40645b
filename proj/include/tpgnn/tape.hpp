#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "tpgnn/params.hpp"
#include "tpgnn/tensor.hpp"

namespace tpgnn {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Reverse-mode differentiation record. Nodes are appended in evaluation
/// order, so the node list is always a topological order and backward
/// simply walks it in reverse.
///
/// A tape built with `record_gradients = false` still evaluates every op but
/// keeps no backward closures; this is the evaluation-mode path.
class Tape {
 public:
  /// Local gradient rule: receives the op's output value and the incoming
  /// gradient and accumulates into its inputs via `accumulate`.
  using Backward = std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;

  explicit Tape(bool record_gradients = true, bool train = false, std::uint64_t seed = 0);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf that collects gradient but belongs to no ParamStore.
  Var variable(Tensor value);
  /// Leaf bound to a parameter. Repeated calls for the same id return the
  /// same Var so gradient from every use lands in one buffer.
  Var param(const ParamStore& store, ParamId id);

  Var record(Tensor value, std::span<const Var> inputs, Backward backward);
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
  }

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }
  /// Gradient buffer for v after backward; an all-zero tensor if nothing
  /// reached it.
  Tensor grad(Var v) const;
  /// Adds g (same shape as v) into v's gradient buffer. No-op for nodes that
  /// do not need gradients.
  void accumulate(Var v, const Tensor& g);
  /// Direct access to v's gradient buffer, allocated on first use. Returns
  /// nullptr for nodes that do not need gradients.
  Tensor* grad_buffer(Var v);

  /// Throws UsageError unless loss is a 1x1 value recorded on this tape.
  void backward(Var loss);

  /// Gradients for every parameter of `store`; parameters that never entered
  /// this tape get zeros.
  GradMap param_grads(const ParamStore& store) const;

  bool records_gradients() const { return record_gradients_; }
  bool training() const { return train_; }
  std::mt19937_64& rng() { return rng_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::optional<Tensor> grad;
    bool needs_grad = false;
    Backward backward;
  };

  std::vector<Node> nodes_;
  std::vector<std::pair<ParamId, std::uint32_t>> param_vars_;
  const ParamStore* bound_store_ = nullptr;
  bool record_gradients_;
  bool train_;
  std::mt19937_64 rng_;
};

}  // namespace tpgnn
