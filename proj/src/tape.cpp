#include "tpgnn/tape.hpp"

#include <algorithm>

#include "tpgnn/errors.hpp"

namespace tpgnn {

const Tensor& Var::value() const { return tape_->value(*this); }

Tape::Tape(bool record_gradients, bool train, std::uint64_t seed)
    : record_gradients_(record_gradients), train_(train), rng_(seed) {}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), std::nullopt, false, nullptr});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), std::nullopt, record_gradients_, nullptr});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::param(const ParamStore& store, ParamId id) {
  if (bound_store_ != nullptr && bound_store_ != &store) {
    throw UsageError("a tape can only bind parameters from one ParamStore");
  }
  bound_store_ = &store;
  for (const auto& [pid, node] : param_vars_) {
    if (pid == id) return Var(this, node);
  }
  nodes_.push_back(Node{store[id], std::nullopt, record_gradients_, nullptr});
  const auto node = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_vars_.emplace_back(id, node);
  return Var(this, node);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward backward) {
  bool needs = false;
  if (record_gradients_) {
    for (const Var& in : inputs) {
      if (in.tape() != this) throw UsageError("op mixes Vars from different tapes");
      needs = needs || nodes_[in.id()].needs_grad;
    }
  }
  nodes_.push_back(Node{std::move(value), std::nullopt, needs, needs ? std::move(backward) : nullptr});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad) return *n.grad;
  return Tensor(n.value.rows(), n.value.cols());
}

Tensor* Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id()];
  if (!n.needs_grad) return nullptr;
  if (!n.grad) n.grad.emplace(n.value.rows(), n.value.cols());
  return &*n.grad;
}

void Tape::accumulate(Var v, const Tensor& g) {
  Tensor* buf = grad_buffer(v);
  if (buf == nullptr) return;
  auto dst = buf->data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw UsageError("loss was not recorded on this tape");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw UsageError("backward requires a scalar loss, got shape " + lv.shape_string());
  }
  if (!record_gradients_) throw UsageError("backward on a tape that does not record gradients");
  for (auto& n : nodes_) n.grad.reset();
  if (!nodes_[loss.id()].needs_grad) return;
  nodes_[loss.id()].grad.emplace(1, 1, 1.0);
  for (std::int64_t i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.grad || !n.backward) continue;
    n.backward(*this, n.value, *n.grad);
  }
}

GradMap Tape::param_grads(const ParamStore& store) const {
  GradMap grads = zero_grads(store);
  if (bound_store_ != nullptr && bound_store_ != &store) return grads;
  for (const auto& [pid, node] : param_vars_) {
    if (nodes_[node].grad) grads[pid] = *nodes_[node].grad;
  }
  return grads;
}

}  // namespace tpgnn
