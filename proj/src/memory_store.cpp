#include "tpgnn/memory_store.hpp"

#include <algorithm>
#include <string>

#include "tpgnn/errors.hpp"

namespace tpgnn {

MemoryStore::MemoryStore(std::size_t num_nodes, int layers, std::size_t dim, std::size_t message_dim)
    : states_(num_nodes), initialized_(num_nodes, 0), layers_(layers), dim_(dim), message_dim_(message_dim) {
  if (layers < 1) throw ConfigError("memory store needs at least one layer");
  zero_state_ = fresh_state();
}

NodeState MemoryStore::fresh_state() const {
  NodeState s;
  s.prev_repr.assign(dim_, 0.0);
  s.memories.assign(static_cast<std::size_t>(layers_), std::vector<double>(dim_, 0.0));
  s.last_update.assign(static_cast<std::size_t>(layers_), -std::numeric_limits<double>::infinity());
  s.mailboxes.resize(static_cast<std::size_t>(layers_));
  for (auto& slot : s.mailboxes) slot.mean.assign(message_dim_, 0.0);
  return s;
}

NodeState& MemoryStore::init_node(NodeId node) {
  if (node >= states_.size()) {
    throw UsageError("node " + std::to_string(node) + " outside a store of " + std::to_string(states_.size()));
  }
  if (!initialized_[node]) {
    states_[node] = fresh_state();
    initialized_[node] = 1;
  }
  return states_[node];
}

bool MemoryStore::initialized(NodeId node) const { return node < states_.size() && initialized_[node]; }

const NodeState& MemoryStore::state(NodeId node) const {
  return initialized(node) ? states_[node] : zero_state_;
}

void MemoryStore::check_layer(int layer) const {
  if (layer < 1 || layer > layers_) {
    throw UsageError("layer " + std::to_string(layer) + " outside 1.." + std::to_string(layers_));
  }
}

void MemoryStore::stage_message(NodeId node, int layer, std::span<const double> message, double t,
                                std::uint64_t weight) {
  check_layer(layer);
  if (message.size() != message_dim_) {
    throw ConfigError("stage_message: message of length " + std::to_string(message.size()) + ", expected " +
                      std::to_string(message_dim_));
  }
  if (weight == 0) return;
  MailboxSlot& slot = init_node(node).mailboxes[static_cast<std::size_t>(layer - 1)];
  const std::uint64_t total = slot.count + weight;
  const double share = static_cast<double>(weight) / static_cast<double>(total);
  for (std::size_t i = 0; i < message_dim_; ++i) slot.mean[i] += share * (message[i] - slot.mean[i]);
  slot.count = total;
  slot.latest_t = std::max(slot.latest_t, t);
  pending_ += weight;
}

std::vector<DrainedMessage> MemoryStore::drain_mailboxes(NodeId node) {
  std::vector<DrainedMessage> out;
  if (!initialized(node)) return out;
  auto& slots = states_[node].mailboxes;
  for (std::size_t n = 0; n < slots.size(); ++n) {
    MailboxSlot& slot = slots[n];
    if (slot.empty()) continue;
    out.push_back(DrainedMessage{static_cast<int>(n + 1), slot.mean, slot.count, slot.latest_t});
    pending_ -= slot.count;
    std::fill(slot.mean.begin(), slot.mean.end(), 0.0);
    slot.count = 0;
    slot.latest_t = -std::numeric_limits<double>::infinity();
  }
  return out;
}

void MemoryStore::commit(NodeId node, int layer, std::span<const double> memory, double t) {
  check_layer(layer);
  if (memory.size() != dim_) throw ConfigError("commit: memory of length " + std::to_string(memory.size()));
  NodeState& s = init_node(node);
  const auto idx = static_cast<std::size_t>(layer - 1);
  if (t < s.last_update[idx]) {
    throw UsageError("commit: node " + std::to_string(node) + " layer " + std::to_string(layer) +
                     " would move last_update backwards");
  }
  s.memories[idx].assign(memory.begin(), memory.end());
  s.last_update[idx] = t;
  if (listener_) listener_(node, layer);
}

void MemoryStore::cache_repr(NodeId node, std::span<const double> z) {
  if (z.size() != dim_) throw ConfigError("cache_repr: representation of length " + std::to_string(z.size()));
  init_node(node).prev_repr.assign(z.begin(), z.end());
}

std::size_t MemoryStore::floats_per_node() const {
  const auto k = static_cast<std::size_t>(layers_);
  return k * dim_ + dim_ + k * message_dim_;
}

std::size_t MemoryStore::floats_held(NodeId node) const {
  if (!initialized(node)) return 0;
  const NodeState& s = states_[node];
  std::size_t n = s.prev_repr.size();
  for (const auto& m : s.memories) n += m.size();
  for (const auto& slot : s.mailboxes) n += slot.mean.size();
  return n;
}

void MemoryStore::reset() {
  for (std::size_t i = 0; i < states_.size(); ++i) {
    states_[i] = NodeState{};
    initialized_[i] = 0;
  }
  pending_ = 0;
}

void MemoryStore::restore_node(NodeId node, NodeState state) {
  NodeState& s = init_node(node);
  if (state.prev_repr.size() != dim_ || state.memories.size() != static_cast<std::size_t>(layers_) ||
      state.last_update.size() != state.memories.size() || state.mailboxes.size() != state.memories.size()) {
    throw ConfigError("restore_node: state does not match the store layout");
  }
  for (const auto& slot : s.mailboxes) pending_ -= slot.count;
  for (const auto& slot : state.mailboxes) pending_ += slot.count;
  s = std::move(state);
}

bool MemoryStore::operator==(const MemoryStore& other) const {
  return states_ == other.states_ && initialized_ == other.initialized_ && layers_ == other.layers_ &&
         dim_ == other.dim_ && message_dim_ == other.message_dim_ && pending_ == other.pending_;
}

}  // namespace tpgnn
