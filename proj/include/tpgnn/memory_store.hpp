#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "tpgnn/events.hpp"

namespace tpgnn {

/// Pending raw messages for one (node, layer), kept as a running mean.
struct MailboxSlot {
  std::vector<double> mean;
  std::uint64_t count = 0;
  double latest_t = -std::numeric_limits<double>::infinity();

  bool empty() const { return count == 0; }
  friend bool operator==(const MailboxSlot&, const MailboxSlot&) = default;
};

struct NodeState {
  std::vector<double> prev_repr;
  std::vector<std::vector<double>> memories;  // memories[n-1] is the n-hop memory
  std::vector<double> last_update;
  std::vector<MailboxSlot> mailboxes;

  friend bool operator==(const NodeState&, const NodeState&) = default;
};

struct DrainedMessage {
  int layer = 0;  // 1-based
  std::vector<double> combined;
  std::uint64_t count = 0;
  double t = 0.0;
};

/// Owns the per-node state and the deferred-update lifecycle: messages are
/// staged into mailboxes, drained when the node is next touched, and the
/// resulting memory is committed back as a plain (detached) value.
///
/// Layers are 1-based throughout this interface.
class MemoryStore {
 public:
  MemoryStore() = default;
  MemoryStore(std::size_t num_nodes, int layers, std::size_t dim, std::size_t message_dim);

  /// Zero state on first call; later calls return the existing state.
  NodeState& init_node(NodeId node);
  bool initialized(NodeId node) const;
  /// The node's state, or the shared all-zero state if it was never touched.
  const NodeState& state(NodeId node) const;

  /// Folds `weight` copies of `message` into the (node, layer) running mean.
  void stage_message(NodeId node, int layer, std::span<const double> message, double t, std::uint64_t weight = 1);
  /// Nonempty slots in ascending layer order; every slot is reset.
  std::vector<DrainedMessage> drain_mailboxes(NodeId node);
  void commit(NodeId node, int layer, std::span<const double> memory, double t);
  void cache_repr(NodeId node, std::span<const double> z);

  int layers() const { return layers_; }
  std::size_t dim() const { return dim_; }
  std::size_t message_dim() const { return message_dim_; }
  std::size_t num_nodes() const { return states_.size(); }
  std::uint64_t total_pending() const { return pending_; }
  /// k*d + d + k*(2d+d_e): the float payload of one node, independent of degree.
  std::size_t floats_per_node() const;
  /// Floats actually held by the node right now (0 before init).
  std::size_t floats_held(NodeId node) const;

  /// Called after every commit with (node, layer); used for instrumentation.
  void set_commit_listener(std::function<void(NodeId, int)> listener) { listener_ = std::move(listener); }

  void reset();
  /// Installs a complete node state (checkpoint restore).
  void restore_node(NodeId node, NodeState state);

  bool operator==(const MemoryStore& other) const;

 private:
  void check_layer(int layer) const;
  NodeState fresh_state() const;

  std::vector<NodeState> states_;
  std::vector<std::uint8_t> initialized_;
  NodeState zero_state_;
  int layers_ = 0;
  std::size_t dim_ = 0;
  std::size_t message_dim_ = 0;
  std::uint64_t pending_ = 0;
  std::function<void(NodeId, int)> listener_;
};

}  // namespace tpgnn
