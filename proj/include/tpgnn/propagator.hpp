#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tpgnn/model.hpp"
#include "tpgnn/neighbor_index.hpp"
#include "tpgnn/tape.hpp"

namespace tpgnn {

/// Returns (msg_i, msg_j) = (z_i | e | z_j, z_j | e | z_i).
std::pair<std::vector<double>, std::vector<double>> generate_messages(std::span<const double> z_i,
                                                                      std::span<const double> edge_features,
                                                                      std::span<const double> z_j);

/// One receiver of a disseminated message. `paths` counts the distinct
/// neighbor-sample walks of length `hop` that reach the node; the message is
/// staged once per walk.
struct Delivery {
  NodeId node = 0;
  int hop = 0;
  std::uint64_t paths = 0;
  friend bool operator==(const Delivery&, const Delivery&) = default;
};

/// Breadth-first expansion from `anchor` over the most recent `neighbors`
/// entries (timestamp <= t) of each frontier node, up to `hops` levels. The
/// anchor never receives or relays its own message. Result is sorted by
/// (hop, node).
std::vector<Delivery> disseminate(const NeighborIndex& index, NodeId anchor, double t, std::size_t neighbors,
                                  int hops);

/// Elementwise mean. Throws UsageError on an empty list.
std::vector<double> combine_messages(std::span<const std::vector<double>> payloads);

/// Batched memory update for one layer. Rows of `memory` (M x d) and
/// `message` (M x (2d+d_e)) are independent nodes:
///   u = sigmoid(W_u m + U_u mem)        r = sigmoid(W_r m + U_r mem)
///   mhat = W_x m + r * (U_m mem)        mtilde = (1 - u) * tanh(mhat)
///   mem' = u * mem + mtilde
Var gru_update(Tape& tape, const Model& model, int layer, Var memory, Var message);

/// Single-node convenience wrapper evaluated without gradient recording.
std::vector<double> gru_update(const Model& model, int layer, std::span<const double> memory,
                               std::span<const double> message);

}  // namespace tpgnn
