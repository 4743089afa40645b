#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tpgnn/events.hpp"
#include "tpgnn/model.hpp"
#include "tpgnn/tape.hpp"

namespace tpgnn {

/// Link decoder logits for stacked edge rows (z_i | e | z_j): E x 1.
Var link_logits(Tape& tape, const Model& model, Var edges);
/// Node decoder logits for stacked representations: M x classes.
Var node_logits(Tape& tape, const Model& model, Var representations);

/// sigmoid(MLP(z_i | e | z_j)).
double edge_score(std::span<const double> z_i, std::span<const double> edge_features, std::span<const double> z_j,
                  const Model& model);

/// Mean over pairs of -[log p_pos + log(1 - p_neg)], probabilities clamped
/// to [1e-7, 1 - 1e-7].
double link_loss(std::span<const double> pos_probs, std::span<const double> neg_probs);

/// Contiguous id range of candidate negative destinations.
struct NodeRange {
  NodeId first = 0;
  std::size_t count = 0;
  bool contains(NodeId n) const { return n >= first && n - first < count; }
};

/// One draw per positive destination, uniform over `universe` minus that
/// destination. Throws UsageError when no alternative exists.
std::vector<NodeId> sample_negatives(std::span<const NodeId> positive_dsts, NodeRange universe,
                                     std::mt19937_64& rng);

}  // namespace tpgnn
