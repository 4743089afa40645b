#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tpgnn/memory_store.hpp"
#include "tpgnn/model.hpp"
#include "tpgnn/tape.hpp"

namespace tpgnn {

/// Encoder input for one node: row 0 is the cached previous representation,
/// rows 1..k the n-hop memories. Values are copied as-is.
struct TokenSequence {
  Tensor tokens;          // (k+1) x d
  Tensor position_codes;  // (k+1) x (k+1) one-hot rows
};

TokenSequence build_token_sequence(const NodeState& state);

/// Scalar layer bias for one token position from its one-hot code:
/// w2 . relu(onehot W1 + b1) + b2.
double layer_bias(std::span<const double> one_hot, const Model& model, std::size_t block = 0);

/// Biases of every position as a 1 x (k+1) row; zeros when layer attention
/// is disabled.
Var layer_biases(Tape& tape, const Model& model, std::size_t block);

struct AttentionTrace {
  std::vector<Var> weights;  // per head, (M*(k+1)) x (k+1), before dropout
};

/// Multi-head self-attention over each node's k+1 tokens (the rows of
/// `tokens` are grouped per node), with the layer bias added to every logit
/// column, output projection and residual.
Var attend(Tape& tape, const Model& model, std::size_t block, Var tokens, Var biases,
           AttentionTrace* trace = nullptr);

/// Full node-wise encoder: attention, layernorm, FFN with residual,
/// layernorm per block, then mean pooling over tokens. `tokens` stacks M
/// nodes of k+1 rows each; the result is M x d.
Var encode(Tape& tape, const Model& model, Var tokens);

/// Representation of a single node state.
std::vector<double> encode_node(const NodeState& state, const Model& model, bool train = false,
                                std::uint64_t dropout_seed = 0);

}  // namespace tpgnn
