#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tpgnn/tape.hpp"

namespace tpgnn::ops {

// Every op checks operand shapes and throws ConfigError naming the op and
// both shapes on mismatch.

Var matmul(Var a, Var b);     // (m,n)x(n,p)
Var matmul_bt(Var a, Var b);  // (m,n)x(p,n)^T -> (m,p)
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);              // elementwise
Var add_rowvec(Var a, Var row);     // row (1,n) broadcast over rows of a (m,n)
Var mul_rowvec(Var a, Var row);
Var affine(Var a, double scale, double shift);  // scale*a + shift

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

Var concat_cols(std::span<const Var> parts);  // equal row counts
Var stack_rows(std::span<const Var> parts);   // equal column counts
Var gather_rows(Var a, std::span<const std::uint32_t> rows);
/// Row i of the result is row refs[i].second of sources[refs[i].first].
Var gather_rows_multi(std::span<const Var> sources,
                      std::span<const std::pair<std::uint32_t, std::uint32_t>> refs);

Var softmax_rows(Var a);
Var mean_rows(Var a);  // (m,n) -> (1,n)
Var mean_all(Var a);   // -> (1,1)
/// Zero-mean, unit-variance per row with epsilon inside the square root.
Var layernorm_rows(Var a, double eps = 1e-5);
/// Inverted dropout. Identity unless the tape is in training mode and p > 0.
Var dropout(Var a, double p);

// Block-diagonal helpers: a tall matrix is treated as consecutive groups of
// `block` rows, one group per node.
Var block_matmul_bt(Var a, Var b, std::size_t block);  // -> (M*block, block)
Var block_matmul(Var p, Var v, std::size_t block);     // (M*block,block)x(M*block,n)
Var block_mean_rows(Var a, std::size_t block);         // -> (M, n)

/// Mean over pairs of -[log p_pos + log(1 - p_neg)] with probabilities
/// clamped to [1e-7, 1 - 1e-7]. Inputs are equal-length column or row vectors.
Var link_loss(Var pos_probs, Var neg_probs);
/// Mean softmax cross-entropy of (m,C) logits against class labels.
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

inline constexpr double kProbabilityClamp = 1e-7;

}  // namespace tpgnn::ops
