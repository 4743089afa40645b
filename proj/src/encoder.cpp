#include "tpgnn/encoder.hpp"

#include <cmath>
#include <string>

#include "tpgnn/errors.hpp"
#include "tpgnn/ops.hpp"

namespace tpgnn {

TokenSequence build_token_sequence(const NodeState& state) {
  const std::size_t d = state.prev_repr.size();
  const std::size_t count = state.memories.size() + 1;
  TokenSequence seq{Tensor(count, d), Tensor::identity(count)};
  std::copy(state.prev_repr.begin(), state.prev_repr.end(), seq.tokens.row_span(0).begin());
  for (std::size_t n = 0; n < state.memories.size(); ++n) {
    if (state.memories[n].size() != d) throw ConfigError("build_token_sequence: memory width differs from d");
    std::copy(state.memories[n].begin(), state.memories[n].end(), seq.tokens.row_span(n + 1).begin());
  }
  return seq;
}

double layer_bias(std::span<const double> one_hot, const Model& model, std::size_t block) {
  const std::size_t tk = model.dims.tokens();
  if (one_hot.size() != tk) {
    throw ConfigError("layer_bias: one-hot of length " + std::to_string(one_hot.size()) + ", expected " +
                      std::to_string(tk));
  }
  const EncoderBlockIds& b = model.blocks.at(block);
  const Tensor& w1 = model.params[b.bias_w1];
  const Tensor& b1 = model.params[b.bias_b1];
  const Tensor& w2 = model.params[b.bias_w2];
  double out = model.params[b.bias_b2][0];
  for (std::size_t h = 0; h < w1.cols(); ++h) {
    double pre = b1[h];
    for (std::size_t j = 0; j < tk; ++j) pre += one_hot[j] * w1(j, h);
    out += (pre > 0.0 ? pre : 0.0) * w2(h, 0);
  }
  return out;
}

Var layer_biases(Tape& tape, const Model& model, std::size_t block) {
  const std::size_t tk = model.dims.tokens();
  if (!model.dims.layer_attention) return tape.constant(Tensor(1, tk));
  const EncoderBlockIds& b = model.blocks.at(block);
  auto p = [&](ParamId id) { return tape.param(model.params, id); };
  using namespace ops;
  const Var codes = tape.constant(Tensor::identity(tk));
  const Var hidden = relu(add_rowvec(matmul(codes, p(b.bias_w1)), p(b.bias_b1)));
  const Var column = add_rowvec(matmul(hidden, p(b.bias_w2)), p(b.bias_b2));
  return transpose(column);
}

Var attend(Tape& tape, const Model& model, std::size_t block, Var tokens, Var biases, AttentionTrace* trace) {
  const ModelDims& dims = model.dims;
  const std::size_t tk = dims.tokens();
  if (tokens.value().cols() != dims.dim || tokens.value().rows() % tk != 0) {
    throw ConfigError("attend: tokens " + tokens.value().shape_string() + " do not group into " +
                      std::to_string(tk) + " x " + std::to_string(dims.dim));
  }
  const EncoderBlockIds& b = model.blocks.at(block);
  auto p = [&](ParamId id) { return tape.param(model.params, id); };
  using namespace ops;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dims.head_dim()));
  std::vector<Var> heads;
  for (int h = 0; h < dims.heads; ++h) {
    const auto hi = static_cast<std::size_t>(h);
    const Var q = matmul(tokens, p(b.query[hi]));
    const Var k = matmul(tokens, p(b.key[hi]));
    const Var v = matmul(tokens, p(b.value[hi]));
    const Var logits = add_rowvec(affine(block_matmul_bt(q, k, tk), scale, 0.0), biases);
    const Var weights = softmax_rows(logits);
    if (trace) trace->weights.push_back(weights);
    heads.push_back(block_matmul(dropout(weights, dims.dropout), v, tk));
  }
  const Var merged = concat_cols(heads);
  const Var projected = add_rowvec(matmul(merged, p(b.out_w)), p(b.out_b));
  return add(tokens, projected);
}

Var encode(Tape& tape, const Model& model, Var tokens) {
  auto p = [&](ParamId id) { return tape.param(model.params, id); };
  using namespace ops;
  Var x = tokens;
  for (std::size_t blk = 0; blk < model.blocks.size(); ++blk) {
    const EncoderBlockIds& b = model.blocks[blk];
    const Var attended = attend(tape, model, blk, x, layer_biases(tape, model, blk));
    const Var h = add_rowvec(mul_rowvec(layernorm_rows(attended), p(b.norm1_gain)), p(b.norm1_bias));
    const Var inner = relu(add_rowvec(matmul(h, p(b.ffn_w1)), p(b.ffn_b1)));
    const Var ffn = add_rowvec(matmul(inner, p(b.ffn_w2)), p(b.ffn_b2));
    x = add_rowvec(mul_rowvec(layernorm_rows(add(h, ffn)), p(b.norm2_gain)), p(b.norm2_bias));
  }
  return block_mean_rows(x, model.dims.tokens());
}

std::vector<double> encode_node(const NodeState& state, const Model& model, bool train, std::uint64_t dropout_seed) {
  if (state.memories.size() != static_cast<std::size_t>(model.dims.layers)) {
    throw ConfigError("encode_node: state has " + std::to_string(state.memories.size()) + " memories, model has k=" +
                      std::to_string(model.dims.layers));
  }
  Tape tape(false, train, dropout_seed);
  const Var z = encode(tape, model, tape.constant(build_token_sequence(state).tokens));
  return z.value().storage();
}

}  // namespace tpgnn
