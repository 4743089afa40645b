#pragma once

#include <cstdint>
#include <vector>

#include "tpgnn/params.hpp"

namespace tpgnn {

/// Architecture sizes. Zero for ffn_dim / decoder_hidden means "derive":
/// 2*dim and dim respectively.
struct ModelDims {
  std::size_t dim = 172;
  std::size_t edge_dim = 0;
  int layers = 5;
  int heads = 2;
  int transformer_layers = 1;
  std::size_t bias_hidden = 16;
  std::size_t ffn_dim = 0;
  std::size_t decoder_hidden = 0;
  std::size_t classes = 2;
  double dropout = 0.1;
  bool layer_attention = true;

  std::size_t message_dim() const { return 2 * dim + edge_dim; }
  std::size_t tokens() const { return static_cast<std::size_t>(layers) + 1; }
  std::size_t head_dim() const { return dim / static_cast<std::size_t>(heads); }
  std::size_t ffn_width() const { return ffn_dim == 0 ? 2 * dim : ffn_dim; }
  std::size_t decoder_width() const { return decoder_hidden == 0 ? dim : decoder_hidden; }

  /// Throws ConfigError when the sizes cannot form a model.
  void validate() const;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// GRU memory updater for one layer. W_* are d x (2d+d_e), U_* are d x d.
struct GruLayerIds {
  ParamId w_u, w_r, w_x, u_u, u_r, u_m;
};

struct EncoderBlockIds {
  std::vector<ParamId> query, key, value;  // per head, d x d_h
  ParamId out_w, out_b;
  ParamId bias_w1, bias_b1, bias_w2, bias_b2;  // (k+1) -> hidden -> 1
  ParamId ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  ParamId norm1_gain, norm1_bias, norm2_gain, norm2_bias;
};

struct MlpIds {
  ParamId w1, b1, w2, b2;
};

/// Every learned tensor of the model plus the ids that address them.
struct Model {
  ModelDims dims;
  ParamStore params;
  std::vector<GruLayerIds> gru;  // gru[n-1] updates the n-hop memory
  std::vector<EncoderBlockIds> blocks;
  MlpIds link_decoder{};
  MlpIds node_decoder{};

  /// Xavier-uniform weights, zero biases, unit layernorm gains.
  static Model create(const ModelDims& dims, std::uint64_t seed);

  std::vector<ParamId> node_decoder_params() const;
  std::vector<ParamId> link_decoder_params() const;
};

/// splitmix64-style derivation of independent sub-seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace tpgnn
