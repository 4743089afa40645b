#include "tpgnn/model.hpp"

#include <string>

#include "tpgnn/errors.hpp"
#include "tpgnn/optim.hpp"

namespace tpgnn {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void ModelDims::validate() const {
  if (layers < 1) throw ConfigError("k (layers) must be at least 1, got " + std::to_string(layers));
  if (dim == 0) throw ConfigError("node dimension must be positive");
  if (heads < 1 || dim % static_cast<std::size_t>(heads) != 0) {
    throw ConfigError("heads (" + std::to_string(heads) + ") must divide the node dimension (" +
                      std::to_string(dim) + ")");
  }
  if (transformer_layers < 1) throw ConfigError("transformer layers must be at least 1");
  if (bias_hidden == 0) throw ConfigError("layer-bias MLP hidden width must be positive");
  if (classes < 2) throw ConfigError("node decoder needs at least two classes");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0,1)");
}

Model Model::create(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  Model m;
  m.dims = dims;
  auto& ps = m.params;
  const std::size_t d = dims.dim, dm = dims.message_dim(), tk = dims.tokens();
  auto weight = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    return ps.add(name, xavier_init({rows, cols}, derive_seed(seed, ps.size())));
  };
  auto zeros = [&](const std::string& name, std::size_t cols) { return ps.add(name, Tensor(1, cols)); };
  auto ones = [&](const std::string& name, std::size_t cols) { return ps.add(name, Tensor(1, cols, 1.0)); };

  for (int n = 1; n <= dims.layers; ++n) {
    const std::string p = "gru" + std::to_string(n) + ".";
    GruLayerIds g{};
    g.w_u = weight(p + "W_u", d, dm);
    g.w_r = weight(p + "W_r", d, dm);
    g.w_x = weight(p + "W_x", d, dm);
    g.u_u = weight(p + "U_u", d, d);
    g.u_r = weight(p + "U_r", d, d);
    g.u_m = weight(p + "U_m", d, d);
    m.gru.push_back(g);
  }

  const std::size_t dh = dims.head_dim(), ff = dims.ffn_width();
  for (int b = 0; b < dims.transformer_layers; ++b) {
    const std::string p = "enc" + std::to_string(b) + ".";
    EncoderBlockIds e{};
    for (int h = 0; h < dims.heads; ++h) {
      const std::string hp = p + "head" + std::to_string(h) + ".";
      e.query.push_back(weight(hp + "query", d, dh));
      e.key.push_back(weight(hp + "key", d, dh));
      e.value.push_back(weight(hp + "value", d, dh));
    }
    e.out_w = weight(p + "out.w", d, d);
    e.out_b = zeros(p + "out.b", d);
    e.bias_w1 = weight(p + "layer_bias.w1", tk, dims.bias_hidden);
    e.bias_b1 = zeros(p + "layer_bias.b1", dims.bias_hidden);
    e.bias_w2 = weight(p + "layer_bias.w2", dims.bias_hidden, 1);
    e.bias_b2 = zeros(p + "layer_bias.b2", 1);
    e.ffn_w1 = weight(p + "ffn.w1", d, ff);
    e.ffn_b1 = zeros(p + "ffn.b1", ff);
    e.ffn_w2 = weight(p + "ffn.w2", ff, d);
    e.ffn_b2 = zeros(p + "ffn.b2", d);
    e.norm1_gain = ones(p + "norm1.gain", d);
    e.norm1_bias = zeros(p + "norm1.bias", d);
    e.norm2_gain = ones(p + "norm2.gain", d);
    e.norm2_bias = zeros(p + "norm2.bias", d);
    m.blocks.push_back(std::move(e));
  }

  const std::size_t hid = dims.decoder_width();
  m.link_decoder.w1 = weight("link.w1", dm, hid);
  m.link_decoder.b1 = zeros("link.b1", hid);
  m.link_decoder.w2 = weight("link.w2", hid, 1);
  m.link_decoder.b2 = zeros("link.b2", 1);
  m.node_decoder.w1 = weight("node.w1", d, hid);
  m.node_decoder.b1 = zeros("node.b1", hid);
  m.node_decoder.w2 = weight("node.w2", hid, dims.classes);
  m.node_decoder.b2 = zeros("node.b2", dims.classes);
  return m;
}

std::vector<ParamId> Model::node_decoder_params() const {
  return {node_decoder.w1, node_decoder.b1, node_decoder.w2, node_decoder.b2};
}

std::vector<ParamId> Model::link_decoder_params() const {
  return {link_decoder.w1, link_decoder.b1, link_decoder.w2, link_decoder.b2};
}

}  // namespace tpgnn
