#include "tpgnn/config.hpp"

#include "tpgnn/errors.hpp"

namespace tpgnn {

void Config::validate() const {
  if (layers < 1) throw ConfigError("k (layers) must be at least 1, got " + std::to_string(layers));
  if (neighbors < 1) throw ConfigError("N (neighbors) must be at least 1");
  if (dim < 1) throw ConfigError("node dimension must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (heads < 1 || dim % static_cast<std::size_t>(heads) != 0) {
    throw ConfigError("heads must divide the node dimension");
  }
  if (transformer_layers < 1) throw ConfigError("transformer layers must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (max_epochs < 1) throw ConfigError("max epochs must be at least 1");
}

ModelDims Config::model_dims(std::size_t edge_dim) const {
  ModelDims d;
  d.dim = dim;
  d.edge_dim = edge_dim;
  d.layers = layers;
  d.heads = heads;
  d.transformer_layers = transformer_layers;
  d.dropout = dropout;
  d.layer_attention = layer_attention;
  return d;
}

FitOptions Config::fit_options() const {
  FitOptions f;
  f.train.batch_size = batch_size;
  f.train.neighbors = neighbors;
  f.train.learning_rate = learning_rate;
  f.train.negative_features = negative_features;
  f.train.seed = seed;
  f.task = task;
  f.patience = patience;
  f.max_epochs = max_epochs;
  f.node_max_epochs = max_epochs;
  return f;
}

Task parse_task(const std::string& text) {
  if (text == "link") return Task::link;
  if (text == "node") return Task::node;
  throw ConfigError("unknown task '" + text + "' (expected link or node)");
}

NegativeFeatures parse_negative_features(const std::string& text) {
  if (text == "reuse") return NegativeFeatures::reuse;
  if (text == "zeros") return NegativeFeatures::zeros;
  throw ConfigError("unknown neg_features mode '" + text + "' (expected reuse or zeros)");
}

const char* to_string(Task task) { return task == Task::link ? "link" : "node"; }
const char* to_string(NegativeFeatures mode) { return mode == NegativeFeatures::reuse ? "reuse" : "zeros"; }

}  // namespace tpgnn
