#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tpgnn/model.hpp"
#include "tpgnn/training.hpp"

namespace tpgnn {

/// Run configuration. Defaults are the reference hyperparameters.
struct Config {
  std::filesystem::path data;
  Task task = Task::link;
  int layers = 5;
  std::size_t neighbors = 20;
  std::size_t dim = 172;
  std::size_t batch_size = 200;
  double learning_rate = 1e-4;
  double dropout = 0.1;
  int heads = 2;
  int transformer_layers = 1;
  int patience = 5;
  int max_epochs = 50;
  std::uint64_t seed = 0;
  bool layer_attention = true;
  NegativeFeatures negative_features = NegativeFeatures::reuse;

  /// Throws ConfigError naming the first violated constraint.
  void validate() const;
  ModelDims model_dims(std::size_t edge_dim = 0) const;
  FitOptions fit_options() const;
};

Task parse_task(const std::string& text);
NegativeFeatures parse_negative_features(const std::string& text);
const char* to_string(Task task);
const char* to_string(NegativeFeatures mode);

}  // namespace tpgnn
