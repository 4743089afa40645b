#include "tpgnn/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tpgnn/errors.hpp"
#include "tpgnn/ops.hpp"

namespace tpgnn {
namespace {

Var mlp(Tape& tape, const Model& model, const MlpIds& ids, Var x) {
  auto p = [&](ParamId id) { return tape.param(model.params, id); };
  using namespace ops;
  const Var hidden = relu(add_rowvec(matmul(x, p(ids.w1)), p(ids.b1)));
  return add_rowvec(matmul(hidden, p(ids.w2)), p(ids.b2));
}

}  // namespace

Var link_logits(Tape& tape, const Model& model, Var edges) {
  if (edges.value().cols() != model.dims.message_dim()) {
    throw ConfigError("link decoder: edge rows " + edges.value().shape_string() + ", expected width " +
                      std::to_string(model.dims.message_dim()));
  }
  return mlp(tape, model, model.link_decoder, edges);
}

Var node_logits(Tape& tape, const Model& model, Var representations) {
  if (representations.value().cols() != model.dims.dim) {
    throw ConfigError("node decoder: input " + representations.value().shape_string());
  }
  return mlp(tape, model, model.node_decoder, representations);
}

double edge_score(std::span<const double> z_i, std::span<const double> edge_features, std::span<const double> z_j,
                  const Model& model) {
  if (z_i.size() != model.dims.dim || z_j.size() != model.dims.dim ||
      edge_features.size() != model.dims.edge_dim) {
    throw ConfigError("edge_score: got z_i " + std::to_string(z_i.size()) + ", e " +
                      std::to_string(edge_features.size()) + ", z_j " + std::to_string(z_j.size()));
  }
  std::vector<double> row;
  row.reserve(model.dims.message_dim());
  row.insert(row.end(), z_i.begin(), z_i.end());
  row.insert(row.end(), edge_features.begin(), edge_features.end());
  row.insert(row.end(), z_j.begin(), z_j.end());
  Tape tape(false);
  const Var prob = ops::sigmoid(link_logits(tape, model, tape.constant(Tensor::row(std::move(row)))));
  return prob.value()[0];
}

double link_loss(std::span<const double> pos_probs, std::span<const double> neg_probs) {
  if (pos_probs.size() != neg_probs.size() || pos_probs.empty()) {
    throw UsageError("link_loss: needs equal, nonzero counts of positives and negatives");
  }
  constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
  double total = 0.0;
  for (std::size_t i = 0; i < pos_probs.size(); ++i) {
    total -= std::log(std::clamp(pos_probs[i], lo, hi));
    total -= std::log(1.0 - std::clamp(neg_probs[i], lo, hi));
  }
  return total / static_cast<double>(pos_probs.size());
}

std::vector<NodeId> sample_negatives(std::span<const NodeId> positive_dsts, NodeRange universe,
                                     std::mt19937_64& rng) {
  if (universe.count == 0) throw UsageError("sample_negatives: empty destination universe");
  std::vector<NodeId> out;
  out.reserve(positive_dsts.size());
  for (NodeId pos : positive_dsts) {
    if (universe.contains(pos)) {
      if (universe.count == 1) {
        throw UsageError("sample_negatives: destination " + std::to_string(pos) + " is the only candidate");
      }
      std::uniform_int_distribution<std::size_t> pick(0, universe.count - 2);
      std::size_t idx = pick(rng);
      if (idx >= pos - universe.first) ++idx;
      out.push_back(static_cast<NodeId>(universe.first + idx));
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, universe.count - 1);
      out.push_back(static_cast<NodeId>(universe.first + pick(rng)));
    }
  }
  return out;
}

}  // namespace tpgnn
