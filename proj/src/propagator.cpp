#include "tpgnn/propagator.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "tpgnn/errors.hpp"
#include "tpgnn/ops.hpp"

namespace tpgnn {

std::pair<std::vector<double>, std::vector<double>> generate_messages(std::span<const double> z_i,
                                                                      std::span<const double> edge_features,
                                                                      std::span<const double> z_j) {
  if (z_i.size() != z_j.size()) {
    throw ConfigError("generate_messages: node representations of length " + std::to_string(z_i.size()) + " and " +
                      std::to_string(z_j.size()));
  }
  std::pair<std::vector<double>, std::vector<double>> out;
  auto& [mi, mj] = out;
  mi.reserve(2 * z_i.size() + edge_features.size());
  mi.insert(mi.end(), z_i.begin(), z_i.end());
  mi.insert(mi.end(), edge_features.begin(), edge_features.end());
  mi.insert(mi.end(), z_j.begin(), z_j.end());
  mj.reserve(mi.size());
  mj.insert(mj.end(), z_j.begin(), z_j.end());
  mj.insert(mj.end(), edge_features.begin(), edge_features.end());
  mj.insert(mj.end(), z_i.begin(), z_i.end());
  return out;
}

std::vector<Delivery> disseminate(const NeighborIndex& index, NodeId anchor, double t, std::size_t neighbors,
                                  int hops) {
  if (hops < 1) throw UsageError("disseminate: hops must be at least 1");
  if (neighbors == 0) throw UsageError("disseminate: neighbor count must be at least 1");
  std::vector<Delivery> out;
  std::vector<std::pair<NodeId, std::uint64_t>> frontier{{anchor, 1}};
  std::unordered_map<NodeId, std::uint64_t> next;
  std::vector<NeighborEntry> sampled;
  for (int hop = 1; hop <= hops && !frontier.empty(); ++hop) {
    next.clear();
    for (const auto& [node, walks] : frontier) {
      index.sample_neighbors(node, t, neighbors, sampled);
      for (const NeighborEntry& e : sampled) {
        if (e.neighbor == anchor) continue;
        next[e.neighbor] += walks;
      }
    }
    frontier.assign(next.begin(), next.end());
    std::sort(frontier.begin(), frontier.end());
    for (const auto& [node, walks] : frontier) out.push_back(Delivery{node, hop, walks});
  }
  return out;
}

std::vector<double> combine_messages(std::span<const std::vector<double>> payloads) {
  if (payloads.empty()) throw UsageError("combine_messages: no payloads");
  std::vector<double> mean(payloads.front().size(), 0.0);
  for (const auto& p : payloads) {
    if (p.size() != mean.size()) throw ConfigError("combine_messages: payload dimensions differ");
    for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i];
  }
  for (double& v : mean) v /= static_cast<double>(payloads.size());
  return mean;
}

Var gru_update(Tape& tape, const Model& model, int layer, Var memory, Var message) {
  if (layer < 1 || layer > model.dims.layers) {
    throw UsageError("gru_update: layer " + std::to_string(layer) + " outside 1.." +
                     std::to_string(model.dims.layers));
  }
  const GruLayerIds& g = model.gru[static_cast<std::size_t>(layer - 1)];
  auto p = [&](ParamId id) { return tape.param(model.params, id); };
  using namespace ops;
  const Var u = sigmoid(add(matmul_bt(message, p(g.w_u)), matmul_bt(memory, p(g.u_u))));
  const Var r = sigmoid(add(matmul_bt(message, p(g.w_r)), matmul_bt(memory, p(g.u_r))));
  const Var mhat = add(matmul_bt(message, p(g.w_x)), mul(r, matmul_bt(memory, p(g.u_m))));
  const Var mtilde = mul(affine(u, -1.0, 1.0), tanh(mhat));
  return add(mul(u, memory), mtilde);
}

std::vector<double> gru_update(const Model& model, int layer, std::span<const double> memory,
                               std::span<const double> message) {
  if (memory.size() != model.dims.dim || message.size() != model.dims.message_dim()) {
    throw ConfigError("gru_update: memory length " + std::to_string(memory.size()) + ", message length " +
                      std::to_string(message.size()));
  }
  Tape tape(false);
  const Var out = gru_update(tape, model, layer, tape.constant(Tensor::row(memory)),
                             tape.constant(Tensor::row(message)));
  return out.value().storage();
}

}  // namespace tpgnn
