#include "tpgnn/neighbor_index.hpp"

#include <algorithm>
#include <string>

#include "tpgnn/errors.hpp"

namespace tpgnn {

void NeighborIndex::insert_edge(NodeId u, NodeId v, double t, std::uint64_t event_id) {
  const NodeId hi = std::max(u, v);
  if (hi >= lists_.size()) lists_.resize(static_cast<std::size_t>(hi) + 1);
  for (NodeId node : {u, v}) {
    const auto& list = lists_[node];
    if (!list.empty() && t < list.back().t) {
      throw UsageError("insert_edge: event " + std::to_string(event_id) + " at t=" + std::to_string(t) +
                       " precedes node " + std::to_string(node) + "'s latest entry at t=" +
                       std::to_string(list.back().t));
    }
  }
  lists_[u].push_back({v, t, event_id});
  if (u != v) lists_[v].push_back({u, t, event_id});
  ++edges_;
}

void NeighborIndex::sample_neighbors(NodeId node, double t, std::size_t n, std::vector<NeighborEntry>& out) const {
  out.clear();
  if (node >= lists_.size() || n == 0) return;
  const auto& list = lists_[node];
  auto end = std::upper_bound(list.begin(), list.end(), t,
                              [](double value, const NeighborEntry& e) { return value < e.t; });
  const auto count = std::min<std::size_t>(n, static_cast<std::size_t>(end - list.begin()));
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(*(end - 1 - static_cast<std::ptrdiff_t>(i)));
}

std::vector<NeighborEntry> NeighborIndex::sample_neighbors(NodeId node, double t, std::size_t n) const {
  if (n == 0) throw UsageError("sample_neighbors: n must be at least 1");
  std::vector<NeighborEntry> out;
  sample_neighbors(node, t, n, out);
  return out;
}

const std::vector<NeighborEntry>& NeighborIndex::history(NodeId node) const {
  static const std::vector<NeighborEntry> empty;
  return node < lists_.size() ? lists_[node] : empty;
}

NeighborIndex NeighborIndex::from_lists(std::vector<std::vector<NeighborEntry>> lists, std::size_t edge_count) {
  for (const auto& list : lists) {
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i].t < list[i - 1].t) throw UsageError("from_lists: list is not chronological");
    }
  }
  NeighborIndex index;
  index.lists_ = std::move(lists);
  index.edges_ = edge_count;
  return index;
}

void NeighborIndex::clear() {
  for (auto& l : lists_) l.clear();
  edges_ = 0;
}

}  // namespace tpgnn
