#pragma once

#include <cstdint>
#include <vector>

#include "tpgnn/events.hpp"

namespace tpgnn {

struct NeighborEntry {
  NodeId neighbor = 0;
  double t = 0.0;
  std::uint64_t event_id = 0;
  friend bool operator==(const NeighborEntry&, const NeighborEntry&) = default;
};

/// Per-node append-only chronological adjacency.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  explicit NeighborIndex(std::size_t num_nodes) : lists_(num_nodes) {}

  /// Appends the edge to both endpoint lists. Throws UsageError if t is
  /// earlier than the latest entry of either endpoint.
  void insert_edge(NodeId u, NodeId v, double t, std::uint64_t event_id);

  /// Up to n most recent entries with timestamp <= t, newest first. Entries
  /// sharing a timestamp are ordered by insertion (later = more recent).
  /// Unknown nodes yield an empty list.
  std::vector<NeighborEntry> sample_neighbors(NodeId node, double t, std::size_t n) const;
  /// Same query without allocation; `out` is cleared first.
  void sample_neighbors(NodeId node, double t, std::size_t n, std::vector<NeighborEntry>& out) const;

  const std::vector<NeighborEntry>& history(NodeId node) const;
  std::size_t num_nodes() const { return lists_.size(); }
  std::size_t edge_count() const { return edges_; }
  void clear();

  /// Rebuilds an index from per-node lists (checkpoint restore).
  static NeighborIndex from_lists(std::vector<std::vector<NeighborEntry>> lists, std::size_t edge_count);

  friend bool operator==(const NeighborIndex&, const NeighborIndex&) = default;

 private:
  std::vector<std::vector<NeighborEntry>> lists_;
  std::size_t edges_ = 0;
};

}  // namespace tpgnn
