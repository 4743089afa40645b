#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "tpgnn/events.hpp"
#include "tpgnn/neighbor_index.hpp"

namespace tpgnn::testing {

// Explicit walk enumeration: recurse over sampled neighbors, skipping the
// anchor, and count every (node, hop) arrival.
inline std::map<std::pair<int, NodeId>, std::uint64_t> walk_oracle(const NeighborIndex& idx, NodeId anchor, double t,
                                                                  std::size_t n, int hops) {
  std::map<std::pair<int, NodeId>, std::uint64_t> out;
  std::function<void(NodeId, int)> walk = [&](NodeId node, int hop) {
    if (hop > hops) return;
    for (const auto& e : idx.sample_neighbors(node, t, n)) {
      if (e.neighbor == anchor) continue;
      ++out[{hop, e.neighbor}];
      walk(e.neighbor, hop + 1);
    }
  };
  walk(anchor, 1);
  return out;
}

// Every event touching `node` with time <= t, newest first (later stream
// position wins ties), truncated to n.
inline std::vector<NeighborEntry> recent_oracle(const std::vector<Event>& stream, NodeId node, double t,
                                                std::size_t n) {
  std::vector<NeighborEntry> out;
  for (std::size_t e = stream.size(); e-- > 0;) {
    const Event& ev = stream[e];
    if (ev.t > t) continue;
    if (ev.src == node) out.push_back({ev.dst, ev.t, e});
    else if (ev.dst == node) out.push_back({ev.src, ev.t, e});
  }
  if (out.size() > n) out.resize(n);
  return out;
}

inline double pair_count_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  return wins / pairs;
}

}  // namespace tpgnn::testing
