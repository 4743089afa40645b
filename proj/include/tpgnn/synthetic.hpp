#pragma once

#include <cstdint>
#include <vector>

#include "tpgnn/events.hpp"

namespace tpgnn {

/// A generated log together with its planted structure.
struct SyntheticLog {
  EventLog log;
  std::vector<int> preferred_cluster;  // per source
  std::vector<int> dst_cluster;        // per destination, indexed from 0
  std::size_t cluster_hits = 0;        // events whose dst lies in the source's cluster
};

/// Bipartite stream with nodes/2 sources and the rest destinations.
/// Destinations are grouped in pairs (clusters); each source prefers one
/// cluster and sends 90% of its events there, the rest uniformly to
/// destinations outside it. Inter-arrival times are exponential with unit rate. The two
/// edge features are the unit vector of the destination's cluster angle plus
/// Gaussian noise. Label 1 marks an event outside the preferred cluster.
SyntheticLog generate_synthetic(std::size_t nodes, std::size_t events, std::uint64_t seed);

inline constexpr double kSyntheticClusterRate = 0.90;

}  // namespace tpgnn
