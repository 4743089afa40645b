#include "tpgnn/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "tpgnn/errors.hpp"

namespace tpgnn {

SyntheticLog generate_synthetic(std::size_t nodes, std::size_t events, std::uint64_t seed) {
  if (nodes < 4) throw UsageError("generate_synthetic needs at least 4 nodes");
  if (events < 1) throw UsageError("generate_synthetic needs at least 1 event");
  const std::size_t num_src = nodes / 2;
  const std::size_t num_dst = nodes - num_src;
  const std::size_t clusters = num_dst / 2;

  std::mt19937_64 rng(seed);
  SyntheticLog out;
  out.dst_cluster.resize(num_dst);
  for (std::size_t j = 0; j < num_dst; ++j) out.dst_cluster[j] = static_cast<int>(std::min(j / 2, clusters - 1));
  std::vector<std::vector<std::size_t>> members(clusters);
  for (std::size_t j = 0; j < num_dst; ++j) members[out.dst_cluster[j]].push_back(j);

  std::uniform_int_distribution<std::size_t> pick_cluster(0, clusters - 1);
  out.preferred_cluster.resize(num_src);
  for (auto& c : out.preferred_cluster) c = static_cast<int>(pick_cluster(rng));

  std::uniform_int_distribution<std::size_t> pick_src(0, num_src - 1);
  std::bernoulli_distribution in_cluster(kSyntheticClusterRate);
  std::exponential_distribution<double> gap(1.0);
  std::normal_distribution<double> noise(0.0, 0.05);

  std::vector<Event> log;
  log.reserve(events);
  double t = 0.0;
  for (std::size_t i = 0; i < events; ++i) {
    t += gap(rng);
    const std::size_t s = pick_src(rng);
    const auto& home = members[out.preferred_cluster[s]];
    std::size_t j;
    if (in_cluster(rng)) {
      std::uniform_int_distribution<std::size_t> pick_member(0, home.size() - 1);
      j = home[pick_member(rng)];
    } else {
      // uniform over destinations outside the home cluster
      std::uniform_int_distribution<std::size_t> pick_other(0, num_dst - home.size() - 1);
      j = pick_other(rng);
      for (std::size_t m : home) j += j >= m ? 1 : 0;
    }
    const bool hit = out.dst_cluster[j] == out.preferred_cluster[s];
    out.cluster_hits += hit ? 1 : 0;
    const double angle = 2.0 * std::numbers::pi * out.dst_cluster[j] / static_cast<double>(clusters);
    Event e;
    e.src = static_cast<NodeId>(s);
    e.dst = static_cast<NodeId>(num_src + j);
    e.t = t;
    e.features = {std::cos(angle) + noise(rng), std::sin(angle) + noise(rng)};
    e.label = hit ? 0 : 1;
    log.push_back(std::move(e));
  }
  out.log = EventLog(std::move(log), num_src, num_dst);
  return out;
}

}  // namespace tpgnn
