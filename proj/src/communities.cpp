#include "sigtrust/communities.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace sigtrust {

std::vector<std::vector<DeviceId>> CommunityPartition::members() const {
  std::vector<std::vector<DeviceId>> groups(community_count);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i]) groups[*assignment[i]].push_back(device(i));
  }
  return groups;
}

CommunityPartition detect_communities(const SignedTrustGraph& graph, CommunityOptions options) {
  const auto n = graph.device_count();
  if (n == 0) throw Error(Errc::GraphTooSmall, "community detection needs at least one device");

  std::vector<std::vector<std::uint32_t>> adjacency(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (!graph.devices()[v].active()) continue;
    for (auto u : graph.positive_out(device(v))) {
      adjacency[v].push_back(u.value);
      adjacency[u.index()].push_back(static_cast<std::uint32_t>(v));
    }
  }
  for (auto& list : adjacency) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  std::vector<std::uint32_t> label(n);
  std::iota(label.begin(), label.end(), 0u);
  std::mt19937_64 rng(options.seed);
  std::shuffle(label.begin(), label.end(), rng);

  std::vector<std::uint32_t> next(label);
  std::vector<std::uint32_t> counts(n, 0);
  std::vector<std::uint32_t> touched;
  for (std::size_t iteration = 0; iteration < options.max_iterations; ++iteration) {
    bool changed = false;
    for (std::size_t v = 0; v < n; ++v) {
      if (adjacency[v].empty()) continue;
      touched.clear();
      auto bump = [&](std::uint32_t l) {
        if (counts[l]++ == 0) touched.push_back(l);
      };
      bump(label[v]);
      for (auto u : adjacency[v]) bump(label[u]);
      std::uint32_t best = label[v];
      std::uint32_t best_count = 0;
      for (auto l : touched) {
        if (counts[l] > best_count || (counts[l] == best_count && l < best)) {
          best = l;
          best_count = counts[l];
        }
      }
      for (auto l : touched) counts[l] = 0;
      next[v] = best;
      changed |= best != label[v];
    }
    label.swap(next);
    std::copy(label.begin(), label.end(), next.begin());
    if (!changed) break;
  }

  CommunityPartition partition;
  partition.assignment.assign(n, std::nullopt);
  std::vector<std::int64_t> compact(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (!graph.devices()[v].active()) continue;
    auto& slot = compact[label[v]];
    if (slot < 0) slot = partition.community_count++;
    partition.assignment[v] = static_cast<std::uint32_t>(slot);
  }
  return partition;
}

void apply_partition(SignedTrustGraph& graph, const CommunityPartition& partition) {
  for (std::size_t v = 0; v < graph.device_count(); ++v) {
    graph.set_community(device(v), partition.of(device(v)));
  }
}

}  // namespace sigtrust
