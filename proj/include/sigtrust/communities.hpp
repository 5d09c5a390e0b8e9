#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sigtrust/graph.hpp"

namespace sigtrust {

/// Total assignment of Active devices to communities `0..community_count-1`.
/// Blocked devices carry no community.
struct CommunityPartition {
  std::vector<std::optional<std::uint32_t>> assignment;
  std::uint32_t community_count{0};

  std::optional<std::uint32_t> of(DeviceId d) const {
    return d.index() < assignment.size() ? assignment[d.index()] : std::nullopt;
  }
  std::vector<std::vector<DeviceId>> members() const;
  bool operator==(const CommunityPartition&) const = default;
};

struct CommunityOptions {
  std::uint64_t seed{0};
  std::size_t max_iterations{100};
};

/// Synchronous label propagation over the undirected positive-edge subgraph.
/// Each device counts its own label once alongside its neighbours' labels;
/// ties go to the lowest label. Initial labels are a seeded permutation of
/// the device ids, so the result is a pure function of (graph, seed).
CommunityPartition detect_communities(const SignedTrustGraph& graph, CommunityOptions options = {});

/// Copies the partition into each device's `community` field.
void apply_partition(SignedTrustGraph& graph, const CommunityPartition& partition);

}  // namespace sigtrust
