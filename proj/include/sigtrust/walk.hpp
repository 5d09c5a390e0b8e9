#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sigtrust/communities.hpp"
#include "sigtrust/graph.hpp"

namespace sigtrust {

using Rng = std::mt19937_64;

struct RandomWalk {
  std::vector<DeviceId> steps;

  std::size_t size() const noexcept { return steps.size(); }
  bool empty() const noexcept { return steps.empty(); }
};

/// Immutable CSR snapshot of the sign-blind, undirected Active adjacency
/// that walks traverse. With a partition, edges crossing communities are
/// dropped so walks never leave their start community.
class WalkIndex {
 public:
  explicit WalkIndex(const SignedTrustGraph& graph, const CommunityPartition* partition = nullptr);

  std::size_t device_count() const noexcept { return active_.size(); }
  bool active(DeviceId d) const { return active_.at(d.index()) != 0; }
  std::span<const std::uint32_t> neighbors(DeviceId d) const {
    return {targets_.data() + offsets_[d.index()], targets_.data() + offsets_[d.index() + 1]};
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> targets_;
  std::vector<char> active_;
};

/// Uniform random walk of at most `length` devices starting at `start`; it
/// stops early at a device without Active neighbours.
RandomWalk random_walk(const WalkIndex& index, DeviceId start, std::size_t length, Rng& rng);
RandomWalk random_walk(const SignedTrustGraph& graph, DeviceId start, std::size_t length, Rng& rng);

}  // namespace sigtrust
