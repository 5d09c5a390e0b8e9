#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sigtrust/graph.hpp"

namespace sigtrust {

/// One branch decision on a root-to-leaf path: the internal node consulted
/// (its row in the tree-vector matrix) and whether the path turns right.
struct PathStep {
  std::uint32_t node;
  bool right;
};

/// Complete binary tree over `leaf_count` leaves used by hierarchical
/// softmax. Internal nodes are numbered in heap order and leaves are laid
/// out left to right in device-id order, so the deepest leaf sits at depth
/// ceil(log2 n).
class HSTree {
 public:
  HSTree() = default;
  explicit HSTree(std::size_t leaf_count);

  std::size_t leaf_count() const noexcept { return leaf_count_; }
  std::size_t internal_count() const noexcept { return leaf_count_ == 0 ? 0 : leaf_count_ - 1; }
  std::size_t max_depth() const noexcept { return max_depth_; }

  std::span<const PathStep> path(DeviceId leaf) const {
    return {steps_.data() + offsets_[leaf.index()], steps_.data() + offsets_[leaf.index() + 1]};
  }

 private:
  std::size_t leaf_count_{0};
  std::size_t max_depth_{0};
  std::vector<PathStep> steps_;
  std::vector<std::size_t> offsets_;
};

inline HSTree build_hs_tree(std::size_t device_count) { return HSTree(device_count); }

}  // namespace sigtrust
