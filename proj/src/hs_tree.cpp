#include "sigtrust/hs_tree.hpp"

#include <algorithm>
#include <bit>

namespace sigtrust {

HSTree::HSTree(std::size_t leaf_count) : leaf_count_(leaf_count) {
  if (leaf_count == 0) throw Error(Errc::InvalidConfig, "hierarchical-softmax tree needs a leaf");

  // Heap numbering: nodes 1..2n-1, internal nodes 1..n-1, leaves n..2n-1.
  const std::size_t full = std::bit_ceil(leaf_count);
  max_depth_ = static_cast<std::size_t>(std::countr_zero(full));

  std::vector<std::size_t> leaves;
  leaves.reserve(leaf_count);
  for (std::size_t h = full; h < 2 * leaf_count; ++h) leaves.push_back(h);
  for (std::size_t h = leaf_count; h < full && h < 2 * leaf_count; ++h) leaves.push_back(h);

  offsets_.reserve(leaf_count + 1);
  offsets_.push_back(0);
  std::vector<PathStep> reversed;
  for (auto h : leaves) {
    reversed.clear();
    for (auto node = h; node > 1; node /= 2) {
      reversed.push_back(PathStep{static_cast<std::uint32_t>(node / 2 - 1), (node & 1u) != 0});
    }
    steps_.insert(steps_.end(), reversed.rbegin(), reversed.rend());
    offsets_.push_back(steps_.size());
  }
}

}  // namespace sigtrust
