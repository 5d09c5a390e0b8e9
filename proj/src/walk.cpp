#include "sigtrust/walk.hpp"

namespace sigtrust {

WalkIndex::WalkIndex(const SignedTrustGraph& graph, const CommunityPartition* partition) {
  const auto n = graph.device_count();
  active_.resize(n);
  offsets_.reserve(n + 1);
  offsets_.push_back(0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto d = device(v);
    active_[v] = graph.devices()[v].active() ? 1 : 0;
    if (active_[v]) {
      const auto own = partition ? partition->of(d) : std::nullopt;
      for (auto u : graph.undirected_neighbors(d)) {
        if (partition && partition->of(u) != own) continue;
        targets_.push_back(u.value);
      }
    }
    offsets_.push_back(targets_.size());
  }
}

namespace {

template <typename Neighbors>
RandomWalk walk_impl(DeviceId start, std::size_t length, Rng& rng, Neighbors&& neighbors) {
  if (length == 0) throw Error(Errc::InvalidConfig, "walk length must be positive");
  RandomWalk walk;
  walk.steps.reserve(length);
  walk.steps.push_back(start);
  auto current = start;
  while (walk.steps.size() < length) {
    const std::span<const std::uint32_t> options = neighbors(current);
    if (options.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    current = DeviceId{options[pick(rng)]};
    walk.steps.push_back(current);
  }
  return walk;
}

}  // namespace

RandomWalk random_walk(const WalkIndex& index, DeviceId start, std::size_t length, Rng& rng) {
  if (start.index() >= index.device_count()) {
    throw Error(Errc::UnknownDevice, "walk start " + std::to_string(start.value) + " does not exist");
  }
  if (!index.active(start)) {
    throw Error(Errc::BlockedStart, "walk start " + std::to_string(start.value) + " is blocked");
  }
  return walk_impl(start, length, rng, [&](DeviceId d) { return index.neighbors(d); });
}

RandomWalk random_walk(const SignedTrustGraph& graph, DeviceId start, std::size_t length, Rng& rng) {
  if (!graph.is_active(start)) {
    throw Error(Errc::BlockedStart, "walk start " + std::to_string(start.value) + " is blocked");
  }
  std::vector<std::uint32_t> scratch;
  return walk_impl(start, length, rng, [&](DeviceId d) {
    scratch.clear();
    for (auto u : graph.undirected_neighbors(d)) scratch.push_back(u.value);
    return std::span<const std::uint32_t>(scratch);
  });
}

}  // namespace sigtrust
