#include "sigtrust/detection.hpp"

#include <ostream>

namespace sigtrust {

std::vector<DeviceId> DetectionVerdict::all() const {
  std::vector<DeviceId> ids(self_promoting);
  ids.insert(ids.end(), bad_mouthing.begin(), bad_mouthing.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::size_t mitigate(SignedTrustGraph& graph, const DetectionVerdict& verdict) {
  if (verdict.empty()) return 0;
  const auto ids = verdict.all();
  return graph.block_devices(ids).newly_blocked;
}

void write_verdict(std::ostream& out, const DetectionVerdict& verdict) {
  auto line = [&](const char* kind, const std::vector<DeviceId>& ids) {
    if (ids.empty()) return;
    out << verdict.triggering_report.timestamp << ',' << kind;
    for (auto d : ids) out << ',' << d.value;
    out << '\n';
  };
  line("SP", verdict.self_promoting);
  line("BM", verdict.bad_mouthing);
}

}  // namespace sigtrust
