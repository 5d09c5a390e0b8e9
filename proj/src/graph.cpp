#include "sigtrust/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

namespace sigtrust {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownDevice: return "UnknownDevice";
    case Errc::SelfRating: return "SelfRating";
    case Errc::InvalidValue: return "InvalidValue";
    case Errc::NonMonotoneTimestamp: return "NonMonotoneTimestamp";
    case Errc::BlockedStart: return "BlockedStart";
    case Errc::GraphTooSmall: return "GraphTooSmall";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::StaleEmbeddings: return "StaleEmbeddings";
    case Errc::TooFewDevices: return "TooFewDevices";
    case Errc::ConfigMismatch: return "ConfigMismatch";
    case Errc::ConfigParseError: return "ConfigParseError";
    case Errc::InvalidRange: return "InvalidRange";
    case Errc::MissingSeries: return "MissingSeries";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

DeviceSet::DeviceSet(std::vector<DeviceId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool DeviceSet::contains(DeviceId d) const noexcept {
  return std::binary_search(ids_.begin(), ids_.end(), d);
}

void DeviceSet::insert(DeviceId d) {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), d);
  if (it == ids_.end() || *it != d) ids_.insert(it, d);
}

SignedTrustGraph::SignedTrustGraph(GraphOptions options) : options_(options) {
  if (!(options_.aggregation_weight > 0.0 && options_.aggregation_weight <= 1.0)) {
    throw Error(Errc::InvalidConfig, "aggregation weight must lie in (0, 1]");
  }
}

DeviceId SignedTrustGraph::add_device() {
  const auto id = sigtrust::device(devices_.size());
  devices_.push_back(Device{id, 0.0, DeviceStatus::Active, std::nullopt});
  out_.emplace_back();
  in_.emplace_back();
  return id;
}

void SignedTrustGraph::add_devices(std::size_t count) {
  devices_.reserve(devices_.size() + count);
  for (std::size_t i = 0; i < count; ++i) add_device();
}

std::size_t SignedTrustGraph::active_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(devices_.begin(), devices_.end(), [](const Device& d) { return d.active(); }));
}

std::size_t SignedTrustGraph::checked(DeviceId d) const {
  if (!contains(d)) {
    throw Error(Errc::UnknownDevice, "device " + std::to_string(d.value) + " does not exist");
  }
  return d.index();
}

const Device& SignedTrustGraph::device(DeviceId d) const { return devices_[checked(d)]; }

double SignedTrustGraph::aggregate(double score, double value, double weight) noexcept {
  return std::clamp(score + weight * (value - score), -1.0, 1.0);
}

void SignedTrustGraph::validate(const TrustReport& report) const {
  checked(report.trustor);
  checked(report.trustee);
  if (report.trustor == report.trustee) {
    throw Error(Errc::SelfRating, "device " + std::to_string(report.trustor.value) + " rated itself");
  }
  if (!std::isfinite(report.value) || report.value == 0.0 || report.value < -1.0 || report.value > 1.0) {
    throw Error(Errc::InvalidValue, "report value must lie in [-1, 1] and be non-zero");
  }
  if (!log_.empty() && report.timestamp < log_.back().timestamp) {
    throw Error(Errc::NonMonotoneTimestamp,
                "timestamp " + std::to_string(report.timestamp) + " precedes " +
                    std::to_string(log_.back().timestamp));
  }
}

bool SignedTrustGraph::submit_report(const TrustReport& report) {
  validate(report);
  auto& trustee = devices_[report.trustee.index()];
  if (!devices_[report.trustor.index()].active() || !trustee.active()) return false;

  auto& forward = out_[report.trustor.index()][report.trustee.value];
  auto& backward = in_[report.trustee.index()][report.trustor.value];
  if (report.positive()) {
    ++forward.positive;
    ++backward.positive;
    ++positive_edges_;
  } else {
    ++forward.negative;
    ++backward.negative;
    ++negative_edges_;
  }
  log_.push_back(report);
  clock_ = std::max(clock_, report.timestamp + 1);
  trustee.trust_score = aggregate(trustee.trust_score, report.value, options_.aggregation_weight);
  return true;
}

bool SignedTrustGraph::submit_report(DeviceId trustor, DeviceId trustee, double value) {
  return submit_report(TrustReport{trustor, trustee, value, clock_});
}

template <typename Pred>
std::vector<DeviceId> SignedTrustGraph::collect(const Adjacency& adjacency, Pred pred) const {
  std::vector<DeviceId> result;
  for (const auto& [other, tally] : adjacency) {
    if (pred(tally) && devices_[other].active()) result.push_back(DeviceId{other});
  }
  std::sort(result.begin(), result.end());
  return result;
}

std::vector<DeviceId> SignedTrustGraph::positive_in(DeviceId d) const {
  return collect(in_[checked(d)], [](const Tally& t) { return t.positive > 0; });
}

std::vector<DeviceId> SignedTrustGraph::positive_out(DeviceId d) const {
  return collect(out_[checked(d)], [](const Tally& t) { return t.positive > 0; });
}

std::vector<DeviceId> SignedTrustGraph::negative_in(DeviceId d) const {
  return collect(in_[checked(d)], [](const Tally& t) { return t.negative > 0; });
}

std::vector<DeviceId> SignedTrustGraph::negative_out(DeviceId d) const {
  return collect(out_[checked(d)], [](const Tally& t) { return t.negative > 0; });
}

std::size_t SignedTrustGraph::negative_out_to(DeviceId from, DeviceId to) const {
  const auto& adjacency = out_[checked(from)];
  checked(to);
  auto it = adjacency.find(to.value);
  return it == adjacency.end() ? 0 : it->second.negative;
}

std::size_t SignedTrustGraph::positive_out_to(DeviceId from, DeviceId to) const {
  const auto& adjacency = out_[checked(from)];
  checked(to);
  auto it = adjacency.find(to.value);
  return it == adjacency.end() ? 0 : it->second.positive;
}

std::size_t SignedTrustGraph::positive_out_within(DeviceId d, const DeviceSet& s) const {
  std::size_t count = 0;
  for (const auto& [other, tally] : out_[checked(d)]) {
    if (tally.positive > 0 && devices_[other].active() && s.contains(DeviceId{other})) ++count;
  }
  return count;
}

std::size_t SignedTrustGraph::positive_out_outside(DeviceId d, const DeviceSet& s) const {
  std::size_t count = 0;
  for (const auto& [other, tally] : out_[checked(d)]) {
    if (tally.positive > 0 && devices_[other].active() && !s.contains(DeviceId{other})) ++count;
  }
  return count;
}

std::vector<DeviceId> SignedTrustGraph::undirected_neighbors(DeviceId d) const {
  const auto index = checked(d);
  std::vector<DeviceId> result;
  result.reserve(out_[index].size() + in_[index].size());
  for (const auto& [other, tally] : out_[index]) {
    if (devices_[other].active()) result.push_back(DeviceId{other});
  }
  for (const auto& [other, tally] : in_[index]) {
    if (devices_[other].active()) result.push_back(DeviceId{other});
  }
  std::sort(result.begin(), result.end());
  result.erase(std::unique(result.begin(), result.end()), result.end());
  return result;
}

BlockResult SignedTrustGraph::block_devices(std::span<const DeviceId> ids) {
  BlockResult result;
  std::vector<char> removed(devices_.size(), 0);
  std::vector<char> affected(devices_.size(), 0);
  for (auto d : ids) {
    auto& dev = devices_[checked(d)];
    if (!dev.active()) continue;
    dev.status = DeviceStatus::Blocked;
    dev.community.reset();
    removed[d.index()] = 1;
    ++result.newly_blocked;
  }
  if (result.newly_blocked == 0) return result;

  for (std::size_t b = 0; b < devices_.size(); ++b) {
    if (!removed[b]) continue;
    for (const auto& [target, tally] : out_[b]) {
      in_[target].erase(static_cast<std::uint32_t>(b));
      positive_edges_ -= tally.positive;
      negative_edges_ -= tally.negative;
      affected[target] = 1;
    }
    out_[b].clear();
  }
  const auto before = log_.size();
  std::erase_if(log_, [&](const TrustReport& r) { return removed[r.trustor.index()] != 0; });
  result.reverted_reports = before - log_.size();

  std::vector<double> replayed(devices_.size(), 0.0);
  for (const auto& r : log_) {
    const auto t = r.trustee.index();
    if (affected[t]) replayed[t] = aggregate(replayed[t], r.value, options_.aggregation_weight);
  }
  for (std::size_t t = 0; t < devices_.size(); ++t) {
    if (affected[t] && devices_[t].active()) devices_[t].trust_score = replayed[t];
  }
  return result;
}

std::vector<double> SignedTrustGraph::replay_scores() const {
  std::vector<double> scores(devices_.size(), 0.0);
  for (const auto& r : log_) {
    const auto t = r.trustee.index();
    scores[t] = aggregate(scores[t], r.value, options_.aggregation_weight);
  }
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    if (!devices_[i].active()) scores[i] = devices_[i].trust_score;
  }
  return scores;
}

void SignedTrustGraph::set_community(DeviceId d, std::optional<std::uint32_t> community) {
  devices_[checked(d)].community = community;
}

std::string format_double(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

void write_edge_list(std::ostream& out, const SignedTrustGraph& graph) {
  out << "trustor,trustee,value,timestamp\n";
  for (const auto& r : graph.report_log()) {
    out << r.trustor.value << ',' << r.trustee.value << ',' << format_double(r.value) << ','
        << r.timestamp << '\n';
  }
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::ParseError,
                "line " + std::to_string(line_no) + ": cannot parse '" + std::string(text) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

SignedTrustGraph read_edge_list(std::istream& in, GraphOptions options) {
  SignedTrustGraph graph(options);
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty()) continue;
    if (first) {
      first = false;
      if (view.size() >= 3 && static_cast<unsigned char>(view[0]) == 0xEF) view.remove_prefix(3);
      if (!view.empty() && !(view[0] >= '0' && view[0] <= '9')) continue;
    }
    std::string_view fields[4];
    std::size_t n = 0;
    while (n < 4) {
      auto comma = view.find(',');
      fields[n++] = trim(view.substr(0, comma));
      if (comma == std::string_view::npos) {
        view = {};
        break;
      }
      view.remove_prefix(comma + 1);
    }
    if (n != 4 || !view.empty()) {
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected 4 fields");
    }
    TrustReport report{DeviceId{parse_field<std::uint32_t>(fields[0], line_no)},
                       DeviceId{parse_field<std::uint32_t>(fields[1], line_no)},
                       parse_field<double>(fields[2], line_no),
                       parse_field<std::uint64_t>(fields[3], line_no)};
    const auto needed = std::max(report.trustor.index(), report.trustee.index()) + 1;
    if (needed > graph.device_count()) graph.add_devices(needed - graph.device_count());
    graph.submit_report(report);
  }
  return graph;
}

}  // namespace sigtrust
