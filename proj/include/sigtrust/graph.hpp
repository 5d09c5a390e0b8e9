#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sigtrust/error.hpp"

namespace sigtrust {

/// Dense, stable index of a device inside one graph.
struct DeviceId {
  std::uint32_t value{0};

  constexpr auto operator<=>(const DeviceId&) const = default;
  constexpr std::size_t index() const noexcept { return value; }
};

constexpr DeviceId device(std::size_t index) noexcept {
  return DeviceId{static_cast<std::uint32_t>(index)};
}

enum class DeviceStatus : std::uint8_t { Active, Blocked };

struct Device {
  DeviceId id;
  double trust_score{0.0};
  DeviceStatus status{DeviceStatus::Active};
  std::optional<std::uint32_t> community;

  bool active() const noexcept { return status == DeviceStatus::Active; }
};

/// One rating event. `value` lies in [-1, 1] and is never zero; its sign
/// selects the T+ or T- partition.
struct TrustReport {
  DeviceId trustor;
  DeviceId trustee;
  double value{0.0};
  std::uint64_t timestamp{0};

  bool positive() const noexcept { return value > 0.0; }
  bool operator==(const TrustReport&) const = default;
};

/// Sorted set of device ids with logarithmic membership.
class DeviceSet {
 public:
  DeviceSet() = default;
  explicit DeviceSet(std::vector<DeviceId> ids);

  bool contains(DeviceId d) const noexcept;
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  void insert(DeviceId d);

  auto begin() const noexcept { return ids_.begin(); }
  auto end() const noexcept { return ids_.end(); }
  const std::vector<DeviceId>& ids() const noexcept { return ids_; }

  bool operator==(const DeviceSet&) const = default;

 private:
  std::vector<DeviceId> ids_;
};

struct GraphOptions {
  /// EMA weight used when a report updates the trustee's score.
  double aggregation_weight{0.1};
};

struct BlockResult {
  std::size_t newly_blocked{0};
  std::size_t reverted_reports{0};
};

/// Signed, directed multigraph of trust reports.
///
/// Adjacency keeps, per ordered pair, the number of positive and negative
/// reports; neighbour queries return distinct devices. Queries only ever
/// report Active neighbours: a Blocked device stays in the id space but is
/// invisible to walks and detection.
///
/// Mutation is single-writer; concurrent const access is safe.
class SignedTrustGraph {
 public:
  struct Tally {
    std::uint32_t positive{0};
    std::uint32_t negative{0};
  };
  using Adjacency = std::unordered_map<std::uint32_t, Tally>;

  explicit SignedTrustGraph(GraphOptions options = {});

  DeviceId add_device();
  void add_devices(std::size_t count);

  /// Appends `report` if both endpoints are Active. Returns false (graph
  /// untouched) when either endpoint is Blocked.
  bool submit_report(const TrustReport& report);

  /// Stamps the report with the next event counter before submitting.
  bool submit_report(DeviceId trustor, DeviceId trustee, double value);

  std::size_t device_count() const noexcept { return devices_.size(); }
  std::size_t active_count() const noexcept;
  bool contains(DeviceId d) const noexcept { return d.index() < devices_.size(); }
  const Device& device(DeviceId d) const;
  const std::vector<Device>& devices() const noexcept { return devices_; }
  bool is_active(DeviceId d) const { return device(d).active(); }
  double trust_score(DeviceId d) const { return device(d).trust_score; }

  std::vector<DeviceId> positive_in(DeviceId d) const;
  std::vector<DeviceId> positive_out(DeviceId d) const;
  std::vector<DeviceId> negative_in(DeviceId d) const;
  std::vector<DeviceId> negative_out(DeviceId d) const;
  std::size_t negative_out_to(DeviceId from, DeviceId to) const;
  std::size_t positive_out_to(DeviceId from, DeviceId to) const;

  /// Distinct Active positive-out neighbours of `d` inside / outside `s`.
  std::size_t positive_out_within(DeviceId d, const DeviceSet& s) const;
  std::size_t positive_out_outside(DeviceId d, const DeviceSet& s) const;

  /// Distinct Active neighbours over in and out edges of both signs, sorted.
  std::vector<DeviceId> undirected_neighbors(DeviceId d) const;

  const Adjacency& out_edges(DeviceId d) const { return out_.at(checked(d)); }
  const Adjacency& in_edges(DeviceId d) const { return in_.at(checked(d)); }

  std::size_t positive_edge_count() const noexcept { return positive_edges_; }
  std::size_t negative_edge_count() const noexcept { return negative_edges_; }
  const std::vector<TrustReport>& report_log() const noexcept { return log_; }
  std::uint64_t clock() const noexcept { return clock_; }
  const GraphOptions& options() const noexcept { return options_; }

  /// Blocks every listed device, removes all reports they submitted from
  /// the adjacency and the log, and replays the surviving log to recompute
  /// the score of every Active trustee they touched. Scores of blocked
  /// devices are frozen at their value when blocked.
  BlockResult block_devices(std::span<const DeviceId> ids);

  /// Scores obtained by replaying the current log from zero. Entries for
  /// Blocked devices carry their frozen score.
  std::vector<double> replay_scores() const;

  void set_community(DeviceId d, std::optional<std::uint32_t> community);

  /// Score update rule shared by incremental ingestion and replay.
  static double aggregate(double score, double value, double weight) noexcept;

 private:
  std::size_t checked(DeviceId d) const;
  void validate(const TrustReport& report) const;
  template <typename Pred>
  std::vector<DeviceId> collect(const Adjacency& adjacency, Pred pred) const;

  GraphOptions options_;
  std::vector<Device> devices_;
  std::vector<Adjacency> out_;
  std::vector<Adjacency> in_;
  std::vector<TrustReport> log_;
  std::size_t positive_edges_{0};
  std::size_t negative_edges_{0};
  std::uint64_t clock_{0};
};

/// Writes `trustor,trustee,value,timestamp` lines with a header.
void write_edge_list(std::ostream& out, const SignedTrustGraph& graph);

/// Reads an edge list (header optional), creating devices up to the largest
/// id seen. Throws `Error{ParseError}` with the offending line number.
SignedTrustGraph read_edge_list(std::istream& in, GraphOptions options = {});

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace sigtrust

template <>
struct std::hash<sigtrust::DeviceId> {
  std::size_t operator()(sigtrust::DeviceId d) const noexcept {
    return std::hash<std::uint32_t>{}(d.value);
  }
};
