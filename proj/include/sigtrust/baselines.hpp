#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sigtrust/graph.hpp"
#include "sigtrust/kmeans.hpp"

namespace sigtrust {

enum class BaselineKind : std::uint8_t { DDTMS, TD2D, LiuTrust, LightTrust, DTMSIoT };

std::string_view to_string(BaselineKind kind) noexcept;

struct BaselineParams {
  double ddtms_alpha{0.5};
  double ddtms_beta{0.5};
  double td2d_omega{0.5};
  double liu_alpha{0.5};
  double liu_beta{0.5};
  std::size_t kmeans_k{8};
  double block_threshold{0.2};      // on the [0, 1] score scale
  std::size_t repeat_limit{5};      // identical-sign reports tolerated per pair and window
  std::size_t repeat_window{5000};  // in events
  std::size_t cluster_interval{500};

  void validate() const;
};

// Scores below live on [0, 1]; ledger values in [-1, 1] map through (x + 1) / 2.
inline double to_unit(double value) noexcept { return (value + 1.0) / 2.0; }

double ddtms_trust(double direct, double reputation, const BaselineParams& params);
double td2d_trust(double dtl, double itl, double omega);
double liu_trust(double resp, double rating, double indirect, const BaselineParams& params);
double lighttrust(double compat, double coop, double delivery);

struct DtmsClustering {
  KMeansResult<double> clusters;
  std::vector<bool> flagged;  // per cluster
};

/// k-means over per-device features (mean received rating, fraction of
/// negative ratings given, report rate), each already scaled to [0, 1].
/// A cluster is flagged when its centroid's negative-given component exceeds
/// the population mean plus one standard deviation.
DtmsClustering dtms_iot_cluster(const PointMatrix<double>& features, std::size_t k, std::uint64_t seed);

/// Sliding-window cap on identical-sign reports. Positive reports are
/// counted per unordered pair, so two devices inflating each other share one
/// budget; negative reports are counted per directed pair.
class RepeatLimiter {
 public:
  RepeatLimiter(std::size_t limit, std::size_t window) : limit_(limit), window_(window) {}

  /// Records `report`; when its pair exceeds the limit, appends every
  /// trustor that contributed to the pair's window to `offenders`.
  bool record(const TrustReport& report, std::vector<DeviceId>& offenders);

 private:
  struct Recent {
    std::uint64_t timestamp;
    std::uint32_t trustor;
  };
  std::size_t limit_;
  std::size_t window_;
  std::unordered_map<std::uint64_t, std::deque<Recent>> recent_;
};

/// Per-baseline rating ledger plus the shared blocking harness.
class BaselineState {
 public:
  BaselineState(BaselineKind kind, BaselineParams params, std::size_t device_count,
                std::uint64_t seed = 0);

  BaselineKind kind() const noexcept { return kind_; }
  const BaselineParams& params() const noexcept { return params_; }

  /// Records an accepted report and returns the devices this baseline wants
  /// blocked (possibly empty).
  std::vector<DeviceId> ingest(const TrustReport& report);

  /// Forgets every rating submitted by the listed devices (mirrors the
  /// revert performed by the graph) and stops tracking them.
  void forget(std::span<const DeviceId> ids);

  /// Trust that `trustor` places in `trustee` under this baseline's formula.
  double trust(DeviceId trustor, DeviceId trustee) const;

  /// Mean direct trust of `trustee` over raters other than `except`
  /// (0.5 without such raters).
  double indirect(DeviceId trustee, std::optional<DeviceId> except = std::nullopt) const;
  double direct(DeviceId trustor, DeviceId trustee) const;

 private:
  struct PairStat {
    double sum{0.0};   // of unit-scaled values
    double raw{0.0};   // of ledger values
    std::uint32_t count{0};
    std::uint32_t positive{0};
    double mean() const noexcept { return sum / count; }
  };
  struct Received {
    double direct_sum{0.0};  // over raters, of each rater's mean direct trust
    std::uint32_t raters{0};
    std::uint32_t positive{0};
    std::uint32_t total{0};
    double value_sum{0.0};
  };
  struct Given {
    std::uint32_t negative{0};
    std::uint32_t total{0};
  };
  std::vector<DeviceId> run_clustering(std::uint64_t now);
  void add_rating(const TrustReport& report);

  BaselineKind kind_;
  BaselineParams params_;
  std::uint64_t seed_;
  std::vector<std::unordered_map<std::uint32_t, PairStat>> ratings_;  // [trustor][trustee]
  std::vector<Received> received_;
  std::vector<Given> given_;
  std::vector<char> gone_;
  RepeatLimiter limiter_;
  std::optional<std::uint64_t> first_event_;
  std::size_t since_clustering_{0};
  std::size_t clusterings_{0};
};

}  // namespace sigtrust
