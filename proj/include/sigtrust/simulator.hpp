#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sigtrust/baselines.hpp"
#include "sigtrust/detection.hpp"
#include "sigtrust/embedding.hpp"
#include "sigtrust/graph.hpp"

namespace sigtrust {

enum class AttackKind : std::uint8_t { SelfPromoting, BadMouthing };
enum class AttackScale : std::uint8_t { Small, Large };
enum class TmsKind : std::uint8_t { Trust2Vec, DDTMS, TD2D, LiuTrust, LightTrust, DTMSIoT, Null, Oracle };
enum class SweepAxis : std::uint8_t { MaliciousFraction, AttackDensity };

std::string_view to_string(AttackKind kind) noexcept;
std::string_view to_string(AttackScale scale) noexcept;
std::string_view to_string(TmsKind kind) noexcept;
std::string_view to_string(SweepAxis axis) noexcept;
std::optional<AttackKind> parse_attack_kind(std::string_view text);
std::optional<AttackScale> parse_attack_scale(std::string_view text);
std::optional<TmsKind> parse_tms(std::string_view text);
std::optional<SweepAxis> parse_axis(std::string_view text);

/// The comparison set used by every figure: the embedding detector first,
/// then the five baselines.
inline constexpr TmsKind kFigureTms[] = {TmsKind::Trust2Vec, TmsKind::DDTMS,      TmsKind::TD2D,
                                         TmsKind::LiuTrust,  TmsKind::LightTrust, TmsKind::DTMSIoT};

struct ScenarioConfig {
  std::size_t device_count{2000};
  std::size_t cluster_count{20};
  double intra_cluster_interaction_prob{0.9};
  std::size_t partners_per_device{8};
  double benign_positive_prob{0.9};
  AttackKind attack_kind{AttackKind::SelfPromoting};
  AttackScale attack_scale{AttackScale::Large};
  double malicious_fraction{0.2};
  double attack_density{0.25};
  std::size_t total_reports{10000};
  TmsKind tms{TmsKind::Trust2Vec};
  std::uint64_t seed{1};
  std::size_t retrain_interval{500};
  TrainConfig train{};
  // beta sits at the partner degree: a benign device never rates more than
  // partners_per_device others, so only a collusion group can clear it.
  DetectionThresholds thresholds{.alpha = 0.95, .beta = 8, .gamma = 0.95};
  BaselineParams baseline{};
  /// Allow fractions outside [0.05, 0.5].
  bool unsafe_ranges{false};
  /// Record wall-clock runtime_ms; off by default so reruns are byte-identical.
  bool timing{false};

  void validate() const;
};

/// Synthetic deployment: a seeded trust graph plus the ground truth the
/// generator used to build it.
struct Topology {
  SignedTrustGraph graph;
  std::vector<std::uint32_t> cluster;            // planted cluster per device
  std::vector<std::vector<DeviceId>> partners;   // interaction partners per device
  std::vector<char> malicious;                   // planted attacker labels
  std::size_t seeded_reports{0};
};

/// Assigns devices round-robin to clusters, draws each device's interaction
/// partners (own cluster with probability intra_cluster_interaction_prob),
/// plants round(malicious_fraction * device_count) attackers, and seeds one
/// +1 report from every benign device to each of its benign partners.
Topology build_topology(const ScenarioConfig& cfg);

struct AttackerScript {
  AttackKind kind{AttackKind::SelfPromoting};
  AttackScale scale{AttackScale::Small};
  std::vector<DeviceId> malicious;
  std::vector<std::pair<DeviceId, DeviceId>> pairs;  // small scale
  std::vector<DeviceId> victims;                     // per pair (small) or one (large)

  /// The first `count` attack reports in script order (timestamps unset).
  std::vector<TrustReport> reports(std::size_t count, std::uint64_t seed) const;
};

/// Throws ConfigMismatch when fewer than two devices are malicious.
AttackerScript script_attack(const ScenarioConfig& cfg, const Topology& topology);

struct AttackerTally {
  DeviceId device;
  std::size_t successes{0};  // AS_i
  std::size_t attempts{0};   // AA_i

  bool operator==(const AttackerTally&) const = default;
};

struct MetricsRecord {
  TmsKind tms{TmsKind::Trust2Vec};
  AttackKind attack_kind{AttackKind::SelfPromoting};
  AttackScale attack_scale{AttackScale::Small};
  double malicious_fraction{0.0};
  double attack_density{0.0};
  std::uint64_t seed{0};

  std::vector<AttackerTally> per_device;
  double asr{0.0};
  std::size_t true_positives{0};   // planted attackers blocked
  std::size_t false_positives{0};  // benign devices blocked

  std::size_t generated{0};  // seeded + streamed reports
  std::size_t accepted{0};   // still in the log at the end
  std::size_t rejected{0};
  std::size_t reverted{0};
  double runtime_ms{0.0};

  bool operator==(const MetricsRecord&) const = default;
};

/// Mean of AS_i / AA_i over devices with AA_i > 0; 0 when there are none.
double attack_success_rate(std::span<const std::pair<std::size_t, std::size_t>> per_device);
double attack_success_rate(std::span<const AttackerTally> per_device);

/// Drives one scenario. An attack report succeeds when it is accepted and its
/// trustor is never blocked afterwards; a report rejected only because its
/// benign target has already been blocked also counts as a success, since
/// the attack reached its goal.
MetricsRecord run_scenario(const ScenarioConfig& cfg);

/// One run per value per TMS, value-major. Point i uses seed cfg.seed + i
/// for every TMS. `jobs` > 1 runs scenarios on worker threads; results are
/// identical to the sequential order.
std::vector<MetricsRecord> sweep(const ScenarioConfig& cfg, SweepAxis axis, std::span<const double> values,
                                 std::span<const TmsKind> tms, std::size_t jobs = 1);

/// `tms,attack_kind,scale,malicious_fraction,attack_density,asr,true_positives,false_positives,runtime_ms`
void write_results(std::ostream& out, std::span<const MetricsRecord> records, bool with_header = true);

}  // namespace sigtrust
