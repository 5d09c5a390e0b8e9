#include "sigtrust/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace sigtrust {

std::string_view to_string(BaselineKind kind) noexcept {
  switch (kind) {
    case BaselineKind::DDTMS: return "DDTMS";
    case BaselineKind::TD2D: return "T-D2D";
    case BaselineKind::LiuTrust: return "Liu-Trust";
    case BaselineKind::LightTrust: return "LightTrust";
    case BaselineKind::DTMSIoT: return "DTMS-IoT";
  }
  return "unknown";
}

void BaselineParams::validate() const {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  auto pair_ok = [&](double a, double b) { return unit(a) && unit(b) && std::abs(a + b - 1.0) < 1e-9; };
  if (!pair_ok(ddtms_alpha, ddtms_beta)) throw Error(Errc::InvalidConfig, "ddtms weights must sum to 1");
  if (!pair_ok(liu_alpha, liu_beta)) throw Error(Errc::InvalidConfig, "liu weights must sum to 1");
  if (!unit(td2d_omega)) throw Error(Errc::InvalidConfig, "td2d_omega must lie in [0, 1]");
  if (kmeans_k < 2) throw Error(Errc::InvalidConfig, "kmeans_k must be at least 2");
  if (!unit(block_threshold)) throw Error(Errc::InvalidConfig, "block_threshold must lie in [0, 1]");
  if (repeat_window == 0 || cluster_interval == 0) {
    throw Error(Errc::InvalidConfig, "repeat_window and cluster_interval must be positive");
  }
}

double ddtms_trust(double direct, double reputation, const BaselineParams& params) {
  return params.ddtms_alpha * direct + params.ddtms_beta * reputation;
}

double td2d_trust(double dtl, double itl, double omega) { return (1.0 - omega) * dtl + omega * itl; }

double liu_trust(double resp, double rating, double indirect, const BaselineParams& params) {
  return params.liu_alpha * (resp * rating) + params.liu_beta * indirect;
}

double lighttrust(double compat, double coop, double delivery) {
  return (compat + coop + delivery) / 3.0;
}

DtmsClustering dtms_iot_cluster(const PointMatrix<double>& features, std::size_t k, std::uint64_t seed) {
  if (features.cols() < 2) throw Error(Errc::InvalidConfig, "DTMS-IoT expects three feature columns");
  DtmsClustering out{kmeans(features, k, seed), {}};
  const auto negative = features.col(1);
  const double mean = negative.mean();
  const double stddev = std::sqrt((negative.array() - mean).square().mean());
  out.flagged.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    out.flagged[c] = out.clusters.centroids(static_cast<Eigen::Index>(c), 1) > mean + stddev;
  }
  return out;
}

BaselineState::BaselineState(BaselineKind kind, BaselineParams params, std::size_t device_count,
                             std::uint64_t seed)
    : kind_(kind),
      params_(params),
      seed_(seed),
      ratings_(device_count),
      received_(device_count),
      given_(device_count),
      gone_(device_count, 0),
      limiter_(params.repeat_limit, params.repeat_window) {
  params_.validate();
}

double BaselineState::direct(DeviceId trustor, DeviceId trustee) const {
  const auto& row = ratings_.at(trustor.index());
  auto it = row.find(trustee.value);
  return it == row.end() ? 0.5 : it->second.mean();
}

double BaselineState::indirect(DeviceId trustee, std::optional<DeviceId> except) const {
  const auto& r = received_.at(trustee.index());
  double sum = r.direct_sum;
  std::uint32_t raters = r.raters;
  if (except) {
    const auto& row = ratings_.at(except->index());
    if (auto it = row.find(trustee.value); it != row.end()) {
      sum -= it->second.mean();
      --raters;
    }
  }
  return raters == 0 ? 0.5 : std::clamp(sum / raters, 0.0, 1.0);
}

double BaselineState::trust(DeviceId trustor, DeviceId trustee) const {
  const double dt = direct(trustor, trustee);
  const double it = indirect(trustee, trustor);
  const auto& r = received_.at(trustee.index());
  // Laplace-smoothed share of positive reports the trustee has received.
  const double delivered = (r.positive + 1.0) / (r.total + 2.0);
  switch (kind_) {
    case BaselineKind::DDTMS: return ddtms_trust(dt, it, params_);
    case BaselineKind::TD2D: return td2d_trust(dt, it, params_.td2d_omega);
    case BaselineKind::LiuTrust: return liu_trust(delivered, dt, it, params_);
    case BaselineKind::LightTrust: return lighttrust(dt, direct(trustee, trustor), delivered);
    case BaselineKind::DTMSIoT: return indirect(trustee);
  }
  return 0.5;
}

void BaselineState::add_rating(const TrustReport& report) {
  auto& stat = ratings_[report.trustor.index()][report.trustee.value];
  auto& r = received_[report.trustee.index()];
  if (stat.count > 0) {
    r.direct_sum -= stat.mean();
  } else {
    ++r.raters;
  }
  stat.sum += to_unit(report.value);
  stat.raw += report.value;
  ++stat.count;
  r.direct_sum += stat.mean();
  r.value_sum += report.value;
  ++r.total;
  if (report.positive()) {
    ++stat.positive;
    ++r.positive;
  }
  auto& g = given_[report.trustor.index()];
  ++g.total;
  if (!report.positive()) ++g.negative;
}

bool RepeatLimiter::record(const TrustReport& report, std::vector<DeviceId>& offenders) {
  const auto a = report.trustor.value;
  const auto b = report.trustee.value;
  std::uint64_t key = 0;
  if (report.positive()) {
    key = (std::uint64_t{std::min(a, b)} << 32 | std::max(a, b)) << 1;
  } else {
    key = (std::uint64_t{a} << 32 | b) << 1 | 1;
  }
  auto& window = recent_[key];
  window.push_back({report.timestamp, a});
  while (report.timestamp - window.front().timestamp >= window_) window.pop_front();
  if (window.size() <= limit_) return false;
  for (const auto& entry : window) offenders.push_back(DeviceId{entry.trustor});
  return true;
}

std::vector<DeviceId> BaselineState::run_clustering(std::uint64_t now) {
  std::vector<std::uint32_t> ids;
  for (std::uint32_t v = 0; v < gone_.size(); ++v) {
    if (!gone_[v]) ids.push_back(v);
  }
  if (ids.size() < params_.kmeans_k) return {};
  const double elapsed = static_cast<double>(now - first_event_.value_or(now) + 1);
  PointMatrix<double> features(static_cast<Eigen::Index>(ids.size()), 3);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& r = received_[ids[i]];
    const auto& g = given_[ids[i]];
    const auto row = static_cast<Eigen::Index>(i);
    features(row, 0) = r.total == 0 ? 0.5 : to_unit(r.value_sum / r.total);
    features(row, 1) = g.total == 0 ? 0.0 : static_cast<double>(g.negative) / g.total;
    features(row, 2) = g.total / elapsed;
  }
  const auto clustering = dtms_iot_cluster(normalize_columns(features), params_.kmeans_k,
                                           seed_ + clusterings_++);
  std::vector<DeviceId> flagged;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (clustering.flagged[clustering.clusters.assignment[i]]) flagged.push_back(DeviceId{ids[i]});
  }
  return flagged;
}

std::vector<DeviceId> BaselineState::ingest(const TrustReport& report) {
  if (report.trustor.index() >= ratings_.size() || report.trustee.index() >= ratings_.size()) {
    throw Error(Errc::UnknownDevice, "report endpoint outside the baseline ledger");
  }
  if (!first_event_) first_event_ = report.timestamp;
  std::vector<DeviceId> blocked;
  if (gone_[report.trustor.index()] || gone_[report.trustee.index()]) return blocked;
  add_rating(report);

  limiter_.record(report, blocked);
  if (trust(report.trustor, report.trustee) < params_.block_threshold) blocked.push_back(report.trustee);
  if (kind_ == BaselineKind::DTMSIoT && ++since_clustering_ >= params_.cluster_interval) {
    since_clustering_ = 0;
    auto flagged = run_clustering(report.timestamp);
    blocked.insert(blocked.end(), flagged.begin(), flagged.end());
  }
  std::sort(blocked.begin(), blocked.end());
  blocked.erase(std::unique(blocked.begin(), blocked.end()), blocked.end());
  return blocked;
}

void BaselineState::forget(std::span<const DeviceId> ids) {
  for (auto d : ids) {
    const auto v = d.index();
    if (v >= ratings_.size() || gone_[v]) continue;
    gone_[v] = 1;
    for (const auto& [trustee, stat] : ratings_[v]) {
      auto& r = received_[trustee];
      r.direct_sum -= stat.mean();
      --r.raters;
      r.total -= stat.count;
      r.positive -= stat.positive;
      r.value_sum -= stat.raw;
    }
    ratings_[v].clear();
    given_[v] = Given{};
  }
}

}  // namespace sigtrust
