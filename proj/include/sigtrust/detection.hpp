#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "sigtrust/communities.hpp"
#include "sigtrust/embedding.hpp"
#include "sigtrust/graph.hpp"

namespace sigtrust {

struct DetectionThresholds {
  double alpha{0.95};    // trustor/trustee similarity that opens the self-promoting check
  std::size_t beta{2};   // in-group minus out-group positive-out margin
  double gamma{0.95};    // pairwise similarity that marks co-raters as colluders

  void validate() const {
    if (!(alpha > -1.0 && alpha < 1.0) || !(gamma > -1.0 && gamma < 1.0)) {
      throw Error(Errc::InvalidConfig, "similarity thresholds must lie in (-1, 1)");
    }
  }
};

struct DetectionVerdict {
  std::vector<DeviceId> self_promoting;  // M_s
  std::vector<DeviceId> bad_mouthing;    // M_b
  TrustReport triggering_report;

  bool empty() const noexcept { return self_promoting.empty() && bad_mouthing.empty(); }
  std::vector<DeviceId> all() const;
};

namespace detail {

template <typename Scalar>
std::optional<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> unit_row(const EmbeddingMatrix<Scalar>& emb,
                                                                  DeviceId d) {
  if (d.index() >= emb.device_count()) return std::nullopt;
  const Scalar norm = emb.node(d).norm();
  if (!(norm > Scalar(0))) return std::nullopt;
  return emb.node(d) / norm;
}

}  // namespace detail

/// Classifies one accepted report.
///
/// Positive report s -> t: when cos(phi(s), phi(t)) > alpha, the suspect set
/// is Omega = P_in(s) u P_out(s) u {s, t}; every member whose distinct
/// positive-out neighbours inside Omega exceed those outside by more than
/// beta is self-promoting.
///
/// Negative report s -> t: the suspect set is N_in(t); every pair of
/// distinct members with cos > gamma is bad-mouthing.
///
/// Only Active devices are ever reported. Throws StaleEmbeddings when an
/// endpoint has no row in `emb`.
template <typename Scalar>
DetectionVerdict detect(const SignedTrustGraph& graph, const EmbeddingMatrix<Scalar>& emb,
                        const TrustReport& report, const DetectionThresholds& thresholds) {
  if (report.trustor.index() >= emb.device_count() || report.trustee.index() >= emb.device_count()) {
    throw Error(Errc::StaleEmbeddings, "report endpoints postdate the embedding snapshot");
  }
  DetectionVerdict verdict;
  verdict.triggering_report = report;
  const auto s = report.trustor;
  const auto t = report.trustee;

  if (report.positive()) {
    if (!graph.is_active(s) || !graph.is_active(t)) return verdict;
    const auto us = detail::unit_row(emb, s);
    const auto ut = detail::unit_row(emb, t);
    if (!us || !ut || static_cast<double>(us->dot(*ut)) <= thresholds.alpha) return verdict;

    auto members = graph.positive_in(s);
    const auto outs = graph.positive_out(s);
    members.insert(members.end(), outs.begin(), outs.end());
    members.push_back(s);
    members.push_back(t);
    const DeviceSet omega(std::move(members));
    for (auto d : omega) {
      const auto inside = graph.positive_out_within(d, omega);
      const auto outside = graph.positive_out_outside(d, omega);
      if (inside > outside + thresholds.beta) verdict.self_promoting.push_back(d);
    }
    return verdict;
  }

  std::vector<DeviceId> suspects;
  std::vector<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> rows;
  for (auto d : graph.negative_in(t)) {
    if (graph.negative_out_to(d, t) == 0) continue;
    if (auto u = detail::unit_row(emb, d)) {
      suspects.push_back(d);
      rows.push_back(std::move(*u));
    }
  }
  if (suspects.size() < 2) return verdict;

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> unit(
      static_cast<Eigen::Index>(suspects.size()), static_cast<Eigen::Index>(emb.width()));
  for (std::size_t i = 0; i < rows.size(); ++i) unit.row(static_cast<Eigen::Index>(i)) = rows[i];
  const auto gram = (unit * unit.transpose()).eval();
  std::vector<char> flagged(suspects.size(), 0);
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < gram.cols(); ++j) {
      if (static_cast<double>(gram(i, j)) > thresholds.gamma) flagged[i] = flagged[j] = 1;
    }
  }
  for (std::size_t i = 0; i < suspects.size(); ++i) {
    if (flagged[i]) verdict.bad_mouthing.push_back(suspects[i]);
  }
  return verdict;
}

/// Runs `detect` for a batch of reports, grouping them by the trustee's
/// community and handling each group on its own worker (up to `workers`
/// threads). Results are returned in input order.
template <typename Scalar>
std::vector<DetectionVerdict> detect_by_community(const SignedTrustGraph& graph,
                                                  const EmbeddingMatrix<Scalar>& emb,
                                                  std::span<const TrustReport> reports,
                                                  const DetectionThresholds& thresholds,
                                                  const CommunityPartition& partition,
                                                  std::size_t workers = 1) {
  std::map<std::int64_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto c = partition.of(reports[i].trustee);
    groups[c ? static_cast<std::int64_t>(*c) : -1].push_back(i);
  }
  std::vector<std::vector<std::size_t>> work;
  for (auto& [c, indices] : groups) work.push_back(std::move(indices));

  std::vector<DetectionVerdict> results(reports.size());
  std::vector<std::exception_ptr> failures(work.size());
  auto run_group = [&](std::size_t g) {
    try {
      for (auto i : work[g]) results[i] = detect(graph, emb, reports[i], thresholds);
    } catch (...) {
      failures[g] = std::current_exception();
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, work.size()));
  if (workers == 1) {
    for (std::size_t g = 0; g < work.size(); ++g) run_group(g);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t g = w; g < work.size(); g += workers) run_group(g);
      });
    }
    for (auto& thread : pool) thread.join();
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return results;
}

/// Blocks M_s u M_b, reverts their reports and replays affected scores.
/// Returns the number of devices newly blocked.
std::size_t mitigate(SignedTrustGraph& graph, const DetectionVerdict& verdict);

/// `timestamp,SP,id...` and/or `timestamp,BM,id...`; nothing for an empty verdict.
void write_verdict(std::ostream& out, const DetectionVerdict& verdict);

}  // namespace sigtrust
