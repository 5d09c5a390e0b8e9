#include "sigtrust/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <ostream>
#include <random>
#include <thread>

#include "sigtrust/walk.hpp"

namespace sigtrust {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view text, const Enum (&values)[N]) {
  for (Enum v : values) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

// Independent sub-streams per purpose, so adding draws in one place does not
// shift every other random choice.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t{out[0]} << 32) | out[1];
}

enum Stream : std::uint64_t { kTopology = 1, kMalicious, kScript, kScriptOrder, kBenign, kTraining, kBaseline };

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  std::uniform_int_distribution<std::size_t> u(0, items.size() - 1);
  return items[u(rng)];
}

class Defense {
 public:
  virtual ~Defense() = default;
  virtual std::vector<DeviceId> start(const SignedTrustGraph&) { return {}; }
  virtual std::vector<DeviceId> on_accepted(const SignedTrustGraph& graph, const TrustReport& report) = 0;
  virtual void on_blocked(std::span<const DeviceId>) {}
};

class NullDefense final : public Defense {
 public:
  std::vector<DeviceId> on_accepted(const SignedTrustGraph&, const TrustReport&) override { return {}; }
};

class OracleDefense final : public Defense {
 public:
  explicit OracleDefense(std::vector<DeviceId> malicious) : malicious_(std::move(malicious)) {}
  std::vector<DeviceId> start(const SignedTrustGraph&) override { return malicious_; }
  std::vector<DeviceId> on_accepted(const SignedTrustGraph&, const TrustReport&) override { return {}; }

 private:
  std::vector<DeviceId> malicious_;
};

class BaselineDefense final : public Defense {
 public:
  BaselineDefense(BaselineKind kind, const ScenarioConfig& cfg, const SignedTrustGraph& graph)
      : state_(kind, cfg.baseline, graph.device_count(), derive_seed(cfg.seed, kBaseline)) {
    for (const auto& r : graph.report_log()) {
      auto ids = state_.ingest(r);
      pending_.insert(pending_.end(), ids.begin(), ids.end());
    }
  }
  std::vector<DeviceId> start(const SignedTrustGraph&) override { return std::move(pending_); }
  std::vector<DeviceId> on_accepted(const SignedTrustGraph&, const TrustReport& report) override {
    return state_.ingest(report);
  }
  void on_blocked(std::span<const DeviceId> ids) override { state_.forget(ids); }

 private:
  BaselineState state_;
  std::vector<DeviceId> pending_;
};

// Embedding detector: periodic retraining, detection on every accepted
// report, plus the same per-pair repeat guard the baselines get.
class Trust2VecDefense final : public Defense {
 public:
  explicit Trust2VecDefense(const ScenarioConfig& cfg)
      : cfg_(cfg), limiter_(cfg.baseline.repeat_limit, cfg.baseline.repeat_window) {}

  std::vector<DeviceId> start(const SignedTrustGraph& graph) override {
    retrain(graph);
    return {};
  }

  std::vector<DeviceId> on_accepted(const SignedTrustGraph& graph, const TrustReport& report) override {
    std::vector<DeviceId> out;
    limiter_.record(report, out);
    since_snapshot_.push_back(report);
    if (++accepted_ % cfg_.retrain_interval != 0) {
      append(out, detect(graph, emb_, report, cfg_.thresholds));
      return out;
    }
    // Reports that arrived after the last snapshot were judged against stale
    // rows (a fresh target has no trained vector yet); judge them again.
    retrain(graph);
    for (const auto& r : since_snapshot_) append(out, detect(graph, emb_, r, cfg_.thresholds));
    since_snapshot_.clear();
    return out;
  }

 private:
  static void append(std::vector<DeviceId>& out, const DetectionVerdict& verdict) {
    out.insert(out.end(), verdict.self_promoting.begin(), verdict.self_promoting.end());
    out.insert(out.end(), verdict.bad_mouthing.begin(), verdict.bad_mouthing.end());
  }

  void retrain(const SignedTrustGraph& graph) {
    TrainConfig train = cfg_.train;
    train.seed = derive_seed(cfg_.seed ^ cfg_.train.seed, kTraining, retrains_++);
    emb_ = train_embeddings(graph, train);
  }

  const ScenarioConfig& cfg_;
  RepeatLimiter limiter_;
  EmbeddingMatrix<double> emb_;
  std::vector<TrustReport> since_snapshot_;
  std::size_t accepted_{0};
  std::size_t retrains_{0};
};

std::unique_ptr<Defense> make_defense(const ScenarioConfig& cfg, const Topology& topo) {
  switch (cfg.tms) {
    case TmsKind::Trust2Vec: return std::make_unique<Trust2VecDefense>(cfg);
    case TmsKind::DDTMS: return std::make_unique<BaselineDefense>(BaselineKind::DDTMS, cfg, topo.graph);
    case TmsKind::TD2D: return std::make_unique<BaselineDefense>(BaselineKind::TD2D, cfg, topo.graph);
    case TmsKind::LiuTrust: return std::make_unique<BaselineDefense>(BaselineKind::LiuTrust, cfg, topo.graph);
    case TmsKind::LightTrust:
      return std::make_unique<BaselineDefense>(BaselineKind::LightTrust, cfg, topo.graph);
    case TmsKind::DTMSIoT: return std::make_unique<BaselineDefense>(BaselineKind::DTMSIoT, cfg, topo.graph);
    case TmsKind::Null: return std::make_unique<NullDefense>();
    case TmsKind::Oracle: {
      std::vector<DeviceId> planted;
      for (std::size_t i = 0; i < topo.malicious.size(); ++i) {
        if (topo.malicious[i]) planted.push_back(device(i));
      }
      return std::make_unique<OracleDefense>(std::move(planted));
    }
  }
  throw Error(Errc::InvalidConfig, "unknown tms");
}

}  // namespace

std::string_view to_string(AttackKind kind) noexcept {
  return kind == AttackKind::SelfPromoting ? "self_promoting" : "bad_mouthing";
}

std::string_view to_string(AttackScale scale) noexcept {
  return scale == AttackScale::Small ? "small" : "large";
}

std::string_view to_string(TmsKind kind) noexcept {
  switch (kind) {
    case TmsKind::Trust2Vec: return "Trust2Vec";
    case TmsKind::DDTMS: return to_string(BaselineKind::DDTMS);
    case TmsKind::TD2D: return to_string(BaselineKind::TD2D);
    case TmsKind::LiuTrust: return to_string(BaselineKind::LiuTrust);
    case TmsKind::LightTrust: return to_string(BaselineKind::LightTrust);
    case TmsKind::DTMSIoT: return to_string(BaselineKind::DTMSIoT);
    case TmsKind::Null: return "null";
    case TmsKind::Oracle: return "oracle";
  }
  return "unknown";
}

std::string_view to_string(SweepAxis axis) noexcept {
  return axis == SweepAxis::MaliciousFraction ? "malicious_fraction" : "attack_density";
}

std::optional<AttackKind> parse_attack_kind(std::string_view text) {
  static constexpr AttackKind all[] = {AttackKind::SelfPromoting, AttackKind::BadMouthing};
  return parse_enum(text, all);
}

std::optional<AttackScale> parse_attack_scale(std::string_view text) {
  static constexpr AttackScale all[] = {AttackScale::Small, AttackScale::Large};
  return parse_enum(text, all);
}

std::optional<TmsKind> parse_tms(std::string_view text) {
  static constexpr TmsKind all[] = {TmsKind::Trust2Vec, TmsKind::DDTMS,      TmsKind::TD2D,
                                    TmsKind::LiuTrust,  TmsKind::LightTrust, TmsKind::DTMSIoT,
                                    TmsKind::Null,      TmsKind::Oracle};
  return parse_enum(text, all);
}

std::optional<SweepAxis> parse_axis(std::string_view text) {
  static constexpr SweepAxis all[] = {SweepAxis::MaliciousFraction, SweepAxis::AttackDensity};
  return parse_enum(text, all);
}

void ScenarioConfig::validate() const {
  auto check_fraction = [&](double value, std::string_view key) {
    const bool ok = unsafe_ranges ? (value >= 0.0 && value <= 1.0) : (value >= 0.05 && value <= 0.5);
    if (!ok) {
      throw Error(Errc::InvalidRange, std::string(key) + " = " + format_double(value) +
                                          (unsafe_ranges ? " outside [0, 1]" : " outside [0.05, 0.5]"));
    }
  };
  check_fraction(malicious_fraction, "malicious_fraction");
  check_fraction(attack_density, "attack_density");
  if (cluster_count == 0) throw Error(Errc::InvalidConfig, "cluster_count must be positive");
  if (device_count < 2 * cluster_count) {
    throw Error(Errc::InvalidConfig, "device_count must be at least 2 * cluster_count");
  }
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(intra_cluster_interaction_prob)) {
    throw Error(Errc::InvalidRange, "intra_cluster_interaction_prob must lie in [0, 1]");
  }
  if (!unit(benign_positive_prob)) throw Error(Errc::InvalidRange, "benign_positive_prob must lie in [0, 1]");
  if (partners_per_device == 0) throw Error(Errc::InvalidConfig, "partners_per_device must be positive");
  if (total_reports == 0) throw Error(Errc::InvalidConfig, "total_reports must be positive");
  if (retrain_interval == 0) throw Error(Errc::InvalidConfig, "retrain_interval must be positive");
  train.validate();
  thresholds.validate();
  baseline.validate();
}

Topology build_topology(const ScenarioConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.device_count;
  const std::size_t clusters = cfg.cluster_count;
  Topology topo;
  topo.graph.add_devices(n);
  topo.cluster.resize(n);
  std::vector<std::vector<DeviceId>> members(clusters);
  for (std::size_t i = 0; i < n; ++i) {
    topo.cluster[i] = static_cast<std::uint32_t>(i % clusters);
    members[i % clusters].push_back(device(i));
  }

  Rng pick_rng(derive_seed(cfg.seed, kMalicious));
  std::vector<DeviceId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = device(i);
  std::shuffle(order.begin(), order.end(), pick_rng);
  const auto planted = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(cfg.malicious_fraction * n)));
  topo.malicious.assign(n, 0);
  for (std::size_t i = 0; i < planted; ++i) topo.malicious[order[i].index()] = 1;

  Rng rng(derive_seed(cfg.seed, kTopology));
  std::bernoulli_distribution local(cfg.intra_cluster_interaction_prob);
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  const std::size_t wanted = std::min(cfg.partners_per_device, n - 1);
  topo.partners.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& mine = topo.partners[i];
    const auto& own = members[topo.cluster[i]];
    auto add = [&](DeviceId d) {
      if (d.index() != i && std::find(mine.begin(), mine.end(), d) == mine.end()) mine.push_back(d);
    };
    for (std::size_t attempt = 0; mine.size() < wanted && attempt < 64 * wanted; ++attempt) {
      if (clusters == 1 || (local(rng) && own.size() > 1)) {
        add(pick(own, rng));
      } else {
        const auto d = device(any(rng));
        if (topo.cluster[d.index()] != topo.cluster[i]) add(d);
      }
    }
    for (std::size_t j = 0; mine.size() < wanted && j < n; ++j) add(device(j));
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (topo.malicious[i]) continue;
    for (DeviceId p : topo.partners[i]) {
      if (topo.malicious[p.index()]) continue;
      topo.graph.submit_report(TrustReport{device(i), p, 1.0, topo.graph.clock()});
      ++topo.seeded_reports;
    }
  }
  return topo;
}

AttackerScript script_attack(const ScenarioConfig& cfg, const Topology& topology) {
  AttackerScript script;
  script.kind = cfg.attack_kind;
  script.scale = cfg.attack_scale;
  for (std::size_t i = 0; i < topology.malicious.size(); ++i) {
    if (topology.malicious[i]) script.malicious.push_back(device(i));
  }
  if (script.malicious.size() < 2) {
    throw Error(Errc::ConfigMismatch, "attacks need at least two malicious devices, got " +
                                          std::to_string(script.malicious.size()));
  }
  Rng rng(derive_seed(cfg.seed, kScript));
  std::vector<DeviceId> benign;
  for (std::size_t i = 0; i < topology.malicious.size(); ++i) {
    if (!topology.malicious[i]) benign.push_back(device(i));
  }

  if (cfg.attack_scale == AttackScale::Small) {
    auto shuffled = script.malicious;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (std::size_t i = 0; i + 1 < shuffled.size(); i += 2) script.pairs.emplace_back(shuffled[i], shuffled[i + 1]);
  }
  if (cfg.attack_kind == AttackKind::BadMouthing) {
    if (benign.empty()) throw Error(Errc::ConfigMismatch, "bad-mouthing needs at least one benign victim");
    auto benign_partner = [&](DeviceId d) -> std::optional<DeviceId> {
      std::vector<DeviceId> options;
      for (DeviceId p : topology.partners[d.index()]) {
        if (!topology.malicious[p.index()]) options.push_back(p);
      }
      if (options.empty()) return std::nullopt;
      return pick(options, rng);
    };
    if (cfg.attack_scale == AttackScale::Small) {
      for (const auto& [a, b] : script.pairs) {
        auto victim = benign_partner(a);
        if (!victim) victim = benign_partner(b);
        script.victims.push_back(victim ? *victim : pick(benign, rng));
      }
    } else {
      script.victims.push_back(pick(benign, rng));
    }
  }
  return script;
}

std::vector<TrustReport> AttackerScript::reports(std::size_t count, std::uint64_t seed) const {
  std::vector<TrustReport> out;
  out.reserve(count);
  Rng rng(seed);
  if (scale == AttackScale::Small) {
    if (pairs.empty()) return out;
    std::vector<std::size_t> turn(pairs.size(), 0);
    std::uniform_int_distribution<std::size_t> which(0, pairs.size() - 1);
    while (out.size() < count) {
      const std::size_t p = which(rng);
      const bool first = turn[p]++ % 2 == 0;
      const DeviceId from = first ? pairs[p].first : pairs[p].second;
      if (kind == AttackKind::SelfPromoting) {
        out.push_back({from, first ? pairs[p].second : pairs[p].first, 1.0, 0});
      } else {
        out.push_back({from, victims[p], -1.0, 0});
      }
    }
    return out;
  }
  auto members = malicious;
  while (out.size() < count) {
    std::shuffle(members.begin(), members.end(), rng);
    for (DeviceId from : members) {
      if (out.size() == count) break;
      if (kind == AttackKind::BadMouthing) {
        out.push_back({from, victims.front(), -1.0, 0});
        continue;
      }
      auto others = malicious;
      std::shuffle(others.begin(), others.end(), rng);
      for (DeviceId to : others) {
        if (out.size() == count) break;
        if (to != from) out.push_back({from, to, 1.0, 0});
      }
    }
  }
  return out;
}

double attack_success_rate(std::span<const std::pair<std::size_t, std::size_t>> per_device) {
  double sum = 0.0;
  std::size_t attackers = 0;
  for (const auto& [successes, attempts] : per_device) {
    if (attempts == 0) continue;
    sum += static_cast<double>(successes) / static_cast<double>(attempts);
    ++attackers;
  }
  return attackers == 0 ? 0.0 : sum / static_cast<double>(attackers);
}

double attack_success_rate(std::span<const AttackerTally> per_device) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(per_device.size());
  for (const auto& t : per_device) pairs.emplace_back(t.successes, t.attempts);
  return attack_success_rate(pairs);
}

MetricsRecord run_scenario(const ScenarioConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  Topology topo = build_topology(cfg);
  auto& graph = topo.graph;
  const std::size_t n = cfg.device_count;

  MetricsRecord rec;
  rec.tms = cfg.tms;
  rec.attack_kind = cfg.attack_kind;
  rec.attack_scale = cfg.attack_scale;
  rec.malicious_fraction = cfg.malicious_fraction;
  rec.attack_density = cfg.attack_density;
  rec.seed = cfg.seed;
  rec.generated = topo.seeded_reports + cfg.total_reports;

  const auto planted = static_cast<std::size_t>(std::count(topo.malicious.begin(), topo.malicious.end(), 1));
  std::vector<TrustReport> attacks;
  if (planted >= 2) {
    const auto count = static_cast<std::size_t>(std::llround(cfg.attack_density * cfg.total_reports));
    attacks = script_attack(cfg, topo).reports(count, derive_seed(cfg.seed, kScript, 1));
  }
  std::vector<char> is_attack(cfg.total_reports, 0);
  std::fill_n(is_attack.begin(), attacks.size(), 1);
  Rng order_rng(derive_seed(cfg.seed, kScriptOrder));
  std::shuffle(is_attack.begin(), is_attack.end(), order_rng);

  std::vector<DeviceId> senders;
  std::vector<std::vector<DeviceId>> benign_partners(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (topo.malicious[i]) continue;
    for (DeviceId p : topo.partners[i]) {
      if (!topo.malicious[p.index()]) benign_partners[i].push_back(p);
    }
    if (!benign_partners[i].empty()) senders.push_back(device(i));
  }

  auto defense = make_defense(cfg, topo);
  std::vector<char> ever_blocked(n, 0);
  auto apply = [&](std::vector<DeviceId> ids) {
    if (ids.empty()) return;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::erase_if(ids, [&](DeviceId d) { return !graph.is_active(d); });
    if (ids.empty()) return;
    rec.reverted += graph.block_devices(ids).reverted_reports;
    for (DeviceId d : ids) ever_blocked[d.index()] = 1;
    defense->on_blocked(ids);
  };
  apply(defense->start(graph));

  std::vector<std::size_t> attempts(n, 0), accepted(n, 0), reached(n, 0);
  Rng benign_rng(derive_seed(cfg.seed, kBenign));
  std::bernoulli_distribution positive(cfg.benign_positive_prob);
  std::size_t next_attack = 0;
  for (std::size_t e = 0; e < cfg.total_reports; ++e) {
    TrustReport report;
    if (is_attack[e]) {
      report = attacks[next_attack++];
    } else if (!senders.empty()) {
      const DeviceId from = pick(senders, benign_rng);
      report = {from, pick(benign_partners[from.index()], benign_rng), positive(benign_rng) ? 1.0 : -1.0, 0};
    } else {
      ++rec.rejected;  // nobody benign can talk; the event is dropped
      continue;
    }
    report.timestamp = graph.clock();
    const bool attack = is_attack[e] != 0;
    if (attack) ++attempts[report.trustor.index()];
    if (!graph.submit_report(report)) {
      ++rec.rejected;
      if (attack && graph.is_active(report.trustor) && !topo.malicious[report.trustee.index()]) {
        ++reached[report.trustor.index()];
      }
      continue;
    }
    if (attack) ++accepted[report.trustor.index()];
    apply(defense->on_accepted(graph, report));
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (ever_blocked[i]) ++(topo.malicious[i] ? rec.true_positives : rec.false_positives);
    if (!topo.malicious[i]) continue;
    AttackerTally tally{device(i), 0, attempts[i]};
    if (!ever_blocked[i]) tally.successes = accepted[i] + reached[i];
    rec.per_device.push_back(tally);
  }
  rec.asr = attack_success_rate(rec.per_device);
  rec.accepted = graph.report_log().size();
  if (cfg.timing) {
    rec.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  }
  return rec;
}

std::vector<MetricsRecord> sweep(const ScenarioConfig& cfg, SweepAxis axis, std::span<const double> values,
                                 std::span<const TmsKind> tms, std::size_t jobs) {
  std::vector<ScenarioConfig> runs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (TmsKind kind : tms) {
      ScenarioConfig c = cfg;
      (axis == SweepAxis::MaliciousFraction ? c.malicious_fraction : c.attack_density) = values[i];
      c.seed = cfg.seed + i;
      c.tms = kind;
      c.validate();
      runs.push_back(c);
    }
  }
  std::vector<MetricsRecord> out(runs.size());
  std::vector<std::exception_ptr> failures(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        out[i] = run_scenario(runs[i]);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(runs.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

void write_results(std::ostream& out, std::span<const MetricsRecord> records, bool with_header) {
  if (with_header) {
    out << "tms,attack_kind,scale,malicious_fraction,attack_density,asr,true_positives,false_positives,"
           "runtime_ms\n";
  }
  for (const auto& r : records) {
    out << to_string(r.tms) << ',' << to_string(r.attack_kind) << ',' << to_string(r.attack_scale) << ','
        << format_double(r.malicious_fraction) << ',' << format_double(r.attack_density) << ','
        << format_double(r.asr) << ',' << r.true_positives << ',' << r.false_positives << ','
        << format_double(r.runtime_ms) << '\n';
  }
}

}  // namespace sigtrust
