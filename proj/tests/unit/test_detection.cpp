#include <catch_amalgamated.hpp>

#include <random>
#include <set>
#include <sstream>

#include "sigtrust/communities.hpp"
#include "sigtrust/detection.hpp"
#include "support/planted.hpp"

using namespace sigtrust;
using namespace sigtrust::testing;

namespace {

bool contains(const std::vector<DeviceId>& v, DeviceId d) {
  return std::find(v.begin(), v.end(), d) != v.end();
}

TrainConfig fast_train(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("mutually inflating pair is flagged with beta = 0", "[detection]") {
  SignedTrustGraph g;
  g.add_devices(52);
  std::mt19937_64 rng(7);
  er_background(g, 0, 50, 0.05, rng);
  const auto a = device(50), b = device(51);
  for (int i = 0; i < 10; ++i) {
    g.submit_report(a, b, 1.0);
    g.submit_report(b, a, 1.0);
  }
  const auto emb = train_embeddings(g, fast_train(3));
  const auto verdict = detect(g, emb, last_report(g, b), DetectionThresholds{.alpha = 0.95, .beta = 0, .gamma = 0.95});
  CHECK(contains(verdict.self_promoting, a));
  CHECK(contains(verdict.self_promoting, b));
  CHECK(verdict.bad_mouthing.empty());
}

TEST_CASE("ten-device clique is flagged whole and background stays clean", "[detection]") {
  SignedTrustGraph g;
  g.add_devices(210);
  std::mt19937_64 rng(11);
  er_background(g, 0, 200, 0.015, rng);
  const auto clique = ids(200, 10);
  promote_clique(g, clique);
  const auto emb = train_embeddings(g, fast_train(5));
  const auto verdict = detect(g, emb, g.report_log().back(), DetectionThresholds{});
  CHECK(std::set<DeviceId>(verdict.self_promoting.begin(), verdict.self_promoting.end()) ==
        std::set<DeviceId>(clique.begin(), clique.end()));

  const auto rates = score_all(g, emb, clique, DetectionThresholds{});
  CHECK(rates.true_positives == 10);
  CHECK(rates.false_positives == 0);
}

TEST_CASE("a single negative rater is never bad-mouthing", "[detection]") {
  SignedTrustGraph g;
  g.add_devices(4);
  g.submit_report(device(1), device(2), 1.0);
  for (int i = 0; i < 5; ++i) g.submit_report(device(0), device(3), -1.0);
  EmbeddingMatrix<double> ones(4, 2);
  ones.node_vectors().setOnes();  // every cosine is 1
  CHECK(detect(g, ones, g.report_log().back(), DetectionThresholds{}).empty());
}

TEST_CASE("co-targeting group is flagged, benign co-raters need high cosine", "[detection]") {
  SignedTrustGraph g;
  g.add_devices(4);
  for (std::size_t i = 0; i < 3; ++i) g.submit_report(device(i), device(3), -1.0);
  EmbeddingMatrix<double> emb(4, 2);
  emb.node(device(0)) << 1.0, 0.0;
  emb.node(device(1)) << 1.0, 0.01;
  emb.node(device(2)) << 0.0, 1.0;
  emb.node(device(3)) << 1.0, 1.0;
  const auto verdict = detect(g, emb, g.report_log().back(), DetectionThresholds{});
  CHECK(verdict.bad_mouthing == std::vector<DeviceId>{device(0), device(1)});
  CHECK(verdict.self_promoting.empty());
}

TEST_CASE("positive report below alpha yields nothing", "[detection]") {
  SignedTrustGraph g;
  g.add_devices(3);
  for (int i = 0; i < 5; ++i) {
    g.submit_report(device(0), device(1), 1.0);
    g.submit_report(device(1), device(0), 1.0);
  }
  EmbeddingMatrix<double> emb(3, 2);
  emb.node(device(0)) << 1.0, 0.0;
  emb.node(device(1)) << 0.0, 1.0;
  CHECK(detect(g, emb, g.report_log().back(), DetectionThresholds{.beta = 0}).empty());
  emb.node(device(1)) << 1.0, 0.0;
  CHECK(detect(g, emb, g.report_log().back(), DetectionThresholds{.beta = 0}).self_promoting.size() == 2);
}

TEST_CASE("detection rejects a snapshot older than the graph", "[detection]") {
  SignedTrustGraph g;
  g.add_devices(4);
  g.submit_report(device(0), device(3), 1.0);
  EmbeddingMatrix<double> emb(3, 2);
  try {
    (void)detect(g, emb, g.report_log().back(), DetectionThresholds{});
    FAIL("expected StaleEmbeddings");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::StaleEmbeddings);
  }
}

TEST_CASE("thresholds outside (-1, 1) are rejected", "[detection]") {
  CHECK_THROWS_AS((DetectionThresholds{.alpha = 1.0}.validate()), Error);
  CHECK_THROWS_AS((DetectionThresholds{.gamma = -1.0}.validate()), Error);
  CHECK_NOTHROW(DetectionThresholds{}.validate());
}

TEST_CASE("mitigation of an empty verdict changes nothing", "[detection]") {
  SignedTrustGraph g;
  g.add_devices(10);
  std::mt19937_64 rng(1);
  er_background(g, 0, 10, 0.3, rng, 0.7);
  const auto log = g.report_log();
  const auto scores = g.replay_scores();
  CHECK(mitigate(g, DetectionVerdict{}) == 0);
  CHECK(g.report_log() == log);
  CHECK(g.replay_scores() == scores);
  CHECK(g.active_count() == 10);
}

TEST_CASE("mitigation blocks an inflating pair and freezes their scores", "[detection]") {
  SignedTrustGraph g;
  g.add_devices(4);
  g.submit_report(device(2), device(3), 1.0);
  for (int i = 0; i < 16; ++i) {
    g.submit_report(device(0), device(1), 1.0);
    g.submit_report(device(1), device(0), 1.0);
  }
  REQUIRE(g.trust_score(device(0)) >= 0.8);
  REQUIRE(g.trust_score(device(1)) >= 0.8);
  const double frozen0 = g.trust_score(device(0));
  const double frozen1 = g.trust_score(device(1));

  DetectionVerdict verdict;
  verdict.self_promoting = {device(0), device(1)};
  CHECK(mitigate(g, verdict) == 2);
  CHECK_FALSE(g.is_active(device(0)));
  CHECK_FALSE(g.is_active(device(1)));
  CHECK(g.trust_score(device(0)) == frozen0);
  CHECK(g.trust_score(device(1)) == frozen1);
  CHECK(g.positive_edge_count() == 1);
  CHECK(g.report_log().size() == 1);
  CHECK_FALSE(g.submit_report(device(0), device(1), 1.0));
}

TEST_CASE("bad-mouthed victim recovers its exact pre-attack score", "[detection]") {
  SignedTrustGraph g;
  g.add_devices(10);
  const auto victim = device(9);
  for (std::size_t i = 0; i < 4; ++i) g.submit_report(device(i), victim, i % 2 ? 1.0 : 0.5);
  const double before = g.trust_score(victim);
  const auto attackers = ids(4, 5);
  bad_mouth(g, attackers, victim, 2);
  REQUIRE(g.trust_score(victim) < before);

  DetectionVerdict verdict;
  verdict.bad_mouthing = attackers;
  CHECK(mitigate(g, verdict) == 5);
  CHECK(g.trust_score(victim) == before);
}

TEST_CASE("detection properties on random planted graphs", "[detection][property]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CAPTURE(seed);
    SignedTrustGraph g;
    g.add_devices(120);
    std::mt19937_64 rng(seed);
    er_background(g, 0, 100, 0.03, rng, 0.8);
    promote_clique(g, ids(100, 8));
    bad_mouth(g, ids(108, 12), device(0), 2);
    const auto emb = train_embeddings(g, fast_train(seed));

    // Pick a blocked device and make sure detection never names it again.
    const auto gone = device(rng() % 100);
    g.block_devices(std::span(&gone, 1));

    for (const auto& r : g.report_log()) {
      const auto verdict = detect(g, emb, r, DetectionThresholds{});
      const auto again = detect(g, emb, r, DetectionThresholds{});
      CHECK(verdict.self_promoting == again.self_promoting);
      CHECK(verdict.bad_mouthing == again.bad_mouthing);
      for (auto d : verdict.all()) CHECK(g.is_active(d));
      if (r.positive()) CHECK(verdict.bad_mouthing.empty());
      if (!r.positive()) CHECK(verdict.self_promoting.empty());
    }

    // Idempotent mitigation and replay consistency.
    DetectionVerdict verdict;
    verdict.self_promoting = ids(100, 8);
    verdict.bad_mouthing = ids(108, 12);
    CHECK(mitigate(g, verdict) == 20);
    const auto log = g.report_log();
    const auto scores = g.replay_scores();
    CHECK(mitigate(g, verdict) == 0);
    CHECK(g.report_log() == log);
    CHECK(g.replay_scores() == scores);
    for (const auto& d : g.devices()) {
      if (d.active()) CHECK(d.trust_score == scores[d.id.index()]);
    }
  }
}

TEST_CASE("clean random graphs stay below one percent false positives", "[detection][property]") {
  std::size_t flagged = 0, benign = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SignedTrustGraph g;
    g.add_devices(200);
    std::mt19937_64 rng(1000 + seed);
    er_background(g, 0, 200, 0.015, rng);
    const auto emb = train_embeddings(g, fast_train(seed));
    flagged += score_all(g, emb, {}, DetectionThresholds{}).false_positives;
    benign += 200;
  }
  CHECK(static_cast<double>(flagged) / static_cast<double>(benign) <= 0.01);
}

TEST_CASE("planted cliques and co-targeting groups are recovered", "[detection][property]") {
  std::size_t found = 0, planted = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SignedTrustGraph g;
    g.add_devices(200);
    std::mt19937_64 rng(2000 + seed);
    er_background(g, 0, 180, 0.015, rng);
    const auto sp = ids(180, 10);
    const auto bm = ids(190, 10);
    promote_clique(g, sp);
    bad_mouth(g, bm, device(rng() % 180), 3);
    auto all = sp;
    all.insert(all.end(), bm.begin(), bm.end());
    const auto emb = train_embeddings(g, fast_train(seed));
    found += score_all(g, emb, all, DetectionThresholds{}).true_positives;
    planted += all.size();
  }
  CHECK(static_cast<double>(found) / static_cast<double>(planted) >= 0.9);
}

TEST_CASE("community-grouped detection matches one-by-one detection", "[detection]") {
  SignedTrustGraph g;
  g.add_devices(150);
  std::mt19937_64 rng(4);
  er_background(g, 0, 140, 0.03, rng, 0.85);
  promote_clique(g, ids(140, 10));
  const auto emb = train_embeddings(g, fast_train(9));
  const auto partition = detect_communities(g);
  const auto& log = g.report_log();
  for (std::size_t workers : {1u, 3u}) {
    const auto batch = detect_by_community(g, emb, std::span(log), DetectionThresholds{}, partition, workers);
    REQUIRE(batch.size() == log.size());
    for (std::size_t i = 0; i < log.size(); ++i) {
      const auto one = detect(g, emb, log[i], DetectionThresholds{});
      CHECK(batch[i].self_promoting == one.self_promoting);
      CHECK(batch[i].bad_mouthing == one.bad_mouthing);
      CHECK(batch[i].triggering_report == log[i]);
    }
  }
}

TEST_CASE("verdict lines", "[detection]") {
  DetectionVerdict verdict;
  verdict.triggering_report = TrustReport{device(1), device(2), 1.0, 42};
  std::ostringstream empty;
  write_verdict(empty, verdict);
  CHECK(empty.str().empty());

  verdict.self_promoting = {device(3), device(5)};
  verdict.bad_mouthing = {device(7)};
  std::ostringstream out;
  write_verdict(out, verdict);
  CHECK(out.str() == "42,SP,3,5\n42,BM,7\n");
  CHECK(verdict.all() == std::vector<DeviceId>{device(3), device(5), device(7)});
}
