#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "sigtrust/communities.hpp"
#include "sigtrust/graph.hpp"

using namespace sigtrust;
using Catch::Matchers::WithinAbs;

namespace {

SignedTrustGraph with_devices(std::size_t n) {
  SignedTrustGraph g;
  g.add_devices(n);
  return g;
}

void clique(SignedTrustGraph& g, std::size_t first, std::size_t size) {
  for (std::size_t i = first; i < first + size; ++i) {
    for (std::size_t j = first; j < first + size; ++j) {
      if (i != j) g.submit_report(device(i), device(j), 1.0);
    }
  }
}

}  // namespace

TEST_CASE("add_device hands out dense ids starting at zero", "[graph]") {
  SignedTrustGraph g;
  CHECK(g.add_device() == device(0));
  CHECK(g.trust_score(device(0)) == 0.0);
  CHECK(g.add_device() == device(1));
  CHECK(g.add_device() == device(2));
  CHECK(g.device_count() == 3);
  CHECK(g.is_active(device(2)));
}

TEST_CASE("single report moves the trustee score by eta", "[graph]") {
  auto g = with_devices(2);
  REQUIRE(g.submit_report(device(0), device(1), 1.0));
  CHECK_THAT(g.trust_score(device(1)), WithinAbs(0.1, 1e-15));
  CHECK(g.trust_score(device(0)) == 0.0);
}

TEST_CASE("ten positive reports follow the closed-form EMA", "[graph]") {
  auto g = with_devices(2);
  for (int i = 0; i < 10; ++i) g.submit_report(device(0), device(1), 1.0);
  // s_k = 1 - 0.9^k for a constant +1 stream starting at 0.
  CHECK_THAT(g.trust_score(device(1)), WithinAbs(1.0 - std::pow(0.9, 10), 1e-12));
  CHECK_THAT(g.trust_score(device(1)), WithinAbs(0.6513, 1e-4));
}

TEST_CASE("reports touching a blocked device are rejected", "[graph]") {
  auto g = with_devices(3);
  g.submit_report(device(2), device(1), 1.0);
  const DeviceId blocked[] = {device(0)};
  g.block_devices(blocked);
  const auto before = g.trust_score(device(1));
  CHECK_FALSE(g.submit_report(device(0), device(1), 1.0));
  CHECK_FALSE(g.submit_report(device(1), device(0), 1.0));
  CHECK(g.trust_score(device(1)) == before);
  CHECK(g.report_log().size() == 1);
}

TEST_CASE("report validation", "[graph]") {
  auto g = with_devices(2);
  auto code_of = [&](TrustReport r) {
    try {
      g.submit_report(r);
    } catch (const Error& e) {
      return e.code();
    }
    FAIL("expected an error");
    return Errc::IoError;
  };
  CHECK(code_of({device(0), device(5), 1.0, 0}) == Errc::UnknownDevice);
  CHECK(code_of({device(1), device(1), 1.0, 0}) == Errc::SelfRating);
  CHECK(code_of({device(0), device(1), 0.0, 0}) == Errc::InvalidValue);
  CHECK(code_of({device(0), device(1), 1.5, 0}) == Errc::InvalidValue);
  CHECK(code_of({device(0), device(1), std::nan(""), 0}) == Errc::InvalidValue);
  g.submit_report({device(0), device(1), 1.0, 7});
  CHECK(code_of({device(0), device(1), 1.0, 6}) == Errc::NonMonotoneTimestamp);
  CHECK_THROWS_AS(g.positive_in(device(9)), Error);
}

TEST_CASE("neighbour queries", "[graph]") {
  auto g = with_devices(3);
  const auto a = device(0), b = device(1);
  g.submit_report(a, b, 1.0);
  CHECK(g.positive_in(b) == std::vector{a});
  CHECK(g.positive_out(a) == std::vector{b});
  CHECK(g.negative_in(b).empty());

  auto h = with_devices(2);
  h.submit_report(a, b, -1.0);
  h.submit_report(a, b, -0.5);
  CHECK(h.negative_out_to(a, b) == 2);
  CHECK(h.negative_in(b) == std::vector{a});
  CHECK(h.negative_edge_count() == 2);
}

TEST_CASE("k attackers bad-mouthing one victim give |N_in| = k", "[graph]") {
  const std::size_t k = 7;
  auto g = with_devices(k + 1);
  for (std::size_t i = 1; i <= k; ++i) g.submit_report(device(i), device(0), -1.0);
  CHECK(g.negative_in(device(0)).size() == k);
}

TEST_CASE("positive_out_within and its complement", "[graph]") {
  auto g = with_devices(5);
  const auto d = device(0), a = device(1), b = device(2), c = device(3);
  g.submit_report(d, a, 1.0);
  g.submit_report(d, b, 1.0);
  g.submit_report(d, c, 0.5);
  g.submit_report(d, device(4), -1.0);
  const DeviceSet s({a, b});
  CHECK(g.positive_out_within(d, s) == 2);
  CHECK(g.positive_out_outside(d, s) == 1);
  CHECK(g.positive_out_within(d, DeviceSet{}) == 0);

  auto h = with_devices(5);
  clique(h, 0, 5);
  const DeviceSet members({device(0), device(1), device(2), device(3), device(4)});
  for (std::size_t i = 0; i < 5; ++i) CHECK(h.positive_out_within(device(i), members) == 4);
}

TEST_CASE("random report streams keep graph invariants", "[graph][property]") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = with_devices(30);
    std::uniform_int_distribution<std::size_t> pick(0, 29);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (int i = 0; i < 400; ++i) {
      auto s = pick(rng), t = pick(rng);
      if (s == t) continue;
      double v = val(rng);
      if (v == 0.0) v = 0.5;
      g.submit_report(device(s), device(t), v);
    }
    std::vector<DeviceId> blocked{device(trial % 30), device((trial * 7 + 3) % 30)};
    g.block_devices(blocked);

    CHECK(g.positive_edge_count() + g.negative_edge_count() == g.report_log().size());
    const auto replayed = g.replay_scores();
    for (std::size_t i = 0; i < g.device_count(); ++i) {
      const auto d = device(i);
      CHECK(g.trust_score(d) >= -1.0);
      CHECK(g.trust_score(d) <= 1.0);
      CHECK(g.trust_score(d) == replayed[i]);
      // in/out consistency
      for (const auto& [t, tally] : g.out_edges(d)) {
        const auto& back = g.in_edges(DeviceId{t}).at(d.value);
        CHECK(back.positive == tally.positive);
        CHECK(back.negative == tally.negative);
      }
      // partition identity
      std::mt19937_64 srng(i);
      std::vector<DeviceId> members;
      for (std::size_t j = 0; j < 30; ++j) {
        if (srng() % 2) members.push_back(device(j));
      }
      const DeviceSet s(members);
      CHECK(g.positive_out_within(d, s) + g.positive_out_outside(d, s) == g.positive_out(d).size());
    }
    for (const auto& r : g.report_log()) {
      if (!g.is_active(r.trustee)) continue;  // blocked trustees are hidden from queries
      const auto& out = r.positive() ? g.positive_out(r.trustor) : g.negative_out(r.trustor);
      const auto& in = r.positive() ? g.positive_in(r.trustee) : g.negative_in(r.trustee);
      CHECK(std::find(out.begin(), out.end(), r.trustee) != out.end());
      CHECK(std::find(in.begin(), in.end(), r.trustor) != in.end());
    }
  }
}

TEST_CASE("blocking reverts reports and replays victim scores", "[graph]") {
  auto g = with_devices(8);
  const auto victim = device(0);
  for (int i = 0; i < 4; ++i) g.submit_report(device(6), victim, 1.0);
  const auto clean = g.trust_score(victim);
  std::vector<DeviceId> attackers;
  for (std::size_t i = 1; i <= 5; ++i) {
    attackers.push_back(device(i));
    g.submit_report(device(i), victim, -1.0);
  }
  CHECK(g.trust_score(victim) < clean);
  const auto result = g.block_devices(attackers);
  CHECK(result.newly_blocked == 5);
  CHECK(result.reverted_reports == 5);
  CHECK(g.trust_score(victim) == clean);
  CHECK(g.negative_in(victim).empty());

  const auto again = g.block_devices(attackers);
  CHECK(again.newly_blocked == 0);
}

TEST_CASE("edge list round trip", "[graph][io]") {
  auto g = with_devices(4);
  g.submit_report(device(0), device(1), 1.0);
  g.submit_report(device(2), device(3), -0.3);
  g.submit_report(device(3), device(1), 0.1);
  std::stringstream buf;
  write_edge_list(buf, g);
  const auto back = read_edge_list(buf);
  CHECK(back.report_log() == g.report_log());
  for (std::size_t i = 0; i < 4; ++i) CHECK(back.trust_score(device(i)) == g.trust_score(device(i)));
}

TEST_CASE("edge list parsing accepts BOM and missing header", "[graph][io]") {
  std::stringstream with_bom("\xEF\xBB\xBFtrustor,trustee,value,timestamp\r\n0,1,1,0\r\n");
  CHECK(read_edge_list(with_bom).report_log().size() == 1);
  std::stringstream bare("0,2,-1,3\n2,1,0.5,4\n");
  const auto g = read_edge_list(bare);
  CHECK(g.device_count() == 3);
  CHECK(g.negative_out_to(device(0), device(2)) == 1);

  std::stringstream bad("0,1,1,0\n0,1,x,1\n");
  try {
    read_edge_list(bad);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("communities of disjoint cliques", "[communities]") {
  auto g = with_devices(10);
  clique(g, 0, 5);
  clique(g, 5, 5);
  const auto p = detect_communities(g);
  REQUIRE(p.community_count == 2);
  for (std::size_t i = 1; i < 5; ++i) CHECK(p.of(device(i)) == p.of(device(0)));
  for (std::size_t i = 6; i < 10; ++i) CHECK(p.of(device(i)) == p.of(device(5)));
  CHECK(p.of(device(0)) != p.of(device(5)));
}

TEST_CASE("single isolated device forms one community", "[communities]") {
  auto g = with_devices(1);
  const auto p = detect_communities(g);
  CHECK(p.community_count == 1);
  CHECK(p.of(device(0)) == 0u);
  CHECK_THROWS_AS(detect_communities(SignedTrustGraph{}), Error);
}

TEST_CASE("two bridged dense clusters are recovered", "[communities]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto g = with_devices(40);
    std::mt19937_64 rng(seed + 100);
    std::bernoulli_distribution edge(0.5);
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t j = i + 1; j < 20; ++j) {
          if (edge(rng)) g.submit_report(device(c * 20 + i), device(c * 20 + j), 1.0);
        }
      }
    }
    g.submit_report(device(0), device(20), 1.0);
    const auto p = detect_communities(g, {seed});
    REQUIRE(p.community_count == 2);
    for (std::size_t i = 0; i < 40; ++i) CHECK(p.of(device(i)) == p.of(device(i < 20 ? 0 : 20)));
  }
}

TEST_CASE("community detection is deterministic and total", "[communities][property]") {
  std::mt19937_64 rng(7);
  auto g = with_devices(60);
  for (int i = 0; i < 200; ++i) {
    auto s = rng() % 60, t = rng() % 60;
    if (s != t) g.submit_report(device(s), device(t), (rng() % 4) ? 1.0 : -1.0);
  }
  const DeviceId blocked[] = {device(3)};
  g.block_devices(blocked);
  const auto a = detect_communities(g, {11});
  const auto b = detect_communities(g, {11});
  CHECK(a == b);
  for (std::size_t i = 0; i < 60; ++i) {
    const auto c = a.of(device(i));
    CHECK(c.has_value() == g.is_active(device(i)));
    if (c) CHECK(*c < a.community_count);
  }
  // No community may span two positive components.
  std::vector<std::size_t> root(60);
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](std::size_t x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (std::size_t i = 0; i < 60; ++i) {
    for (auto j : g.positive_out(device(i))) root[find(i)] = find(j.index());
  }
  std::map<std::uint32_t, std::size_t> component_of;
  for (std::size_t i = 0; i < 60; ++i) {
    if (const auto c = a.of(device(i))) {
      auto [it, fresh] = component_of.emplace(*c, find(i));
      CHECK(it->second == find(i));
    }
  }
  apply_partition(g, a);
  CHECK(g.device(device(0)).community == a.of(device(0)));
}
