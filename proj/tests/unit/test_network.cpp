#include <doctest.h>

#include <algorithm>
#include <map>

#include "nexus/network.hpp"
#include "oracles.hpp"

using namespace nexus;
using namespace nexus::network;

namespace {

Overlay full_overlay(std::size_t n, std::uint64_t seed) {
  std::vector<NodeId> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(derive_node_id(seed, i));
  Overlay o(ids, 20);
  std::vector<double> reps(n, 0.5);
  o.populate_full(reps);
  return o;
}

/// Closest node other than the origin, by exhaustive scan.
NodeIndex brute_force_closest(const Overlay& o, NodeIndex origin, const NodeId& target) {
  NodeIndex best = origin == 0 ? 1 : 0;
  for (NodeIndex i = 0; i < o.size(); ++i) {
    if (i == origin) continue;
    if (xor_distance(o.id(i), target) < xor_distance(o.id(best), target)) best = i;
  }
  return best;
}

double coverage_after(const GossipTrace& t, std::size_t round) {
  return t.coverage[std::min(round, t.coverage.size() - 1)];
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("xor metric") {
  const auto a = derive_node_id(1, 0), b = derive_node_id(1, 1), c = derive_node_id(1, 2);
  CHECK(xor_distance(a, a).is_zero());
  CHECK(xor_distance(a, b) == xor_distance(b, a));
  CHECK(xor_distance(xor_distance(a, b), xor_distance(b, c)) == xor_distance(a, c));
  CHECK(bucket_index(a, a) == -1);
  CHECK(a.hex().size() == 64);
  CHECK(derive_node_id(1, 0) == a);
  CHECK(derive_node_id(2, 0) != a);
}

TEST_CASE("bucket insertion and eviction margin") {
  KBucket b;
  b.capacity = 3;
  for (NodeIndex i = 0; i < 2; ++i) CHECK(bucket_insert(b, {i, derive_node_id(9, i), 0.9}).inserted);
  // size K-1: always inserted, even with a low score
  CHECK(bucket_insert(b, {2, derive_node_id(9, 2), 0.6}).inserted);
  REQUIRE(b.full());

  auto dropped = bucket_insert(b, {3, derive_node_id(9, 3), 0.70});
  CHECK_FALSE(dropped.inserted);
  CHECK_FALSE(dropped.evicted.has_value());
  auto at_margin = bucket_insert(b, {4, derive_node_id(9, 4), 0.75});
  CHECK_FALSE(at_margin.inserted);
  auto evict = bucket_insert(b, {5, derive_node_id(9, 5), 0.76});
  CHECK(evict.inserted);
  REQUIRE(evict.evicted.has_value());
  CHECK(evict.evicted->node == 2);
  CHECK(b.contacts.size() == 3);
}

TEST_CASE("property: buckets stay bounded and evict the minimum") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    KBucket b;
    b.capacity = 1 + rng.index(20);
    for (NodeIndex i = 0; i < 200; ++i) {
      double min_before = 2.0;
      for (const auto& c : b.contacts) min_before = std::min(min_before, c.reputation);
      auto res = bucket_insert(b, {i, derive_node_id(4, i), rng.uniform()});
      REQUIRE(b.contacts.size() <= b.capacity);
      if (res.evicted) CHECK(res.evicted->reputation == min_before);
    }
  }
}

TEST_CASE("lookup") {
  auto o = full_overlay(100, 5);
  SUBCASE("own id resolves without hops") {
    CHECK(lookup(o, 3, o.id(3)).hops == 0);
  }
  SUBCASE("small network stays shallow and finds the true closest") {
    Rng rng(8);
    double hops = 0.0;
    int exact = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto origin = static_cast<NodeIndex>(rng.index(o.size()));
      const auto target = o.id(static_cast<NodeIndex>(rng.index(o.size())));
      auto res = lookup(o, origin, target);
      hops += res.hops;
      REQUIRE_FALSE(res.closest.empty());
      exact += res.closest.front().node == brute_force_closest(o, origin, target);
    }
    CHECK(hops / 1000 <= 8.0);
    CHECK(exact == 1000);
  }
}

TEST_CASE("lookup on 1024 nodes stays within log2 n hops") {
  auto o = full_overlay(1024, 6);
  Rng rng(9);
  double hops = 0.0;
  for (int i = 0; i < 300; ++i) {
    const auto origin = static_cast<NodeIndex>(rng.index(o.size()));
    const auto target = derive_node_id(77, i);
    auto res = lookup(o, origin, target);
    hops += res.hops;
    CHECK(res.closest.front().node == brute_force_closest(o, origin, target));
  }
  CHECK(hops / 300 <= 10.0);
}

TEST_CASE("gossip") {
  GossipParams gp;
  std::vector<double> reps;
  SUBCASE("large network covers in three rounds") {
    auto o = full_overlay(1000, 7);
    reps.assign(o.size(), 0.5);
    int ok = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng rng(s);
      auto trace = gossip_broadcast(o, static_cast<NodeIndex>(s * 37 % 1000), reps, gp, rng);
      for (std::size_t r = 1; r < trace.coverage.size(); ++r) {
        CHECK(trace.coverage[r] >= trace.coverage[r - 1]);
      }
      ok += coverage_after(trace, 3) > 0.99;
    }
    CHECK(ok >= 19);
  }
  SUBCASE("fanout to everyone covers in one round") {
    auto o = full_overlay(10, 8);
    reps.assign(o.size(), 0.5);
    gp.fanout = 9;
    Rng rng(1);
    CHECK(coverage_after(gossip_broadcast(o, 0, reps, gp, rng), 1) == 1.0);
  }
  SUBCASE("zero ttl stays at the origin") {
    auto o = full_overlay(50, 8);
    reps.assign(o.size(), 0.5);
    gp.ttl = 0;
    Rng rng(1);
    auto trace = gossip_broadcast(o, 0, reps, gp, rng);
    CHECK(trace.coverage.back() == doctest::Approx(1.0 / 50));
  }
  SUBCASE("overflowing queues drop low-reputation senders first") {
    auto o = full_overlay(200, 9);
    reps.assign(o.size(), 0.9);
    for (std::size_t i = 100; i < 200; ++i) reps[i] = 0.1;
    gp.queue_capacity = 1;
    std::vector<GossipMessage> msgs;
    for (NodeIndex i = 0; i < 200; i += 2) msgs.push_back({i + 1000ull, i, 7, 0, reps[i]});
    Rng rng(2);
    auto traces = gossip_broadcast(o, msgs, reps, gp, rng);
    double high = 0.0, low = 0.0;
    for (std::size_t m = 0; m < msgs.size(); ++m) {
      (msgs[m].origin < 100 ? high : low) += traces[m].coverage.back();
    }
    CHECK(high > low);
    std::size_t dropped = 0;
    for (auto& t : traces) dropped += t.dropped;
    CHECK(dropped > 0);
  }
}

TEST_CASE("latency medians") {
  LatencyModel m;
  Rng rng(10);
  auto median_of = [&](std::uint32_t a, std::uint32_t b) {
    std::vector<double> s(100000);
    for (auto& v : s) {
      v = sample_latency(m, a, b, false, rng);
      REQUIRE(v > 0.0);
    }
    std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
    return s[s.size() / 2];
  };
  CHECK(std::abs(median_of(0, 0) / 12.0 - 1.0) < 0.05);
  CHECK(std::abs(median_of(0, 1) / 40.0 - 1.0) < 0.05);
  CHECK(std::abs(median_of(0, 5) / 87.0 - 1.0) < 0.05);
  CHECK(sample_latency(m, 2, 2, true, rng) == 1.0);
  CHECK(median_latency(m, 0, 8, false) == 87.0);
}

TEST_CASE("churn") {
  Rng rng(11);
  SUBCASE("no rate, no events") {
    std::vector<Member> members(100);
    CHECK(churn_step(members, {}, 1.0, 0, rng).empty());
  }
  SUBCASE("departures follow the Poisson law") {
    std::vector<Member> members(1000);
    ChurnParams p;
    p.rate_per_minute = 0.1;
    std::vector<int> deps;
    for (std::uint64_t step = 0; step < 200; ++step) {
      auto ev = churn_step(members, p, 1.0, step, rng);
      deps.push_back(static_cast<int>(std::count_if(ev.begin(), ev.end(), [](const ChurnEvent& e) {
        return e.kind == ChurnEvent::Kind::departure;
      })));
    }
    // bins: <=90, 91..97, 98..103, 104..110, >110
    const int edges[] = {90, 97, 103, 110};
    double expected[5] = {0, 0, 0, 0, 0};
    for (int k = 0; k < 300; ++k) {
      int bin = 0;
      while (bin < 4 && k > edges[bin]) ++bin;
      expected[bin] += 200 * oracle::poisson_pmf(100.0, k);
    }
    double observed[5] = {0, 0, 0, 0, 0};
    for (int d : deps) {
      int bin = 0;
      while (bin < 4 && d > edges[bin]) ++bin;
      observed[bin] += 1;
    }
    double chi2 = 0.0;
    for (int b = 0; b < 5; ++b) chi2 += std::pow(observed[b] - expected[b], 2) / expected[b];
    CHECK(chi2 < 18.47);  // 4 dof, p = 0.001
    double mean = 0.0;
    for (int d : deps) mean += d;
    CHECK(std::abs(mean / 200 - 100.0) < 3.0);
  }
  SUBCASE("returns within the retention window keep state") {
    ChurnParams p;
    p.rate_per_minute = 20.0;
    p.return_probability = 1.0;
    std::vector<Member> members(1);
    members[0].online = false;
    members[0].departed_round = 10;
    auto ev = churn_step(members, p, 1.0, 110, rng);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].kind == ChurnEvent::Kind::return_retained);
    members[0].online = false;
    ev = churn_step(members, p, 1.0, 111, rng);
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].kind == ChurnEvent::Kind::return_reset);
    CHECK(members[0].generation == 0);
  }
}

}
