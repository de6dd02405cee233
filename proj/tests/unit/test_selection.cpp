#include <doctest.h>

#include <algorithm>
#include <set>

#include "nexus/selection.hpp"

using namespace nexus;
using namespace nexus::selection;

TEST_SUITE("selection") {

TEST_CASE("score examples") {
  SelectionWeights w;
  CHECK(score_candidate({1.0, 0.0, 0.0}, 1.0, w) == doctest::Approx(1.0));
  CHECK(score_candidate({1.0, 0.0, 0.0}, 0.5, w) == doctest::Approx(0.85));
  CHECK(score_candidate({0.5, 0.5, 0.2}, 0.9, w) == doctest::Approx(0.65));
}

TEST_CASE("weights must form a convex combination") {
  CHECK_NOTHROW(SelectionWeights{}.validate());
  CHECK_THROWS_AS((SelectionWeights{0.5, 0.5, 0.5, 0.5}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((SelectionWeights{-0.1, 0.5, 0.3, 0.3}.validate()), std::invalid_argument);
}

TEST_CASE("latency normalization saturates") {
  CHECK(normalize_latency(0.0) == 0.0);
  CHECK(normalize_latency(100.0) == doctest::Approx(0.5));
  CHECK(normalize_latency(1e6) == 1.0);
}

std::vector<SelectionCandidate> uniform_pool(std::size_t n) {
  std::vector<SelectionCandidate> pool;
  for (std::size_t i = 0; i < n; ++i) {
    SelectionCandidate c;
    c.node = static_cast<NodeIndex>(i);
    c.id_hash = 0x9e3779b97f4a7c15ull * (i + 1);
    c.profile = {0.6, 0.3, 0.2};
    pool.push_back(c);
  }
  return pool;
}

TEST_CASE("reputation decides among identical profiles") {
  auto pool = uniform_pool(30);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i].reputation = (i * 7 % 30) / 30.0;
  auto chosen = select_participants(pool, 10, {}, 3);
  std::vector<double> reps;
  for (auto n : chosen) reps.push_back(pool[n].reputation);
  const double lowest_chosen = *std::min_element(reps.begin(), reps.end());
  int better_left_out = 0;
  for (const auto& c : pool) {
    if (std::find(chosen.begin(), chosen.end(), c.node) == chosen.end() &&
        c.reputation > lowest_chosen) {
      ++better_left_out;
    }
  }
  CHECK(better_left_out == 0);
}

TEST_CASE("selecting everyone ignores scores") {
  auto pool = uniform_pool(12);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i].reputation = i / 12.0;
  auto chosen = select_participants(pool, 12, {}, 0);
  CHECK(std::set<NodeIndex>(chosen.begin(), chosen.end()).size() == 12);
  CHECK_THROWS_AS(select_participants(pool, 13, {}, 0), InsufficientCandidates);
}

TEST_CASE("low-reputation minority never selected") {
  auto pool = uniform_pool(200);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i].reputation = i % 5 == 0 ? 0.2 : 0.8;
  auto chosen = select_participants(pool, 100, {}, 17);
  for (auto n : chosen) CHECK(pool[n].reputation == 0.8);
}

TEST_CASE("property: order depends only on relative scores") {
  auto pool = uniform_pool(40);
  Rng rng(4);
  for (auto& c : pool) {
    c.profile = {rng.uniform(), rng.uniform(), rng.uniform()};
    c.reputation = rng.uniform();
  }
  SelectionWeights w;
  for (double f : {0.1, 2.0, 17.0}) {
    CHECK(select_participants(pool, 15, w.scaled(f), 9) == select_participants(pool, 15, w, 9));
  }
}

TEST_CASE("random selection is a uniform subset") {
  auto pool = uniform_pool(20);
  Rng rng(12);
  std::vector<int> hits(20, 0);
  for (int t = 0; t < 5000; ++t) {
    auto c = select_random(pool, 5, rng);
    REQUIRE(std::set<NodeIndex>(c.begin(), c.end()).size() == 5);
    for (auto n : c) ++hits[n];
  }
  for (int h : hits) CHECK(std::abs(h - 1250) < 150);
}

TEST_CASE("probe clamps inflated capability") {
  ProbeTarget honest{true, 0.9, 0.9, false, 0.2, 40.0};
  CHECK(probe_capability(honest, 5).cap == doctest::Approx(0.9));
  ProbeTarget liar{true, 0.3, 1.0, true, 0.2, 40.0};
  CHECK(probe_capability(liar, 5).cap == doctest::Approx(0.3));
  ProbeTarget offline{false, 0.9, 0.9, false, 0.2, 40.0};
  const auto p = probe_capability(offline, 5);
  CHECK(p.stale);
  CHECK(p.cap == 0.0);
  SelectionWeights w;
  CHECK(score_candidate(p, 0.5, w) ==
        doctest::Approx(w.w2 * (1 - p.load) + w.w3 * (1 - p.lat) + w.w4 * 0.5));
}

}
