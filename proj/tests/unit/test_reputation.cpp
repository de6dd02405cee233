#include <doctest.h>

#include <cmath>
#include <random>

#include "nexus/reputation.hpp"
#include "oracles.hpp"

using namespace nexus::reputation;

TEST_SUITE("reputation") {

TEST_CASE("fresh peer sits at the prior") {
  const auto r = fresh();
  CHECK(r.alpha == 1.0);
  CHECK(r.beta == 1.0);
  CHECK(score(r) == 0.5);
  CHECK(uncertainty(r) == 0.5);
}

TEST_CASE("discounted update") {
  ReputationParams p;
  const auto up = update(fresh(), true, p);
  CHECK(up.alpha == doctest::Approx(1.95).epsilon(1e-12));
  CHECK(up.beta == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(score(up) == doctest::Approx(0.6724137931).epsilon(1e-9));

  ReputationParams counting;
  counting.lambda = 1.0;
  const auto down = update(fresh(), false, counting);
  CHECK(down.alpha == 1.0);
  CHECK(down.beta == 2.0);
}

TEST_CASE("long positive streak saturates") {
  ReputationParams p;
  auto r = fresh();
  for (int i = 0; i < 100; ++i) r = update(r, true, p);
  CHECK(score(r) > 0.95);
  CHECK(r.alpha < 1.0 / (1.0 - p.lambda) + 1e-9);
}

TEST_CASE("score and uncertainty values") {
  BetaReputation r;
  r.alpha = r.beta = 6.0;
  CHECK(uncertainty(r) == doctest::Approx(1.0 / 12.0));
  for (double k : {0.01, 0.7, 3.0, 250.0}) {
    r.alpha = r.beta = k;
    CHECK(score(r) == doctest::Approx(0.5));
  }
}

TEST_CASE("uncertainty shrinks under counting updates") {
  ReputationParams p;
  p.lambda = 1.0;
  std::mt19937_64 gen(3);
  auto r = fresh();
  for (int i = 0; i < 50; ++i) {
    const double before = uncertainty(r);
    r = update(r, gen() & 1, p);
    CHECK(uncertainty(r) < before);
  }
}

TEST_CASE("property: parameters stay positive and bounded") {
  ReputationParams p;
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    p.lambda = 0.5 + 0.5 * (gen() % 1000) / 1000.0;
    auto r = fresh();
    for (int i = 0; i < 300; ++i) {
      r = update(r, gen() & 1, p);
      REQUIRE(r.alpha > 0.0);
      REQUIRE(r.beta > 0.0);
      REQUIRE(score(r) >= 0.0);
      REQUIRE(score(r) <= 1.0);
      REQUIRE(uncertainty(r) > 0.0);
      REQUIRE(uncertainty(r) <= 0.5);
    }
  }
}

TEST_CASE("expected gap closed form") {
  SeparationParams sp{0.9, 0.2, 0.95, 0};
  CHECK(expected_gap(sp) == 0.0);
  sp.rounds = 1;
  CHECK(expected_gap(sp) == doctest::Approx(0.7 / 2.9).epsilon(1e-12));
  CHECK(expected_gap(sp) == doctest::Approx(0.2414).epsilon(1e-4));
  sp.rounds = 5000;
  CHECK(expected_gap(sp) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("expected gap tracks simulation") {
  for (int T : {1, 10, 50}) {
    SeparationParams sp{0.9, 0.2, 0.95, static_cast<std::uint32_t>(T)};
    const double mc = nexus::oracle::monte_carlo_gap(0.9, 0.2, 0.95, T, 1000, 77 + T);
    CHECK(std::abs(expected_gap(sp) - mc) < 0.02);
  }
}

TEST_CASE("effective error") {
  CHECK(effective_error(0.15, 0.3, 3) == doctest::Approx(0.1755).epsilon(5e-5));
  CHECK(effective_error(0.15, 0.22, 3) == doctest::Approx(0.1687).epsilon(5e-5));
  for (std::uint32_t m : {1u, 3u, 5u, 9u}) {
    CHECK(effective_error(0.15, 0.0, m) == doctest::Approx(0.15));
  }
  // The bound never undercuts the exact mixture majority error.
  for (double rho : {0.0, 0.1, 0.22, 0.5, 1.0}) {
    CHECK(effective_error(0.15, rho, 3) + 1e-12 >=
          nexus::oracle::majority_error_enumerated(0.15, rho, 3));
  }
}

TEST_CASE("anti-whitewashing gate") {
  ReputationParams p;
  CHECK(is_gated(fresh(), 0, p, Sensitivity::high));
  CHECK_FALSE(is_gated(fresh(), 0, p, Sensitivity::low));

  ReputationParams counting = p;
  counting.lambda = 1.0;
  auto r = fresh();
  for (int i = 0; i < 15; ++i) r = update(r, true, counting);
  CHECK(uncertainty(r) == doctest::Approx(1.0 / 17.0));
  CHECK_FALSE(is_gated(r, 150, p, Sensitivity::high));
  // Old but uncertain, or certain but young, stays gated.
  CHECK(is_gated(fresh(), 150, p, Sensitivity::high));
  CHECK(is_gated(r, 99, p, Sensitivity::high));
}

TEST_CASE("parameter validation") {
  ReputationParams p;
  CHECK_NOTHROW(p.validate());
  p.lambda = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.eligibility_floor = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("domain table falls back sensibly") {
  DomainReputation d;
  CHECK(d.score_for("vision") == 0.5);
  d.at("vision").alpha = 3.0;
  CHECK(d.score_for("vision") == doctest::Approx(0.75));
  CHECK(d.score_for("text") == doctest::Approx(0.75));
}

TEST_CASE("collusion scan") {
  ReputationParams p;
  std::mt19937_64 gen(5);
  SUBCASE("identical histories are flagged") {
    std::vector<int> h(100);
    for (auto& v : h) v = gen() & 1;
    VoteMatrix votes{h, h};
    const auto found = collusion_scan(votes, p);
    REQUIRE(found.size() == 1);
    CHECK(found[0].p_value < 0.01);
  }
  SUBCASE("independent coins rarely flagged") {
    int flagged = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      VoteMatrix votes(2, std::vector<int>(100));
      for (auto& row : votes)
        for (auto& v : row) v = gen() & 1;
      flagged += !collusion_scan(votes, p).empty();
    }
    CHECK(flagged <= 20);
  }
  SUBCASE("short histories are skipped") {
    std::vector<int> h(19, 1);
    h[0] = 0;
    CHECK(collusion_scan(VoteMatrix{h, h}, p).empty());
  }
  SUBCASE("non-binary entries rejected") {
    std::vector<int> h(30, 1);
    h[3] = 2;
    CHECK_THROWS_AS(collusion_scan(VoteMatrix{h, h}, p), std::invalid_argument);
  }
  SUBCASE("penalties apply once per node") {
    std::vector<BetaReputation> reps(3);
    std::vector<CollusionFinding> findings{{0, 1, 9.0, 0.001}, {0, 2, 9.0, 0.001}};
    apply_collusion_penalties(reps, findings, p);
    CHECK(reps[0].beta == doctest::Approx(1.95));
    CHECK(reps[1].beta == doctest::Approx(1.95));
    CHECK(reps[2].beta == doctest::Approx(1.95));
  }
}

TEST_CASE("chi-square tail") {
  CHECK(chi2_sf_1dof(0.0) == doctest::Approx(1.0));
  CHECK(chi2_sf_1dof(3.841458820694124) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(chi2_sf_1dof(6.634896601021214) == doctest::Approx(0.01).epsilon(1e-6));
}

}
