#include <doctest.h>

#include <cmath>

#include "nexus/adversary.hpp"
#include "nexus/consensus.hpp"

using namespace nexus;
using namespace nexus::adversary;

TEST_SUITE("adversary") {

TEST_CASE("gradient flip") {
  Vector d{1.0, -2.5, 0.0, 3.25};
  CHECK(gradient_flip(gradient_flip(d)) == d);
  CHECK(gradient_flip(Vector(4, 0.0)) == Vector(4, 0.0));
  const auto f = gradient_flip(d);
  double dot = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) dot += f[i] * d[i];
  CHECK(dot < 0.0);
}

TEST_CASE("ALIE crafting") {
  std::vector<Vector> deltas{{0.0, 1.0, 5.0}, {2.0, 1.0, 5.0}};
  const auto stats = alie_stats(deltas);
  CHECK(stats.contributors == 2);
  CHECK(stats.mean == Vector{1.0, 1.0, 5.0});
  CHECK(stats.stddev[0] == doctest::Approx(1.0));
  CHECK(stats.stddev[1] == 0.0);
  CHECK(alie_craft(stats, 0.0) == stats.mean);
  const auto z1 = alie_craft(stats, 1.0);
  CHECK(z1[0] - stats.mean[0] == doctest::Approx(1.0));
  CHECK(z1[1] == stats.mean[1]);
  CHECK(alie_craft(stats, 7.0)[2] == 5.0);
  AlieStats lone;
  lone.contributors = 1;
  CHECK_THROWS_AS(alie_craft(lone, 1.0), std::invalid_argument);
  CHECK(alie_attack(std::vector<Vector>{{1.0, -1.0}}, 1.0) == Vector{-1.0, 1.0});
}

TEST_CASE("ALIE default z") {
  // n = 50, m = 12: s = 26 - 12 = 14, z = Phi^-1(36/50)
  CHECK(alie_auto_z(50, 12) == doctest::Approx(normal_quantile(36.0 / 50.0)));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
}

TEST_CASE("backdoor poisoning") {
  const auto shard = learner::generate_dataset(10, 8, 100, 3.0, 2);
  Trigger t;
  Rng rng(3);
  const auto none = backdoor_poison(shard, t, 0.0, rng);
  CHECK(none.features == shard.features);
  CHECK(none.labels == shard.labels);
  const auto all = backdoor_poison(shard, t, 1.0, rng);
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(all.labels[i] == t.target_label);
    for (auto f : t.indices) CHECK(all.row(i)[f] == t.value);
  }
  const auto half = backdoor_poison(shard, t, 0.5, rng);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < half.size(); ++i) changed += half.row(i)[0] == t.value;
  CHECK(changed == 50);
  Trigger bad;
  bad.indices = {8};
  CHECK_THROWS_AS(backdoor_poison(shard, bad, 0.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(backdoor_poison(shard, t, 1.5, rng), std::invalid_argument);
}

TEST_CASE("unreliable behaviour frequency") {
  Rng rng(4);
  int fails = 0;
  for (int i = 0; i < 1000; ++i) fails += unreliable_fails(0.4, rng);
  CHECK(std::abs(fails / 1000.0 - 0.4) < 0.03);
  for (int i = 0; i < 100; ++i) {
    CHECK_FALSE(unreliable_fails(0.0, rng));
    CHECK(unreliable_fails(1.0, rng));
  }
}

TEST_CASE("random direction has the requested norm") {
  Rng rng(5);
  const auto v = random_direction(330, 2.5, rng);
  CHECK(learner::l2_norm(v) == doctest::Approx(2.5));
}

TEST_CASE("sybil injection") {
  std::vector<network::NodeId> ids;
  for (std::size_t i = 0; i < 1000; ++i) ids.push_back(network::derive_node_id(1, i));
  network::Overlay o(ids, 20);
  std::vector<double> reps(1000, 0.8);
  Rng rng(6);
  o.populate_random(reps, 40, rng);
  CHECK(inject_sybils(o, 0, 8, 0.5, 9).empty());
  CHECK(o.size() == 1000);
  const auto added = inject_sybils(o, 300, 8, 0.5, 9);
  CHECK(added.size() == 300);
  CHECK(static_cast<double>(added.size()) / o.size() == doctest::Approx(300.0 / 1300));
  for (auto s : added) CHECK(o.table(s).size() > 0);

  // Fresh Sybils carry no voting weight on a gated class.
  std::vector<consensus::Voter> voters;
  for (std::uint32_t i = 0; i < 1000; ++i) {
    reputation::BetaReputation r;
    r.alpha = 16;
    r.beta = 4;
    voters.push_back({i, r, 200});
  }
  for (auto s : added) voters.push_back({s, reputation::fresh(), 0});
  const auto snap = consensus::snapshot_weights(voters, consensus::OpClass::model_checkpoint, {});
  for (auto s : added) CHECK_FALSE(snap.contains(s));
}

TEST_CASE("spec validation") {
  AttackSpec s;
  CHECK_NOTHROW(s.validate());
  s.byzantine_fraction = 1.2;
  CHECK_THROWS(s.validate());
  CHECK(parse_attack_kind("alie") == AttackKind::alie);
  CHECK_THROWS_AS(parse_attack_kind("nope"), std::invalid_argument);
}

}
