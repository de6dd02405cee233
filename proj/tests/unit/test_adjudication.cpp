#include <doctest.h>

#include <map>
#include <set>

#include "nexus/adjudication.hpp"
#include "nexus/learner.hpp"
#include "oracles.hpp"

using namespace nexus;
using namespace nexus::adjudication;

TEST_SUITE("adjudication") {

TEST_CASE("shard assignment is deterministic and distinct") {
  CHECK(assign_shards(7, 12, 3, 10) == assign_shards(7, 12, 3, 10));
  for (std::uint64_t t = 0; t < 50; ++t) {
    auto s = assign_shards(t, t * 31 + 1, 3, 3);
    CHECK(std::set<std::uint32_t>(s.begin(), s.end()) == std::set<std::uint32_t>{0, 1, 2});
  }
  CHECK_THROWS_AS(assign_shards(0, 0, 4, 3), std::invalid_argument);
  BenchmarkShardSchedule sched{10, 4, 9, 3};
  CHECK(assign_shards(sched) == assign_shards(4, 9, 3, 10));
}

TEST_CASE("shard assignment is near uniform") {
  std::map<std::uint32_t, int> freq;
  int pairs = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    for (std::uint64_t k = 0; k < 100; ++k, ++pairs) {
      for (auto s : assign_shards(t, k, 3, 10)) ++freq[s];
    }
  }
  const double expected = pairs * 3.0 / 10.0;
  for (std::uint32_t s = 0; s < 10; ++s) {
    CHECK(std::abs(freq[s] - expected) / expected < 0.10);
  }
}

TEST_CASE("evaluator selection is region stratified") {
  std::vector<Candidate> peers;
  for (NodeIndex n = 0; n < 9; ++n) peers.push_back({n, n % 3, 1000 + n});
  EvaluatorSelection req;
  req.target = 100;
  for (std::uint64_t round = 0; round < 20; ++round) {
    req.round = round;
    auto chosen = select_evaluators(peers, req);
    REQUIRE(chosen.size() == 3);
    std::set<std::uint32_t> regions;
    for (auto n : chosen) regions.insert(n % 3);
    CHECK(regions.size() == 3);
  }
}

TEST_CASE("evaluator selection edge cases") {
  std::vector<Candidate> same{{0, 2, 5}, {1, 2, 6}, {2, 2, 7}};
  EvaluatorSelection req;
  req.target = 99;
  auto chosen = select_evaluators(same, req);
  CHECK(std::set<NodeIndex>(chosen.begin(), chosen.end()) == std::set<NodeIndex>{0, 1, 2});

  std::vector<Candidate> peers;
  for (NodeIndex n = 0; n < 6; ++n) peers.push_back({n, n % 2, n * 7});
  for (NodeIndex target = 0; target < 6; ++target) {
    req.target = target;
    auto c = select_evaluators(peers, req);
    CHECK(std::find(c.begin(), c.end(), target) == c.end());
  }
  req.target = 0;
  req.m = 6;
  CHECK_THROWS_AS(select_evaluators(peers, req), InsufficientEvaluators);
}

TEST_CASE("evaluator selection rotates away from previous panel") {
  std::vector<Candidate> peers;
  for (NodeIndex n = 0; n < 12; ++n) peers.push_back({n, n % 3, 50 + n});
  EvaluatorSelection req;
  req.target = 100;
  const auto first = select_evaluators(peers, req);
  req.previous = first;
  const auto second = select_evaluators(peers, req);
  for (auto n : second) CHECK(std::find(first.begin(), first.end(), n) == first.end());
}

TEST_CASE("noiseless votes are truthful") {
  Rng rng(1);
  NoiseModel clean{0.0, 0.5};
  for (int i = 0; i < 100; ++i) {
    for (bool q : {true, false}) {
      for (bool v : simulate_votes(q, clean, 5, rng)) CHECK(v == q);
    }
  }
}

TEST_CASE("majority error matches the binomial and collapsed oracles") {
  Rng rng(2024);
  const int trials = 1'000'000;
  auto empirical = [&](NoiseModel noise) {
    int wrong = 0;
    for (int i = 0; i < trials; ++i) {
      wrong += adjudicate(simulate_votes(true, noise, 3, rng)) != true;
    }
    return static_cast<double>(wrong) / trials;
  };
  const double indep = empirical({0.15, 0.0});
  CHECK(std::abs(indep - 0.060750) < 0.002);
  CHECK(binomial_majority_error(0.15, 3) == doctest::Approx(0.06075));
  CHECK(std::abs(empirical({0.15, 1.0}) - 0.15) < 0.002);
  CHECK(mixture_majority_error(0.15, 0.22, 3) ==
        doctest::Approx(oracle::majority_error_enumerated(0.15, 0.22, 3)));
}

TEST_CASE("adjudicate is a strict majority") {
  CHECK(adjudicate(std::vector<bool>{true, true, false}));
  CHECK_FALSE(adjudicate(std::vector<bool>{false, false, true}));
  CHECK(adjudicate(std::vector<bool>{true, true, true}));
  CHECK_THROWS_AS(adjudicate(std::vector<bool>{}), std::invalid_argument);
  CHECK_THROWS_AS(adjudicate(std::vector<bool>{true, false}), std::invalid_argument);
}

TEST_CASE("agreement measurement") {
  SUBCASE("identical logs agree fully") {
    std::vector<VoteRecord> log;
    for (std::uint64_t a = 0; a < 40; ++a) {
      for (NodeIndex e = 0; e < 3; ++e) log.push_back({a, e, a % 3 == 0});
    }
    auto ag = measure_agreement(log, 0.15);
    CHECK(ag.agreement == 1.0);
    CHECK(ag.implied_rho == 1.0);
  }
  SUBCASE("correlated noise round-trips rho") {
    Rng rng(8);
    NoiseModel noise{0.15, 0.22};
    std::vector<VoteRecord> log;
    for (std::uint64_t a = 0; a < 100'000; ++a) {
      auto v = simulate_votes(a % 2 == 0, noise, 3, rng);
      for (NodeIndex e = 0; e < 3; ++e) log.push_back({a, e, v[e]});
    }
    auto ag = measure_agreement(log, 0.15);
    CHECK(std::abs(ag.agreement - pairwise_agreement(0.15, 0.22)) < 0.01);
    CHECK(std::abs(ag.implied_rho - 0.22) < 0.02);
  }
  SUBCASE("fair coins agree half the time") {
    Rng rng(9);
    std::vector<VoteRecord> log;
    for (std::uint64_t a = 0; a < 20'000; ++a) {
      for (NodeIndex e = 0; e < 2; ++e) log.push_back({a, e, rng.bernoulli(0.5)});
    }
    CHECK(std::abs(measure_agreement(log, 0.15).agreement - 0.5) < 0.01);
  }
  SUBCASE("too little data") {
    std::vector<VoteRecord> log{{0, 0, true}, {0, 1, true}};
    CHECK_THROWS_AS(measure_agreement(log, 0.15), InsufficientData);
  }
}

TEST_CASE("judge on the toy task") {
  const auto data = learner::generate_dataset(10, 32, 2000, 10.0, 3);
  std::vector<std::size_t> train_idx, shard_idx;
  for (std::size_t i = 0; i < data.size(); ++i) (i < 1500 ? train_idx : shard_idx).push_back(i);
  const auto train = data.subset(train_idx);
  const auto shard = data.subset(shard_idx);
  const auto converged = learner::train_central(train, 200, 0.5);
  REQUIRE(learner::evaluate(converged, shard) > 0.95);

  SUBCASE("zero delta counts as positive") {
    learner::Vector zero(converged.size(), 0.0);
    CHECK(judge_update(converged, zero, shard));
  }
  SUBCASE("negating the model is rejected") {
    learner::Vector neg(converged.values.size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -converged.values[i];
    CHECK_FALSE(judge_update(converged, neg, shard));
  }
  SUBCASE("a true gradient step from scratch is accepted") {
    const auto start = learner::ModelParams::zeros(10, 32);
    learner::Vector grad(start.size(), 0.0), g(start.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      learner::example_gradient(start, train.row(i), train.labels[i], g);
      for (std::size_t j = 0; j < g.size(); ++j) grad[j] += g[j];
    }
    for (auto& v : grad) v *= -0.1 / static_cast<double>(train.size());
    CHECK(judge_update(start, grad, shard));
  }
  SUBCASE("bad inputs") {
    learner::Vector wrong(3, 0.0);
    CHECK_THROWS_AS(judge_update(converged, wrong, shard), std::invalid_argument);
    learner::Vector zero(converged.size(), 0.0);
    CHECK_THROWS_AS(judge_update(converged, zero, learner::ToyDataset{}), std::invalid_argument);
  }
}

}
