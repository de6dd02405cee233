#include <doctest.h>

#include <map>
#include <set>

#include "nexus/consensus.hpp"
#include "safety_fuzz.hpp"

using namespace nexus;
using namespace nexus::consensus;

namespace {

EpochState epoch_with(std::map<NodeIndex, double> w, OpClass op = OpClass::fl_round_result) {
  Proposal p;
  p.id = 1;
  p.op_class = op;
  return open_epoch(p, WeightSnapshot(std::move(w)), 0);
}

std::vector<LeaderCandidate> candidates(std::size_t n) {
  std::vector<LeaderCandidate> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({static_cast<NodeIndex>(i), 1.0 - 0.01 * static_cast<double>(i), 1000 + i});
  }
  return out;
}

}  // namespace

TEST_SUITE("consensus") {

TEST_CASE("quorum ladder") {
  CHECK(quorum_threshold(OpClass::fl_round_result) == 0.67);
  CHECK(quorum_threshold(OpClass::model_checkpoint) == 0.75);
  CHECK(quorum_threshold(OpClass::architecture_change) == 0.80);
  CHECK(quorum_threshold(OpClass::protocol_update) == 0.90);
  CHECK(sensitivity_of(OpClass::fl_round_result) == reputation::Sensitivity::low);
  CHECK(sensitivity_of(OpClass::model_checkpoint) == reputation::Sensitivity::high);
  CHECK(parse_op_class("protocol_update") == OpClass::protocol_update);
  CHECK_THROWS_AS(parse_op_class("bogus"), std::invalid_argument);
}

TEST_CASE("snapshot eligibility") {
  reputation::ReputationParams params;
  auto with_score = [](double r) {
    reputation::BetaReputation b;
    b.alpha = 100 * r;
    b.beta = 100 * (1 - r);
    return b;
  };
  std::vector<Voter> voters{{0, with_score(0.9), 500}, {1, with_score(0.5), 500}, {2, with_score(0.2), 500}};
  auto snap = snapshot_weights(voters, OpClass::fl_round_result, params);
  CHECK(snap.size() == 2);
  CHECK(snap.total() == doctest::Approx(1.4));
  CHECK_FALSE(snap.contains(2));

  std::vector<Voter> low{{0, with_score(0.1), 500}, {1, with_score(0.2), 500}};
  CHECK_THROWS_AS(snapshot_weights(low, OpClass::fl_round_result, params), EmptyEligibleSet);

  std::vector<Voter> with_sybil{{0, with_score(0.9), 500}, {7, reputation::fresh(), 0}};
  CHECK_FALSE(snapshot_weights(with_sybil, OpClass::model_checkpoint, params).contains(7));
  CHECK(snapshot_weights(with_sybil, OpClass::fl_round_result, params).contains(7));
}

TEST_CASE("tally examples") {
  const std::map<NodeIndex, double> w{{0, 0.9}, {1, 0.8}, {2, 0.7}, {3, 0.6}};
  auto e = epoch_with(w);
  cast_vote(e, 0, true);
  cast_vote(e, 1, true);
  CHECK(tally(e) == EpochStatus::pending);
  cast_vote(e, 2, true);
  CHECK(tally(e) == EpochStatus::committed);
  CHECK(e.approval_weight() / e.snapshot.total() == doctest::Approx(0.8));

  auto r = epoch_with({{0, 1.1}, {1, 0.95}, {2, 0.95}});
  cast_vote(r, 0, false);
  CHECK(tally(r) == EpochStatus::aborted);
}

TEST_CASE("vote bookkeeping") {
  auto e = epoch_with({{0, 0.5}, {1, 0.5}, {2, 0.2}});
  CHECK(cast_vote(e, 9, true) == VoteResult::outside_snapshot);
  CHECK(e.rejected_voters == std::vector<NodeIndex>{9});
  CHECK(cast_vote(e, 0, true) == VoteResult::accepted);
  CHECK(cast_vote(e, 0, false) == VoteResult::duplicate);
  CHECK(tally(e) == EpochStatus::pending);
  cast_vote(e, 1, true);
  CHECK(tally(e) == EpochStatus::committed);
  CHECK(cast_vote(e, 2, true) == VoteResult::epoch_closed);
}

TEST_CASE("snapshot is frozen against later reputation changes") {
  std::map<NodeIndex, double> w{{0, 0.9}, {1, 0.8}, {2, 0.7}};
  auto e = epoch_with(w);
  w[0] = 0.01;  // the caller's map changing does not reach the epoch
  cast_vote(e, 0, true);
  CHECK(e.approval_weight() == doctest::Approx(0.9));
}

TEST_CASE("leader rotation") {
  auto one = candidates(1);
  for (std::uint64_t r = 0; r < 5; ++r) CHECK(elect_leader(one, 10, r) == 0);

  auto ten = candidates(10);
  std::set<NodeIndex> leaders;
  for (std::uint64_t r = 0; r < 10; ++r) leaders.insert(elect_leader(ten, 10, r));
  CHECK(leaders.size() == 10);

  auto many = candidates(25);
  for (std::uint64_t r = 0; r < 40; ++r) CHECK(elect_leader(many, 10, r) < 10);
  CHECK(elect_leader(many, 10, 3, 1) == elect_leader(many, 10, 4, 0));
  CHECK_THROWS(elect_leader(std::vector<LeaderCandidate>{}, 10, 0));
}

TEST_CASE("ties rank by id hash deterministically") {
  std::vector<LeaderCandidate> tied{{0, 0.7, 11}, {1, 0.7, 22}, {2, 0.7, 33}};
  auto a = rank_leaders(tied);
  std::reverse(tied.begin(), tied.end());
  CHECK(rank_leaders(tied) == a);
}

TEST_CASE("view change") {
  auto nodes = candidates(12);
  const auto ranked = rank_leaders(nodes);
  auto e = epoch_with({{0, 1.0}, {1, 1.0}});
  e.leader = elect_leader(nodes, 10, 0);
  CHECK(e.leader == ranked[0]);
  auto same = view_change(e, false, nodes, 10);
  CHECK(same.view == 0);
  CHECK(same.leader == e.leader);
  cast_vote(e, 0, true);
  auto next = view_change(e, true, nodes, 10);
  CHECK(next.view == 1);
  CHECK(next.leader == ranked[1]);
  CHECK(next.approvals == e.approvals);
  std::vector<NodeIndex> seen;
  for (int i = 0; i < 10; ++i) {
    seen.push_back(next.leader);
    next = view_change(next, true, nodes, 10);
  }
  CHECK(next.leader == ranked[1]);
  CHECK(std::set<NodeIndex>(seen.begin(), seen.end()).size() == 10);

  cast_vote(next, 1, true);
  tally(next);
  REQUIRE(next.status == EpochStatus::committed);
  CHECK_THROWS_AS(view_change(next, true, nodes, 10), std::logic_error);
  CHECK(view_change_timeout(0) == 5.0);
  CHECK(view_change_timeout(3) == 40.0);
}

TEST_CASE("safety oracle") {
  auto a = epoch_with({{0, 1.0}, {1, 1.0}});
  auto b = a;
  b.proposal.id = 2;
  b.proposal.content_digest = 99;
  std::vector<EpochState> trace{a, b};
  CHECK_FALSE(check_safety(trace).violation);
  trace[0].status = trace[1].status = EpochStatus::committed;
  CHECK(check_safety(trace).violation);
  trace[1].proposal.round = 5;
  CHECK_FALSE(check_safety(trace).violation);
}

TEST_CASE("property: no double commit below the Byzantine bound") {
  for (auto op : {OpClass::fl_round_result, OpClass::model_checkpoint,
                  OpClass::architecture_change, OpClass::protocol_update}) {
    fuzz::FuzzParams fp;
    fp.op = op;
    fp.byzantine_share = 1.0 - quorum_threshold(op);
    fp.trials = 1000;
    fp.seed = 31;
    const auto r = fuzz::fuzz_double_commit(fp);
    CHECK(r.double_commits == 0);
    CHECK(r.max_byzantine_share < fp.byzantine_share);
  }
}

TEST_CASE("double commit is reachable at the tight bound") {
  fuzz::FuzzParams fp;
  fp.byzantine_share = 2 * 0.67 - 1;
  fp.boundary = true;
  fp.trials = 200;
  CHECK(fuzz::fuzz_double_commit(fp).double_commits > 0);
}

}
