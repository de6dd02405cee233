#include "nexus/round.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>

#include "nexus/adjudication.hpp"
#include "nexus/adversary.hpp"
#include "nexus/selection.hpp"

namespace nexus::sim {

namespace {

using adversary::AttackKind;
using consensus::EpochStatus;
using learner::ModelParams;

// Magnitude of the adversary's conflicting candidate relative to the honest
// aggregate step.
constexpr double kPoisonScale = 2.0;

std::uint64_t model_digest(const ModelParams& m) {
  std::vector<std::uint64_t> words;
  words.reserve(m.values.size());
  for (double v : m.values) words.push_back(std::bit_cast<std::uint64_t>(v));
  return public_hash(words);
}

double rtt_ms(const SimState& s, NodeIndex a, NodeIndex b, Rng& rng) {
  return network::sample_latency(s.config.network.latency, s.nodes[a].region,
                                 s.nodes[b].region, a == b, rng);
}

std::size_t sybil_count(const ScenarioConfig& c) {
  return static_cast<std::size_t>(std::llround(
      c.attack.sybil_fraction * static_cast<double>(c.nodes.gpu_pool + c.nodes.cpu_pool)));
}

void add_sybils(SimState& s, std::uint64_t round) {
  const auto& c = s.config;
  const std::size_t count = sybil_count(c);
  s.sybils_injected = true;
  if (count == 0) return;
  const auto added = adversary::inject_sybils(s.overlay, count, c.network.k_bucket,
                                              c.reputation.r0, mix64(c.seed ^ 0x53ULL));
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng admit(c.seed, "puzzle");
  admit.shuffle(order);
  const auto admitted = static_cast<std::size_t>(
      std::floor(c.consensus.puzzle_admit_fraction * static_cast<double>(count)));
  std::vector<bool> solved(count, false);
  for (std::size_t j = 0; j < admitted; ++j) solved[order[j]] = true;
  for (std::size_t j = 0; j < count; ++j) {
    SimNode n;
    n.id = s.overlay.id(added[j]);
    n.region = static_cast<std::uint32_t>(Rng(c.seed, "sybil-region", j).index(c.nodes.regions));
    n.role = Role::sybil;
    n.stake = c.consensus.sybil_stake;
    n.admitted = solved[j];
    n.joined_round = round;
    n.rep = reputation::fresh();
    s.nodes.push_back(std::move(n));
    s.members.push_back({});
  }
}

double behaviour_success(const ScenarioConfig& c, const SimNode& n) {
  const double p_h =
      1.0 - adjudication::mixture_majority_error(c.adjudication.noise.eta,
                                                 c.adjudication.noise.rho, c.adjudication.m);
  if (n.role != Role::byzantine) return p_h;
  if (c.attack.kind == AttackKind::unreliable) {
    return (1.0 - c.attack.failure_prob) * p_h + c.attack.failure_prob * (1.0 - p_h);
  }
  if (c.attack.kind == AttackKind::farming || c.attack.kind == AttackKind::none) return p_h;
  return 1.0 - p_h;
}

std::size_t steps_for(const learner::DPConfig& dp, std::size_t examples) {
  return dp.local_epochs * ((examples + dp.batch_size - 1) / dp.batch_size);
}

double train_seconds(const ScenarioConfig& c, const SimNode& n, double load) {
  const double cap = std::max(n.true_cap, 0.05);
  return static_cast<double>(steps_for(c.dp, n.data.size())) * c.timing.step_seconds *
         (1.0 + load) / cap;
}

double estimate_timeout(const SimState& s) {
  const auto& c = s.config;
  Rng rng(c.seed, "timeout");
  std::vector<NodeIndex> trainers;
  for (NodeIndex i = 0; i < s.nodes.size(); ++i) {
    if (s.nodes[i].trainer) trainers.push_back(i);
  }
  const double consensus_est =
      2.0 * c.network.latency.cross_provider_ms / 1000.0 + c.timing.eval_seconds;
  std::vector<double> times;
  for (int j = 0; j < 64; ++j) {
    const auto leader = static_cast<NodeIndex>(rng.index(s.nodes.size()));
    std::vector<NodeIndex> pick = trainers;
    rng.shuffle(pick);
    pick.resize(std::min(pick.size(), c.nodes.k_train));
    double slowest = 0.0;
    for (NodeIndex k : pick) {
      const double arrival = train_seconds(c, s.nodes[k], rng.uniform(0.0, 0.9)) +
                             c.timing.transfer_rtts * rtt_ms(s, k, leader, rng) / 1000.0;
      slowest = std::max(slowest, arrival);
    }
    times.push_back(slowest + consensus_est);
  }
  std::nth_element(times.begin(), times.begin() + 32, times.end());
  return 3.0 * times[32];
}

struct Voting {
  std::map<NodeIndex, double> weights;
  std::vector<consensus::LeaderCandidate> leaders;
};

Voting voting_weights(const SimState& s, std::uint64_t round, consensus::OpClass op) {
  const auto& c = s.config;
  Voting v;
  std::vector<consensus::Voter> voters;
  for (NodeIndex i = 0; i < s.nodes.size(); ++i) {
    const auto& n = s.nodes[i];
    if (!s.members[i].online) continue;
    switch (c.consensus.weighting) {
      case ConsensusWeighting::reputation:
        voters.push_back({i, n.rep, s.age(i, round)});
        break;
      case ConsensusWeighting::equal:
        v.weights[i] = 1.0;
        break;
      case ConsensusWeighting::stake:
        if (n.stake > 0.0) v.weights[i] = n.stake;
        break;
      case ConsensusWeighting::puzzle:
        if (n.role != Role::sybil || n.admitted) v.weights[i] = 1.0;
        break;
    }
  }
  if (c.consensus.weighting == ConsensusWeighting::reputation && !voters.empty()) {
    try {
      v.weights = consensus::snapshot_weights(voters, op, c.reputation).weights();
    } catch (const consensus::EmptyEligibleSet&) {
      v.weights.clear();
    }
  }
  for (const auto& [node, w] : v.weights) {
    v.leaders.push_back({node, w, s.nodes[node].id.short_hash()});
  }
  return v;
}

struct Decision {
  ConsensusRecord record;
  NodeIndex leader = 0;
  double latency_s = 0.0;
};

Decision decide(SimState& s, std::uint64_t round, const ModelParams& candidate,
                bool adversarial, const Voting& voting, double val_before) {
  const auto& c = s.config;
  const auto op = c.consensus.op_class;
  Decision d;
  auto& rec = d.record;
  rec.round = round;
  rec.epoch = s.next_epoch++;
  rec.op_class = op;
  rec.quorum = consensus::quorum_threshold(op);
  rec.adversarial = adversarial;
  rec.oracle_accept = learner::evaluate(candidate, s.validation) >= val_before;

  const std::uint64_t digest = model_digest(candidate);
  const std::array<std::uint64_t, 3> key{digest, round, rec.epoch};
  consensus::Proposal proposal{public_hash(key), op, digest, 0, rec.epoch, round};
  consensus::WeightSnapshot snapshot(voting.weights);
  rec.total_weight = snapshot.total();

  // Leader with view changes: an offline or withholding leader costs a
  // timeout and hands over to the next ranked node.
  double wait = 0.0;
  std::uint32_t view = 0;
  NodeIndex leader = 0;
  bool have_leader = false;
  if (adversarial) {
    for (const auto& lc : voting.leaders) {
      if (s.malicious(lc.node, round)) {
        leader = lc.node;
        have_leader = true;
        break;
      }
    }
    if (!have_leader) leader = voting.leaders.front().node;
    have_leader = true;
  } else {
    const std::size_t window =
        std::min<std::size_t>(c.consensus.k_leader, voting.leaders.size());
    while (view < window) {
      leader = consensus::elect_leader(voting.leaders, c.consensus.k_leader, round, view);
      if (s.members[leader].online && !s.malicious(leader, round)) {
        have_leader = true;
        break;
      }
      wait += consensus::view_change_timeout(view, c.consensus.view_timeout_s);
      ++view;
    }
  }
  proposal.proposer = leader;
  auto epoch = consensus::open_epoch(proposal, snapshot, leader);
  epoch.view = view;
  rec.views = view;
  d.leader = leader;

  std::map<NodeIndex, int> votes;
  double decided_at = wait;
  if (have_leader) {
    struct Ballot {
      double arrival;
      NodeIndex node;
    };
    std::vector<Ballot> ballots;
    Rng lat(c.seed, "vote-latency", rec.epoch);
    for (const auto& [node, w] : snapshot.weights()) {
      if (!s.members[node].online) continue;
      ballots.push_back(
          {wait + 2.0 * rtt_ms(s, leader, node, lat) / 1000.0 + c.timing.eval_seconds, node});
    }
    std::sort(ballots.begin(), ballots.end(), [](const Ballot& a, const Ballot& b) {
      return a.arrival < b.arrival || (a.arrival == b.arrival && a.node < b.node);
    });
    Rng noise(c.seed, "vote-noise", rec.epoch);
    const auto errors = adjudication::draw_errors(c.adjudication.noise, ballots.size(), noise);
    for (std::size_t j = 0; j < ballots.size(); ++j) {
      const NodeIndex v = ballots[j].node;
      const bool approve =
          s.malicious(v, round) ? adversarial : (rec.oracle_accept != errors[j]);
      votes[v] = approve ? 1 : 0;
      consensus::cast_vote(epoch, v, approve);
      if (consensus::tally(epoch) != EpochStatus::pending) {
        decided_at = ballots[j].arrival;
        break;
      }
      decided_at = ballots[j].arrival;
    }
  }
  if (epoch.status == EpochStatus::pending) epoch.status = EpochStatus::aborted;
  rec.status = epoch.status;
  rec.approval_weight = epoch.approval_weight();
  const double proof = c.consensus.weighting == ConsensusWeighting::reputation
                           ? 1.0 + c.consensus.reputation_proof_overhead
                           : 1.0;
  // The view-change waits are not part of the proof overhead.
  rec.latency_s = wait + (decided_at - wait) * proof;
  rec.correct = (rec.status == EpochStatus::committed) == rec.oracle_accept;
  d.latency_s = rec.latency_s;
  s.trace.push_back(std::move(epoch));
  s.vote_log.push_back(std::move(votes));
  return d;
}

void apply_churn(SimState& s, std::uint64_t round, NetworkRecord& net) {
  const auto& c = s.config;
  if (c.churn.rate_per_minute <= 0.0) return;
  network::ChurnParams params{c.churn.rate_per_minute, c.churn.return_probability,
                              c.churn.retention_rounds};
  Rng rng(c.seed, "churn", round);
  const auto events = network::churn_step(s.members, params, c.churn.round_minutes, round, rng);
  for (const auto& e : events) {
    auto& node = s.nodes[e.node];
    switch (e.kind) {
      case network::ChurnEvent::Kind::departure:
        ++net.departures;
        s.overlay.set_online(e.node, false);
        break;
      case network::ChurnEvent::Kind::return_retained:
        ++net.arrivals;
        s.overlay.set_online(e.node, true);
        break;
      case network::ChurnEvent::Kind::return_reset:
        ++net.arrivals;
        s.overlay.set_online(e.node, true);
        node.rep = reputation::fresh();
        node.joined_round = round;
        node.age_offset = 0;
        break;
      case network::ChurnEvent::Kind::fresh_identity: {
        ++net.arrivals;
        const std::uint64_t key =
            e.node + (static_cast<std::uint64_t>(s.members[e.node].generation) << 32);
        node.id = network::derive_node_id(c.seed, key);
        s.overlay.replace_id(e.node, node.id);
        s.overlay.set_online(e.node, true);
        Rng links(c.seed, "rejoin", e.node, round);
        for (std::size_t p = 0; p < c.network.k_bucket; ++p) {
          auto peer = static_cast<NodeIndex>(links.index(s.nodes.size() - 1));
          if (peer >= e.node) ++peer;
          s.overlay.table(e.node).insert({peer, s.overlay.id(peer), reputation::score(s.nodes[peer].rep)});
          s.overlay.table(peer).insert({e.node, node.id, c.reputation.r0});
        }
        node.rep = reputation::fresh();
        node.joined_round = round;
        node.age_offset = 0;
        break;
      }
    }
  }
}

void network_metrics(SimState& s, std::uint64_t round, NodeIndex origin, NetworkRecord& net) {
  const auto& c = s.config;
  std::vector<double> reps(s.nodes.size());
  std::vector<NodeIndex> online;
  for (NodeIndex i = 0; i < s.nodes.size(); ++i) {
    reps[i] = reputation::score(s.nodes[i].rep);
    if (s.members[i].online) online.push_back(i);
  }
  net.round = round;
  net.online = online.size();
  if (online.empty()) return;
  if (!s.members[origin].online) origin = online.front();
  network::GossipParams gp{c.network.fanout, c.network.ttl, c.network.queue_capacity, 10};
  Rng grng(c.seed, "gossip", round);
  const auto trace = network::gossip_broadcast(s.overlay, origin, reps, gp, grng);
  net.coverage = trace.coverage;
  net.dropped = trace.dropped;
  for (std::size_t r = 0; r < trace.coverage.size(); ++r) {
    if (trace.coverage[r] >= 0.99) {
      net.rounds_to_99 = static_cast<int>(r);
      break;
    }
  }
  Rng lrng(c.seed, "lookup", round);
  double hops = 0.0;
  for (std::size_t j = 0; j < c.network.lookups_per_round; ++j) {
    const NodeIndex from = online[lrng.index(online.size())];
    const auto target = static_cast<NodeIndex>(lrng.index(s.nodes.size()));
    hops += network::lookup(s.overlay, from, s.overlay.id(target), c.network.lookup_alpha,
                            c.network.k_bucket)
                .hops;
  }
  if (c.network.lookups_per_round > 0) {
    net.mean_lookup_hops = hops / static_cast<double>(c.network.lookups_per_round);
  }
}

void collusion_pass(SimState& s) {
  const auto& c = s.config;
  const std::size_t window = std::min<std::size_t>(s.vote_log.size(), 100);
  if (window < reputation::kMinCollusionVotes) return;
  const std::size_t start = s.vote_log.size() - window;
  std::vector<NodeIndex> rows;
  for (NodeIndex i = 0; i < s.nodes.size(); ++i) {
    bool all = true;
    for (std::size_t d = start; d < s.vote_log.size() && all; ++d) {
      all = s.vote_log[d].contains(i);
    }
    if (all) rows.push_back(i);
  }
  if (rows.size() < 2) return;
  reputation::VoteMatrix matrix;
  for (NodeIndex i : rows) {
    std::vector<int> row;
    for (std::size_t d = start; d < s.vote_log.size(); ++d) row.push_back(s.vote_log[d].at(i));
    matrix.push_back(std::move(row));
  }
  const auto findings = reputation::collusion_scan(matrix, c.reputation);
  std::vector<reputation::BetaReputation> reps;
  for (NodeIndex i : rows) reps.push_back(s.nodes[i].rep);
  reputation::apply_collusion_penalties(reps, findings, c.reputation);
  for (std::size_t j = 0; j < rows.size(); ++j) s.nodes[rows[j]].rep = reps[j];
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::honest: return "honest";
    case Role::byzantine: return "byzantine";
    case Role::sybil: return "sybil";
  }
  return "unknown";
}

std::uint64_t SimState::age(NodeIndex n, std::uint64_t round) const {
  const auto& node = nodes[n];
  return (round >= node.joined_round ? round - node.joined_round : 0) + node.age_offset;
}

bool SimState::malicious(NodeIndex n, std::uint64_t round) const {
  const auto& node = nodes[n];
  if (node.role == Role::sybil) return true;
  if (node.role == Role::byzantine) return adversary::is_malicious(config.attack, round);
  return false;
}

std::size_t byzantine_bound(const ScenarioConfig& config, std::size_t participants) {
  if (config.aggregation.byzantine_bound >= 0) {
    return static_cast<std::size_t>(config.aggregation.byzantine_bound);
  }
  return static_cast<std::size_t>(
      std::ceil(config.attack.byzantine_fraction * static_cast<double>(participants) - 1e-9));
}

SimState build_state(const ScenarioConfig& config) {
  config.validate();
  SimState s;
  s.config = config;
  const auto& c = s.config;

  const std::size_t n_train = c.nodes.gpu_pool * c.data.examples_per_node;
  const double keep = 1.0 - c.data.validation_fraction - c.data.test_fraction;
  const auto total = static_cast<std::size_t>(std::ceil(static_cast<double>(n_train) / keep));
  const auto full = learner::generate_dataset(c.data.classes, c.data.dim, total,
                                              c.data.separation, mix64(c.seed ^ label_hash("data")));
  const auto split = learner::split_dataset(total, c.data.validation_fraction,
                                            c.data.test_fraction, mix64(c.seed ^ label_hash("split")));
  s.train = full.subset(split.train);
  s.validation = full.subset(split.validation);
  s.test = full.subset(split.test);
  const std::size_t shards = c.data.benchmark_shards;
  for (std::size_t j = 0; j < shards; ++j) {
    std::vector<std::size_t> idx;
    for (std::size_t i = j; i < s.validation.size(); i += shards) idx.push_back(i);
    s.benchmark.push_back(s.validation.subset(idx));
  }

  const std::size_t n = c.nodes.gpu_pool + c.nodes.cpu_pool;
  s.nodes.resize(n);
  std::vector<NodeIndex> trainer_order;
  for (NodeIndex i = 0; i < n; ++i) {
    auto& node = s.nodes[i];
    Rng traits(c.seed, "traits", i);
    node.id = network::derive_node_id(c.seed, i);
    node.region = static_cast<std::uint32_t>(traits.index(c.nodes.regions));
    node.trainer = i < c.nodes.gpu_pool;
    node.true_cap = node.trainer ? traits.uniform(0.4, 1.0) : traits.uniform(0.05, 0.3);
    node.rep = reputation::fresh();
    if (node.trainer) trainer_order.push_back(i);
  }
  Rng roles(c.seed, "roles");
  roles.shuffle(trainer_order);
  const auto byzantine = static_cast<std::size_t>(std::llround(
      c.attack.byzantine_fraction * static_cast<double>(c.nodes.gpu_pool)));
  if (c.attack.kind != AttackKind::none && c.attack.kind != AttackKind::sybil) {
    for (std::size_t j = 0; j < byzantine; ++j) s.nodes[trainer_order[j]].role = Role::byzantine;
  }

  const auto parts = learner::partition_dirichlet(s.train.labels, c.data.classes, c.nodes.gpu_pool,
                                                  c.data.dirichlet_alpha,
                                                  mix64(c.seed ^ label_hash("partition")));
  for (NodeIndex i = 0; i < c.nodes.gpu_pool; ++i) {
    auto& node = s.nodes[i];
    node.data = s.train.subset(parts[i]);
    if (node.role == Role::byzantine && c.attack.kind == AttackKind::backdoor) {
      Rng poison(c.seed, "backdoor", i);
      node.data = adversary::backdoor_poison(node.data, c.attack.trigger,
                                             c.attack.poison_fraction, poison);
    }
  }

  for (NodeIndex i = 0; i < n; ++i) {
    auto& node = s.nodes[i];
    node.age_offset = c.bootstrap.age_cycles;
    Rng hist(c.seed, "bootstrap", i);
    const double p = behaviour_success(c, node);
    for (std::uint32_t j = 0; j < c.bootstrap.interactions; ++j) {
      node.rep = reputation::update(node.rep, hist.bernoulli(p), c.reputation);
    }
  }

  s.members.assign(n, network::Member{});
  std::vector<network::NodeId> ids;
  std::vector<double> reps;
  for (const auto& node : s.nodes) {
    ids.push_back(node.id);
    reps.push_back(reputation::score(node.rep));
  }
  s.overlay = network::Overlay(ids, c.network.k_bucket);
  s.overlay.populate_full(reps);
  if (c.attack.sybil_join_round == 0) add_sybils(s, 0);

  s.global = ModelParams::zeros(c.data.classes, c.data.dim);
  s.timeout_s = c.timing.round_timeout_s > 0.0 ? c.timing.round_timeout_s : estimate_timeout(s);
  return s;
}

RoundResult run_round(SimState& s, std::uint64_t round) {
  const auto& c = s.config;
  RoundResult r;
  r.round = round;
  r.network.round = round;
  if (!s.sybils_injected && round >= c.attack.sybil_join_round) add_sybils(s, round);

  const ModelParams global_before = s.global;
  r.val_before = learner::evaluate(s.global, s.validation);
  const std::size_t n = s.nodes.size();
  std::vector<double> score(n);
  for (NodeIndex i = 0; i < n; ++i) score[i] = reputation::score(s.nodes[i].rep);

  auto finish = [&](NodeIndex origin) {
    r.val_after = learner::evaluate(s.global, s.validation);
    r.test_accuracy = learner::evaluate(s.global, s.test);
    r.success = r.completed_in_time && r.min_updates_met && r.quorum_approved && r.no_regression;
    network_metrics(s, round, origin, r.network);
    if (c.consensus.collusion_scan_every > 0 && (round + 1) % c.consensus.collusion_scan_every == 0) {
      collusion_pass(s);
    }
    return r;
  };

  Voting voting = voting_weights(s, round, c.consensus.op_class);
  if (voting.weights.empty()) {
    r.failure = "empty eligible set";
    apply_churn(s, round, r.network);
    return finish(0);
  }
  // Coordinator for selection latency: the view-0 leader.
  const NodeIndex coordinator =
      consensus::elect_leader(voting.leaders, c.consensus.k_leader, round, 0);

  // Selection over online trainers, from round-start reputations.
  std::vector<selection::SelectionCandidate> candidates;
  std::map<NodeIndex, double> load;
  Rng probe_rng(c.seed, "probe", round);
  for (NodeIndex i = 0; i < n; ++i) {
    const auto& node = s.nodes[i];
    if (!node.trainer || !s.members[i].online) continue;
    if (c.attack.exclude_attackers && node.role == Role::byzantine) continue;
    const double l = Rng(c.seed, "load", i, round).uniform(0.0, 0.9);
    load[i] = l;
    const bool inflate = c.attack.inflate_capability && node.role == Role::byzantine;
    selection::ProbeTarget target{true, node.true_cap, inflate ? 1.0 : node.true_cap, inflate, l,
                                  rtt_ms(s, i, coordinator, probe_rng)};
    candidates.push_back({i, node.id.short_hash(),
                          selection::probe_capability(target, round), score[i]});
  }
  const std::size_t k = std::min(c.nodes.k_train, candidates.size());
  const std::size_t min_updates =
      c.nodes.min_updates > 0 ? c.nodes.min_updates : (c.nodes.k_train + 1) / 2;
  if (k > 0) {
    Rng pick(c.seed, "select", round);
    switch (c.selection.strategy) {
      case SelectionStrategy::random:
        r.selected = selection::select_random(candidates, k, pick);
        break;
      case SelectionStrategy::capability:
        r.selected = selection::select_participants(candidates, k, {1, 0, 0, 0}, round);
        break;
      case SelectionStrategy::load_balanced:
        r.selected = selection::select_participants(candidates, k, {0, 1, 0, 0}, round);
        break;
      case SelectionStrategy::reputation:
        r.selected = selection::select_participants(candidates, k, c.selection.weights, round);
        break;
    }
  }
  for (NodeIndex i : r.selected) {
    if (s.nodes[i].role == Role::byzantine) ++r.selected_byzantine;
  }

  // Nodes may leave while the round is in flight.
  apply_churn(s, round, r.network);

  struct Submission {
    NodeIndex node;
    learner::Vector delta;
    double arrival;
  };
  std::vector<Submission> subs;
  bool all_arrived = true;
  const double deadline = std::max(s.timeout_s - c.consensus.view_timeout_s, 0.5 * s.timeout_s);
  Rng upload(c.seed, "upload", round);
  for (NodeIndex i : r.selected) {
    if (!s.members[i].online) {
      all_arrived = false;
      continue;
    }
    const auto& node = s.nodes[i];
    Rng train(c.seed, "train", i, round);
    auto outcome = learner::local_train_dpsgd(s.global, node.data, c.dp, train);
    s.privacy.record(i, outcome.steps,
                     static_cast<double>(c.dp.batch_size) / static_cast<double>(node.data.size()));
    learner::Vector delta(outcome.model.values.size());
    for (std::size_t j = 0; j < delta.size(); ++j) {
      delta[j] = outcome.model.values[j] - s.global.values[j];
    }
    const double arrival = train_seconds(c, node, load[i]) +
                           c.timing.transfer_rtts * rtt_ms(s, i, coordinator, upload) / 1000.0;
    if (arrival > deadline) {
      all_arrived = false;
      continue;
    }
    subs.push_back({i, std::move(delta), arrival});
  }

  // Byzantine transformations, applied after honest training.
  std::vector<std::size_t> colluders;
  for (std::size_t j = 0; j < subs.size(); ++j) {
    const NodeIndex i = subs[j].node;
    if (s.nodes[i].role != Role::byzantine) continue;
    switch (c.attack.kind) {
      case AttackKind::gradient_flip:
        subs[j].delta = adversary::gradient_flip(subs[j].delta);
        break;
      case AttackKind::farming:
        if (round >= c.attack.farming_onset_round) {
          subs[j].delta = adversary::gradient_flip(subs[j].delta);
        }
        break;
      case AttackKind::unreliable: {
        Rng fail(c.seed, "unreliable", i, round);
        if (adversary::unreliable_fails(c.attack.failure_prob, fail)) {
          subs[j].delta =
              adversary::random_direction(subs[j].delta.size(), learner::l2_norm(subs[j].delta), fail);
        }
        break;
      }
      case AttackKind::alie:
        colluders.push_back(j);
        break;
      default:
        break;
    }
  }
  if (!colluders.empty()) {
    std::vector<learner::Vector> own;
    for (auto j : colluders) own.push_back(subs[j].delta);
    const double z = c.attack.alie_auto_z ? adversary::alie_auto_z(subs.size(), colluders.size())
                                          : c.attack.alie_z;
    const auto crafted = adversary::alie_attack(own, z);
    for (auto j : colluders) subs[j].delta = crafted;
  }

  r.collected = subs.size();
  double collection_end = 0.0;
  for (const auto& sub : subs) collection_end = std::max(collection_end, sub.arrival);
  if (!all_arrived) collection_end = deadline;
  r.min_updates_met = r.collected >= min_updates && r.collected > 0;
  if (!r.min_updates_met) {
    r.failure = "insufficient updates";
    r.round_time_s = deadline;
    return finish(coordinator);
  }

  std::vector<aggregation::UpdateDelta> updates;
  std::vector<double> reps;
  for (const auto& sub : subs) {
    updates.push_back({sub.node, sub.delta, s.nodes[sub.node].data.size()});
    reps.push_back(score[sub.node]);
  }
  ModelParams candidate;
  try {
    switch (c.aggregation.rule) {
      case AggregationRule::rep_fedavg:
        candidate = aggregation::rep_fedavg(s.global, updates,
                                            aggregation::aggregation_weights(updates, reps));
        break;
      case AggregationRule::fedavg:
        candidate = aggregation::rep_fedavg(s.global, updates, aggregation::fedavg_weights(updates));
        break;
      case AggregationRule::trimmed_mean:
        candidate = aggregation::trimmed_mean(s.global, updates, byzantine_bound(c, updates.size()));
        break;
      case AggregationRule::median:
        candidate = aggregation::coordinate_median(s.global, updates);
        break;
      case AggregationRule::krum:
        candidate = aggregation::krum(s.global, updates, byzantine_bound(c, updates.size())).model;
        break;
    }
  } catch (const aggregation::NoTrustedMass&) {
    r.failure = "no trusted mass";
    r.round_time_s = collection_end;
    return finish(coordinator);
  }

  // Validation by weighted consensus; votes are fixed to one snapshot.
  const auto honest = decide(s, round, candidate, false, voting, r.val_before);
  r.decisions.push_back(honest.record);
  double consensus_latency = honest.latency_s;
  std::optional<ModelParams> adopted;
  if (honest.record.status == EpochStatus::committed) adopted = candidate;
  if (c.consensus.proposals == ProposalMode::contested) {
    ModelParams poisoned = s.global;
    for (std::size_t j = 0; j < poisoned.values.size(); ++j) {
      poisoned.values[j] -= kPoisonScale * (candidate.values[j] - s.global.values[j]);
    }
    const auto rival = decide(s, round, poisoned, true, voting, r.val_before);
    r.decisions.push_back(rival.record);
    consensus_latency = std::max(consensus_latency, rival.latency_s);
    if (!adopted && rival.record.status == EpochStatus::committed) s.global = poisoned;
  }
  r.views = honest.record.views;
  r.consensus_latency_s = consensus_latency;
  r.round_time_s = collection_end + consensus_latency;
  r.completed_in_time = r.round_time_s <= s.timeout_s;
  r.quorum_approved = adopted.has_value();

  if (adopted) {
    s.global = *adopted;
    r.accepted_model = *adopted;
    // Adjudication of every contributor, then the Beta update.
    std::set<NodeIndex> participants;
    for (const auto& sub : subs) participants.insert(sub.node);
    std::vector<adjudication::Candidate> outside, inside;
    for (NodeIndex i = 0; i < n; ++i) {
      if (!s.members[i].online || score[i] < c.reputation.eligibility_floor) continue;
      adjudication::Candidate cand{i, s.nodes[i].region, s.nodes[i].id.short_hash()};
      (participants.contains(i) ? inside : outside).push_back(cand);
    }
    for (const auto& sub : subs) {
      const NodeIndex target = sub.node;
      std::vector<adjudication::Candidate> pool = outside;
      if (pool.size() < c.adjudication.m) {
        for (const auto& cand : inside) {
          if (cand.node != target) pool.push_back(cand);
        }
      }
      if (pool.size() < c.adjudication.m) continue;
      adjudication::EvaluatorSelection req{c.adjudication.m, round, c.seed, target,
                                           s.previous_evaluators[target]};
      const auto evaluators = adjudication::select_evaluators(pool, req);
      const auto shard_ids = adjudication::assign_shards(round, target, c.adjudication.m,
                                                         static_cast<std::uint32_t>(s.benchmark.size()));
      Rng noise(c.seed, "adjudicate", target, round);
      const auto errors = adjudication::draw_errors(c.adjudication.noise, c.adjudication.m, noise);
      const bool coalition = s.malicious(target, round);
      std::vector<bool> verdicts;
      for (std::size_t e = 0; e < evaluators.size(); ++e) {
        if (s.malicious(evaluators[e], round)) {
          verdicts.push_back(coalition);
        } else {
          const bool quality =
              adjudication::judge_update(global_before, sub.delta, s.benchmark[shard_ids[e]]);
          verdicts.push_back(quality != errors[e]);
        }
      }
      const bool o = adjudication::adjudicate(verdicts);
      s.nodes[target].rep = reputation::update(s.nodes[target].rep, o, c.reputation);
      s.previous_evaluators[target] = evaluators;
      r.outcomes[target] = o;
    }
  }
  r.val_after = learner::evaluate(s.global, s.validation);
  r.no_regression = r.quorum_approved && r.val_after >= r.val_before;
  if (!r.quorum_approved) {
    r.failure = "quorum not reached";
  } else if (!r.no_regression) {
    r.failure = "validation regression";
  } else if (!r.completed_in_time) {
    r.failure = "timeout";
  }
  return finish(honest.leader);
}

}  // namespace nexus::sim
