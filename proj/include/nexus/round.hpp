#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nexus/aggregation.hpp"
#include "nexus/config.hpp"
#include "nexus/consensus.hpp"
#include "nexus/learner.hpp"
#include "nexus/network.hpp"
#include "nexus/privacy.hpp"
#include "nexus/reputation.hpp"

namespace nexus::sim {

using NodeIndex = network::NodeIndex;

enum class Role { honest, byzantine, sybil };
std::string_view to_string(Role role);

struct SimNode {
  network::NodeId id;
  std::uint32_t region = 0;
  Role role = Role::honest;
  bool trainer = false;
  double true_cap = 0.0;
  double stake = 1.0;
  /// Solved the admission puzzle (only meaningful for Sybils).
  bool admitted = true;
  std::uint64_t joined_round = 0;
  std::uint64_t age_offset = 0;
  reputation::BetaReputation rep;
  learner::ToyDataset data;
};

/// One consensus decision as logged to consensus.csv.
struct ConsensusRecord {
  std::uint64_t round = 0;
  std::uint64_t epoch = 0;
  consensus::OpClass op_class = consensus::OpClass::fl_round_result;
  double quorum = 0.0;
  double total_weight = 0.0;
  double approval_weight = 0.0;
  consensus::EpochStatus status = consensus::EpochStatus::pending;
  std::uint32_t views = 0;
  double latency_s = 0.0;
  bool adversarial = false;
  bool oracle_accept = false;
  /// Epoch committed iff the oracle accepts.
  bool correct = false;
};

struct NetworkRecord {
  std::uint64_t round = 0;
  std::size_t online = 0;
  std::vector<double> coverage;
  int rounds_to_99 = -1;
  double mean_lookup_hops = 0.0;
  std::size_t departures = 0;
  std::size_t arrivals = 0;
  std::size_t dropped = 0;
};

struct RoundResult {
  std::uint64_t round = 0;
  bool success = false;
  bool completed_in_time = false;
  bool min_updates_met = false;
  bool quorum_approved = false;
  bool no_regression = false;
  std::string failure;
  std::optional<learner::ModelParams> accepted_model;
  /// Adjudicated o_t per participant (only when the round was approved).
  std::map<NodeIndex, bool> outcomes;
  std::vector<NodeIndex> selected;
  std::size_t selected_byzantine = 0;
  std::size_t collected = 0;
  double val_before = 0.0;
  double val_after = 0.0;
  double test_accuracy = 0.0;
  double round_time_s = 0.0;
  double consensus_latency_s = 0.0;
  std::uint32_t views = 0;
  std::vector<ConsensusRecord> decisions;
  NetworkRecord network;
};

/// Everything a run mutates, owned by one scheduler.
struct SimState {
  ScenarioConfig config;
  learner::ToyDataset train;
  learner::ToyDataset validation;
  learner::ToyDataset test;
  std::vector<learner::ToyDataset> benchmark;
  std::vector<SimNode> nodes;
  std::vector<network::Member> members;
  network::Overlay overlay{{}, 20};
  learner::ModelParams global;
  learner::PrivacyLedger privacy;
  double timeout_s = 0.0;
  std::uint64_t next_epoch = 0;
  bool sybils_injected = false;
  std::map<NodeIndex, std::vector<NodeIndex>> previous_evaluators;
  /// All epochs of the run, for the safety oracle.
  std::vector<consensus::EpochState> trace;
  /// Consensus votes per decision: voter -> approve.
  std::vector<std::map<NodeIndex, int>> vote_log;

  std::uint64_t age(NodeIndex n, std::uint64_t round) const;
  bool malicious(NodeIndex n, std::uint64_t round) const;
};

/// Builds data, nodes, overlay and the initial model for a validated config.
SimState build_state(const ScenarioConfig& config);

/// One Rep-FedAvg round: select, train, collect, aggregate, validate by
/// consensus and, only after approval, adjudicate and update reputations.
RoundResult run_round(SimState& state, std::uint64_t round);

/// Byzantine bound used by trimmed mean and Krum for `participants` updates.
std::size_t byzantine_bound(const ScenarioConfig& config, std::size_t participants);

}  // namespace nexus::sim
