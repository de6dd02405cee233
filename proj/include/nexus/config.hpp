#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "nexus/adjudication.hpp"
#include "nexus/adversary.hpp"
#include "nexus/consensus.hpp"
#include "nexus/learner.hpp"
#include "nexus/network.hpp"
#include "nexus/reputation.hpp"
#include "nexus/selection.hpp"

namespace nexus::sim {

enum class SelectionStrategy { random, capability, load_balanced, reputation };
enum class AggregationRule { rep_fedavg, fedavg, trimmed_mean, median, krum };
enum class ConsensusWeighting { reputation, equal, stake, puzzle };
/// single: the leader's aggregate is the only proposal. contested: the
/// adversary also submits a conflicting poisoned candidate each round.
enum class ProposalMode { single, contested };

std::string_view to_string(SelectionStrategy s);
std::string_view to_string(AggregationRule r);
std::string_view to_string(ConsensusWeighting w);
std::string_view to_string(ProposalMode m);

struct NodesConfig {
  /// Trainer-capable nodes.
  std::size_t gpu_pool = 20;
  /// Nodes that only vote, evaluate and relay.
  std::size_t cpu_pool = 80;
  std::uint32_t regions = network::kRegions;
  std::size_t k_train = 10;
  /// 0 means ceil(k_train / 2).
  std::size_t min_updates = 0;
};

struct DataConfig {
  std::size_t classes = 10;
  std::size_t dim = 32;
  std::size_t examples_per_node = 225;
  double separation = 5.0;
  double dirichlet_alpha = 0.5;
  double validation_fraction = 0.1;
  double test_fraction = 0.2;
  std::uint32_t benchmark_shards = 10;
};

struct SelectionConfig {
  SelectionStrategy strategy = SelectionStrategy::reputation;
  selection::SelectionWeights weights;
};

struct AggregationConfig {
  AggregationRule rule = AggregationRule::rep_fedavg;
  /// Byzantine bound handed to trimmed mean and Krum; negative means
  /// ceil(byzantine_fraction * updates received).
  int byzantine_bound = -1;
};

struct AdjudicationConfig {
  adjudication::NoiseModel noise;
  std::uint32_t m = 3;
};

struct ConsensusConfig {
  ConsensusWeighting weighting = ConsensusWeighting::reputation;
  consensus::OpClass op_class = consensus::OpClass::fl_round_result;
  ProposalMode proposals = ProposalMode::single;
  std::uint32_t k_leader = 10;
  double view_timeout_s = 5.0;
  /// Share of Sybil identities that solve the admission puzzle in time.
  double puzzle_admit_fraction = 0.75;
  /// Stake per honest identity is 1; each Sybil carries this much.
  double sybil_stake = 0.5;
  double reputation_proof_overhead = 0.12;
  /// Scan consensus votes for correlated pairs every this many rounds
  /// (0 disables).
  std::uint32_t collusion_scan_every = 0;
};

struct NetworkConfig {
  std::size_t k_bucket = 20;
  std::size_t fanout = 6;
  std::uint32_t ttl = 7;
  std::size_t queue_capacity = 64;
  std::size_t lookup_alpha = 3;
  std::size_t lookups_per_round = 4;
  network::LatencyModel latency;
};

struct ChurnConfig {
  double rate_per_minute = 0.0;
  /// Simulated minutes per FL round.
  double round_minutes = 0.5;
  double return_probability = 0.5;
  std::uint32_t retention_rounds = 100;
};

struct TimingConfig {
  /// 0 means 3x the median benign round time.
  double round_timeout_s = 0.0;
  double step_seconds = 0.04;
  /// Model transfer cost in round trips to the leader.
  double transfer_rtts = 20.0;
  double eval_seconds = 0.5;
};

/// History carried by nodes that exist when the run starts.
struct BootstrapConfig {
  std::uint64_t age_cycles = 0;
  std::uint32_t interactions = 0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  std::size_t rounds = 20;
  NodesConfig nodes;
  DataConfig data;
  reputation::ReputationParams reputation;
  SelectionConfig selection;
  /// DP-SGD with a smaller step than the learner default: at 0.05 a single
  /// client's delta on the toy task mostly lowers benchmark accuracy.
  learner::DPConfig dp{.learning_rate = 0.003};
  AggregationConfig aggregation;
  AdjudicationConfig adjudication;
  ConsensusConfig consensus;
  adversary::AttackSpec attack;
  ChurnConfig churn;
  NetworkConfig network;
  TimingConfig timing;
  BootstrapConfig bootstrap;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// JSON text <-> config. Unknown keys and wrong types are ConfigErrors with
/// the field path; missing keys keep their defaults.
ScenarioConfig parse_config(const std::string& text);
std::string dump_config(const ScenarioConfig& config);
ScenarioConfig load_config(const std::filesystem::path& file);

}  // namespace nexus::sim
