#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nexus/config.hpp"
#include "nexus/round.hpp"

namespace nexus::sim {

/// One reputation.csv row.
struct ReputationRecord {
  std::uint64_t round = 0;
  NodeIndex node = 0;
  Role role = Role::honest;
  double score = 0.0;
  double uncertainty = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  bool online = true;
  bool selected = false;
};

/// Reputation distribution of one role at one point in time.
struct RoleQuartiles {
  std::size_t count = 0;
  double mean = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

struct RoundMetrics {
  RoundResult result;
  double epsilon = 0.0;
  RoleQuartiles honest;
  RoleQuartiles byzantine;
  RoleQuartiles sybil;
};

struct RunMetrics {
  ScenarioConfig config;
  double timeout_s = 0.0;
  std::vector<RoundMetrics> rounds;
  std::vector<ReputationRecord> reputation;
  std::vector<ConsensusRecord> consensus;
  std::vector<NetworkRecord> network;
  bool safety_violation = false;

  double success_rate() const;
  double final_test_accuracy() const;
  double final_validation_accuracy() const;
  double worst_epsilon() const;
  /// Nearest-rank P95 of the round times of rounds that reached consensus.
  double p95_round_time() const;
  double mean_consensus_latency() const;
};

RoleQuartiles quartiles(std::vector<double> values);

/// Builds the network, partitions data and runs `rounds` rounds. Bitwise
/// reproducible given the config (including its seed).
RunMetrics run_scenario(const ScenarioConfig& config);

/// Fraction of consensus decisions whose verdict matched the benchmark
/// oracle; absent when the run made no decisions.
std::optional<double> validation_correctness(const RunMetrics& run);

/// Seed from the NEXUS_SEED environment variable, if set and valid.
std::optional<std::uint64_t> seed_from_env();

}  // namespace nexus::sim
