#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nexus/learner.hpp"
#include "nexus/random.hpp"

namespace nexus::adjudication {

using NodeIndex = std::uint32_t;

struct BenchmarkShardSchedule {
  std::uint32_t num_shards = 8;
  std::uint64_t round = 0;
  std::uint64_t node = 0;
  std::uint32_t m = 3;
};

struct EvaluatorVote {
  NodeIndex evaluator = 0;
  std::uint32_t shard = 0;
  bool verdict = false;
  /// Simulation ground truth; never read by the protocol itself.
  bool true_quality = false;
};

struct NoiseModel {
  double eta = 0.15;
  double rho = 0.22;

  void validate() const;
};

/// Shard indices for evaluator slots 0..m-1 of node `node` in round `round`:
/// public_hash(round, node, i) mod num_shards, linear probing on collision.
/// Throws std::invalid_argument when num_shards < m.
std::vector<std::uint32_t> assign_shards(std::uint64_t round,
                                         std::uint64_t node, std::uint32_t m,
                                         std::uint32_t num_shards);
std::vector<std::uint32_t> assign_shards(const BenchmarkShardSchedule& s);

struct Candidate {
  NodeIndex node = 0;
  std::uint32_t region = 0;
  /// Stable hash of the node identity, used for deterministic shuffling.
  std::uint64_t id_hash = 0;
};

struct EvaluatorSelection {
  std::uint32_t m = 3;
  std::uint64_t round = 0;
  std::uint64_t seed = 0;
  NodeIndex target = 0;
  /// Evaluators used for the same target in its previous adjudication.
  std::vector<NodeIndex> previous;
};

class InsufficientEvaluators : public std::runtime_error {
 public:
  InsufficientEvaluators() : std::runtime_error("insufficient evaluators") {}
};

/// Region-stratified choice of m evaluators: regions are visited round-robin
/// in a hash-shuffled order; within a region candidates are taken in hashed
/// order, preferring ones not in `previous`. The target is never chosen.
std::vector<NodeIndex> select_evaluators(std::span<const Candidate> peers,
                                         const EvaluatorSelection& request);

/// Per-evaluator error bits under the common-bit equicorrelated model: with
/// probability rho every evaluator copies one shared Bernoulli(eta) bit,
/// otherwise each draws its own.
std::vector<bool> draw_errors(const NoiseModel& noise, std::size_t m, Rng& rng);

/// Verdicts for m evaluators that all observe the same true quality.
std::vector<bool> simulate_votes(bool true_quality, const NoiseModel& noise,
                                 std::uint32_t m, Rng& rng);

/// Strict majority; throws std::invalid_argument on empty or even input.
bool adjudicate(std::span<const bool> verdicts);
bool adjudicate(const std::vector<bool>& verdicts);

/// Whether adding `delta` to `global` keeps accuracy on `shard` at least as
/// high. Throws std::invalid_argument on dimension mismatch or empty shard.
bool judge_update(const learner::ModelParams& global,
                  std::span<const double> delta,
                  const learner::ToyDataset& shard);

/// One adjudication's verdicts keyed by evaluator.
struct VoteRecord {
  std::uint64_t adjudication = 0;
  NodeIndex evaluator = 0;
  bool verdict = false;
};

struct Agreement {
  double agreement = 0.0;
  double implied_rho = 0.0;
  std::size_t pairs = 0;
};

class InsufficientData : public std::runtime_error {
 public:
  explicit InsufficientData(const std::string& what)
      : std::runtime_error(what) {}
};

/// Pairwise agreement between evaluators that judged the same adjudication,
/// and the rho that reproduces it under the equicorrelated model with the
/// configured eta.
Agreement measure_agreement(std::span<const VoteRecord> log, double eta);

/// P(two evaluators agree) under the common-bit model.
double pairwise_agreement(double eta, double rho);

/// Exact majority error for m independent evaluators with error eta.
double binomial_majority_error(double eta, std::uint32_t m);

/// Exact majority error under the common-bit model.
double mixture_majority_error(double eta, double rho, std::uint32_t m);

}  // namespace nexus::adjudication
