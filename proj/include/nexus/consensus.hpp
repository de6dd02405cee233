#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nexus/reputation.hpp"

namespace nexus::consensus {

using NodeIndex = std::uint32_t;

enum class OpClass {
  fl_round_result,
  model_checkpoint,
  architecture_change,
  protocol_update,
};

std::string_view to_string(OpClass op);
/// Throws std::invalid_argument for unknown names.
OpClass parse_op_class(std::string_view name);

/// Approval-weight fraction required to finalize each operation class.
double quorum_threshold(OpClass op);

/// Classes at or above the 0.75 quorum are gated for newcomers.
reputation::Sensitivity sensitivity_of(OpClass op);

struct Proposal {
  std::uint64_t id = 0;
  OpClass op_class = OpClass::fl_round_result;
  std::uint64_t content_digest = 0;
  NodeIndex proposer = 0;
  std::uint64_t epoch = 0;
  /// FL round the proposal belongs to; with op_class it defines conflicts.
  std::uint64_t round = 0;
};

/// Frozen voter weights for one decision epoch.
class WeightSnapshot {
 public:
  WeightSnapshot() = default;
  /// Throws std::invalid_argument when empty or when total weight is not
  /// positive.
  explicit WeightSnapshot(std::map<NodeIndex, double> weights);

  double weight_of(NodeIndex node) const;
  bool contains(NodeIndex node) const { return weights_.contains(node); }
  double total() const { return total_; }
  std::size_t size() const { return weights_.size(); }
  const std::map<NodeIndex, double>& weights() const { return weights_; }

 private:
  std::map<NodeIndex, double> weights_;
  double total_ = 0.0;
};

struct Voter {
  NodeIndex node = 0;
  reputation::BetaReputation reputation;
  std::uint64_t age_cycles = 0;
};

class EmptyEligibleSet : public std::runtime_error {
 public:
  EmptyEligibleSet() : std::runtime_error("empty eligible set") {}
};

/// Eligible voters (score >= floor and not gated for the class), weighted by
/// their current score.
WeightSnapshot snapshot_weights(std::span<const Voter> voters, OpClass op,
                                const reputation::ReputationParams& params);

enum class EpochStatus { pending, committed, aborted };
std::string_view to_string(EpochStatus s);

enum class VoteResult { accepted, outside_snapshot, duplicate, epoch_closed };

struct EpochState {
  Proposal proposal;
  WeightSnapshot snapshot;
  std::map<NodeIndex, double> approvals;
  std::map<NodeIndex, double> rejections;
  EpochStatus status = EpochStatus::pending;
  std::uint32_t view = 0;
  NodeIndex leader = 0;
  /// Votes from outside the snapshot, kept for the log.
  std::vector<NodeIndex> rejected_voters;

  double approval_weight() const;
  double rejection_weight() const;
};

EpochState open_epoch(const Proposal& proposal, WeightSnapshot snapshot,
                      NodeIndex leader);

/// Records a vote. Votes from nodes outside the snapshot are logged and
/// otherwise ignored.
VoteResult cast_vote(EpochState& epoch, NodeIndex node, bool approve);

/// Commit when approvals reach q_T of W; abort once the quorum is out of
/// reach; otherwise pending. Updates and returns epoch.status.
EpochStatus tally(EpochState& epoch);

/// Comparison slack for the quorum test, relative to W.
inline constexpr double kQuorumSlack = 1e-12;

struct LeaderCandidate {
  NodeIndex node = 0;
  double reputation = 0.0;
  std::uint64_t id_hash = 0;
};

/// Descending reputation, ties by id hash.
std::vector<NodeIndex> rank_leaders(std::span<const LeaderCandidate> nodes);

/// ranked[(round + view) mod min(K_L, count)].
NodeIndex elect_leader(std::span<const LeaderCandidate> nodes,
                       std::uint32_t k_l, std::uint64_t round,
                       std::uint32_t view = 0);

/// On timeout, bumps the view and re-elects; votes are kept since they are
/// bound to the proposal, not to the leader. Throws std::logic_error on a
/// terminal epoch.
EpochState view_change(const EpochState& epoch, bool timeout_elapsed,
                       std::span<const LeaderCandidate> nodes,
                       std::uint32_t k_l);

/// Simulated seconds to wait before the n-th consecutive view change.
double view_change_timeout(std::uint32_t consecutive, double base_seconds = 5.0);

struct SafetyVerdict {
  bool violation = false;
  std::uint64_t first = 0;
  std::uint64_t second = 0;
};

/// Test oracle: a violation is two committed proposals with the same
/// (round, op_class), different content, and the same snapshot.
SafetyVerdict check_safety(std::span<const EpochState> trace);

}  // namespace nexus::consensus
