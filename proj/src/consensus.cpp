#include "nexus/consensus.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "nexus/random.hpp"

namespace nexus::consensus {

std::string_view to_string(OpClass op) {
  switch (op) {
    case OpClass::fl_round_result: return "fl_round_result";
    case OpClass::model_checkpoint: return "model_checkpoint";
    case OpClass::architecture_change: return "architecture_change";
    case OpClass::protocol_update: return "protocol_update";
  }
  return "unknown";
}

OpClass parse_op_class(std::string_view name) {
  for (OpClass op : {OpClass::fl_round_result, OpClass::model_checkpoint,
                     OpClass::architecture_change, OpClass::protocol_update}) {
    if (to_string(op) == name) return op;
  }
  throw std::invalid_argument("unknown operation class: " + std::string(name));
}

double quorum_threshold(OpClass op) {
  switch (op) {
    case OpClass::fl_round_result: return 0.67;
    case OpClass::model_checkpoint: return 0.75;
    case OpClass::architecture_change: return 0.80;
    case OpClass::protocol_update: return 0.90;
  }
  throw std::invalid_argument("unknown operation class");
}

reputation::Sensitivity sensitivity_of(OpClass op) {
  return quorum_threshold(op) >= 0.75 ? reputation::Sensitivity::high
                                      : reputation::Sensitivity::low;
}

std::string_view to_string(EpochStatus s) {
  switch (s) {
    case EpochStatus::pending: return "pending";
    case EpochStatus::committed: return "committed";
    case EpochStatus::aborted: return "aborted";
  }
  return "unknown";
}

WeightSnapshot::WeightSnapshot(std::map<NodeIndex, double> weights)
    : weights_(std::move(weights)) {
  for (const auto& [node, w] : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("negative voting weight");
    total_ += w;
  }
  if (weights_.empty() || !(total_ > 0.0)) {
    throw std::invalid_argument("snapshot needs positive total weight");
  }
}

double WeightSnapshot::weight_of(NodeIndex node) const {
  auto it = weights_.find(node);
  return it == weights_.end() ? 0.0 : it->second;
}

WeightSnapshot snapshot_weights(std::span<const Voter> voters, OpClass op,
                                const reputation::ReputationParams& params) {
  std::map<NodeIndex, double> weights;
  const auto sensitivity = sensitivity_of(op);
  for (const auto& v : voters) {
    const double r = reputation::score(v.reputation);
    if (r < params.eligibility_floor) continue;
    if (reputation::is_gated(v.reputation, v.age_cycles, params, sensitivity)) {
      continue;
    }
    weights[v.node] = r;
  }
  if (weights.empty()) throw EmptyEligibleSet();
  return WeightSnapshot(std::move(weights));
}

double EpochState::approval_weight() const {
  double s = 0.0;
  for (const auto& [n, w] : approvals) s += w;
  return s;
}

double EpochState::rejection_weight() const {
  double s = 0.0;
  for (const auto& [n, w] : rejections) s += w;
  return s;
}

EpochState open_epoch(const Proposal& proposal, WeightSnapshot snapshot,
                      NodeIndex leader) {
  EpochState e;
  e.proposal = proposal;
  e.snapshot = std::move(snapshot);
  e.leader = leader;
  return e;
}

VoteResult cast_vote(EpochState& epoch, NodeIndex node, bool approve) {
  if (epoch.status != EpochStatus::pending) return VoteResult::epoch_closed;
  if (!epoch.snapshot.contains(node)) {
    epoch.rejected_voters.push_back(node);
    return VoteResult::outside_snapshot;
  }
  if (epoch.approvals.contains(node) || epoch.rejections.contains(node)) {
    return VoteResult::duplicate;
  }
  const double w = epoch.snapshot.weight_of(node);
  (approve ? epoch.approvals : epoch.rejections)[node] = w;
  return VoteResult::accepted;
}

EpochStatus tally(EpochState& epoch) {
  if (epoch.status != EpochStatus::pending) return epoch.status;
  const double total = epoch.snapshot.total();
  const double quorum = quorum_threshold(epoch.proposal.op_class);
  const double slack = kQuorumSlack * total;
  const double approved = epoch.approval_weight();
  if (approved >= quorum * total - slack) {
    epoch.status = EpochStatus::committed;
  } else if (total - epoch.rejection_weight() < quorum * total - slack) {
    epoch.status = EpochStatus::aborted;
  }
  return epoch.status;
}

std::vector<NodeIndex> rank_leaders(std::span<const LeaderCandidate> nodes) {
  std::vector<LeaderCandidate> sorted(nodes.begin(), nodes.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const LeaderCandidate& a, const LeaderCandidate& b) {
              if (a.reputation != b.reputation) return a.reputation > b.reputation;
              const std::array<std::uint64_t, 1> ka{a.id_hash}, kb{b.id_hash};
              const auto ha = public_hash(ka), hb = public_hash(kb);
              if (ha != hb) return ha < hb;
              return a.node < b.node;
            });
  std::vector<NodeIndex> ranked;
  ranked.reserve(sorted.size());
  for (const auto& c : sorted) ranked.push_back(c.node);
  return ranked;
}

NodeIndex elect_leader(std::span<const LeaderCandidate> nodes, std::uint32_t k_l,
                       std::uint64_t round, std::uint32_t view) {
  if (nodes.empty()) throw std::invalid_argument("no eligible leader");
  if (k_l == 0) throw std::invalid_argument("K_L must be positive");
  const auto ranked = rank_leaders(nodes);
  const std::size_t window = std::min<std::size_t>(k_l, ranked.size());
  return ranked[(round + view) % window];
}

EpochState view_change(const EpochState& epoch, bool timeout_elapsed,
                       std::span<const LeaderCandidate> nodes, std::uint32_t k_l) {
  if (epoch.status != EpochStatus::pending) {
    throw std::logic_error("view change on a terminal epoch");
  }
  if (!timeout_elapsed) return epoch;
  EpochState next = epoch;
  next.view += 1;
  next.leader = elect_leader(nodes, k_l, epoch.proposal.round, next.view);
  return next;
}

double view_change_timeout(std::uint32_t consecutive, double base_seconds) {
  return base_seconds * std::ldexp(1.0, static_cast<int>(std::min(consecutive, 30u)));
}

SafetyVerdict check_safety(std::span<const EpochState> trace) {
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& a = trace[i];
    if (a.status != EpochStatus::committed) continue;
    for (std::size_t j = i + 1; j < trace.size(); ++j) {
      const auto& b = trace[j];
      if (b.status != EpochStatus::committed) continue;
      if (a.proposal.round != b.proposal.round ||
          a.proposal.op_class != b.proposal.op_class ||
          a.proposal.content_digest == b.proposal.content_digest) {
        continue;
      }
      if (a.snapshot.weights() != b.snapshot.weights()) continue;
      return {true, a.proposal.id, b.proposal.id};
    }
  }
  return {};
}

}  // namespace nexus::consensus
