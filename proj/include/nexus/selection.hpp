#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nexus/random.hpp"

namespace nexus::selection {

using NodeIndex = std::uint32_t;

struct CapabilityProfile {
  double cap = 0.0;
  double load = 0.0;
  double lat = 0.0;
  std::uint64_t verified_at = 0;
  bool stale = false;
};

struct SelectionWeights {
  double w1 = 0.4;  // capability
  double w2 = 0.2;  // spare capacity (1 - load)
  double w3 = 0.1;  // proximity (1 - lat)
  double w4 = 0.3;  // reputation

  /// Throws std::invalid_argument unless weights are nonnegative and sum to 1.
  void validate() const;
  SelectionWeights scaled(double factor) const {
    return {w1 * factor, w2 * factor, w3 * factor, w4 * factor};
  }
};

/// Latency normalization: min(rtt / rtt_max, 1).
inline constexpr double kRttMaxMs = 200.0;
double normalize_latency(double rtt_ms, double rtt_max_ms = kRttMaxMs);

double score_candidate(const CapabilityProfile& profile, double reputation,
                       const SelectionWeights& weights);

struct SelectionCandidate {
  NodeIndex node = 0;
  std::uint64_t id_hash = 0;
  CapabilityProfile profile;
  double reputation = 0.5;
};

class InsufficientCandidates : public std::runtime_error {
 public:
  InsufficientCandidates() : std::runtime_error("insufficient candidates") {}
};

/// Top-k by score. Ties are broken by public_hash(id_hash, round).
/// Weights need not be normalized (only the order matters).
std::vector<NodeIndex> select_participants(
    std::span<const SelectionCandidate> candidates, std::size_t k,
    const SelectionWeights& weights, std::uint64_t round);

/// Uniform random k-subset in candidate order of the draw.
std::vector<NodeIndex> select_random(std::span<const SelectionCandidate> candidates,
                                     std::size_t k, Rng& rng);

/// What a probe sees about a node in simulation.
struct ProbeTarget {
  bool online = true;
  double true_cap = 0.0;
  double announced_cap = 0.0;
  bool inflates_capability = false;
  double load = 0.0;
  double rtt_ms = 0.0;
};

/// Challenge-response probe. Inflated announcements are clamped to the true
/// capability; an offline node yields a stale profile with cap 0.
CapabilityProfile probe_capability(const ProbeTarget& node, std::uint64_t round);

}  // namespace nexus::selection
