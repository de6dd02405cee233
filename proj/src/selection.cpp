#include "nexus/selection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace nexus::selection {

void SelectionWeights::validate() const {
  for (double w : {w1, w2, w3, w4}) {
    if (!(w >= 0.0)) throw std::invalid_argument("selection weights must be >= 0");
  }
  if (std::abs(w1 + w2 + w3 + w4 - 1.0) > 1e-9) {
    throw std::invalid_argument("selection weights must sum to 1");
  }
}

double normalize_latency(double rtt_ms, double rtt_max_ms) {
  return std::clamp(rtt_ms / rtt_max_ms, 0.0, 1.0);
}

double score_candidate(const CapabilityProfile& profile, double reputation,
                       const SelectionWeights& weights) {
  return weights.w1 * profile.cap + weights.w2 * (1.0 - profile.load) +
         weights.w3 * (1.0 - profile.lat) + weights.w4 * reputation;
}

std::vector<NodeIndex> select_participants(
    std::span<const SelectionCandidate> candidates, std::size_t k,
    const SelectionWeights& weights, std::uint64_t round) {
  if (candidates.size() < k) throw InsufficientCandidates();
  struct Ranked {
    double score;
    std::uint64_t tie;
    NodeIndex node;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(candidates.size());
  for (const auto& c : candidates) {
    const std::array<std::uint64_t, 2> key{c.id_hash, round};
    ranked.push_back({score_candidate(c.profile, c.reputation, weights),
                      public_hash(key), c.node});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.tie != b.tie) return a.tie < b.tie;
    return a.node < b.node;
  });
  std::vector<NodeIndex> chosen;
  chosen.reserve(k);
  for (std::size_t i = 0; i < k; ++i) chosen.push_back(ranked[i].node);
  return chosen;
}

std::vector<NodeIndex> select_random(std::span<const SelectionCandidate> candidates,
                                     std::size_t k, Rng& rng) {
  if (candidates.size() < k) throw InsufficientCandidates();
  std::vector<NodeIndex> all;
  all.reserve(candidates.size());
  for (const auto& c : candidates) all.push_back(c.node);
  // partial Fisher-Yates
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + rng.index(all.size() - i);
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  return all;
}

CapabilityProfile probe_capability(const ProbeTarget& node, std::uint64_t round) {
  CapabilityProfile p;
  p.verified_at = round;
  p.load = std::clamp(node.load, 0.0, 1.0);
  p.lat = normalize_latency(node.rtt_ms);
  if (!node.online) {
    // Last known load/latency are kept; capability counts as 0 until reprobed.
    p.stale = true;
    p.cap = 0.0;
    return p;
  }
  p.cap = node.inflates_capability ? std::min(node.announced_cap, node.true_cap)
                                   : node.announced_cap;
  return p;
}

}  // namespace nexus::selection
