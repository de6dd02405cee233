#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nexus/random.hpp"

namespace nexus::network {

using NodeIndex = std::uint32_t;

/// 256-bit identifier, most significant word first.
struct NodeId {
  std::array<std::uint64_t, 4> words{};

  auto operator<=>(const NodeId&) const = default;
  bool is_zero() const;
  /// Number of leading zero bits (256 for zero).
  int leading_zeros() const;
  std::uint64_t short_hash() const;
  std::string hex() const;
};

/// Identity derived from a simulated key pair: a keyed 256-bit digest of
/// (seed, key index). Opaque hash, no real cryptography.
NodeId derive_node_id(std::uint64_t seed, std::uint64_t key_index);

NodeId xor_distance(const NodeId& a, const NodeId& b);

/// Kademlia bucket index for `other` relative to `self` (0 = farthest half,
/// 255 = closest); -1 when equal.
int bucket_index(const NodeId& self, const NodeId& other);

inline constexpr double kEvictionMargin = 0.15;

struct Contact {
  NodeIndex node = 0;
  NodeId id;
  double reputation = 0.5;
};

struct KBucket {
  std::size_t capacity = 20;
  std::vector<Contact> contacts;

  bool full() const { return contacts.size() >= capacity; }
};

struct InsertResult {
  bool inserted = false;
  std::optional<Contact> evicted;
};

/// Appends when there is room. When full, the lowest-reputation incumbent is
/// replaced only if the newcomer beats it by more than the eviction margin;
/// otherwise the newcomer is dropped. Re-inserting a known contact refreshes
/// its reputation.
InsertResult bucket_insert(KBucket& bucket, const Contact& contact,
                           double margin = kEvictionMargin);

class RoutingTable {
 public:
  RoutingTable(NodeId self, std::size_t k);

  InsertResult insert(const Contact& contact);
  bool remove(NodeIndex node);
  /// Up to `count` known contacts closest to `target`.
  std::vector<Contact> closest(const NodeId& target, std::size_t count) const;
  std::vector<Contact> all_contacts() const;
  std::size_t size() const;
  const NodeId& self() const { return self_; }
  const std::array<KBucket, 256>& buckets() const { return buckets_; }

 private:
  NodeId self_;
  std::array<KBucket, 256> buckets_;
};

/// Simulated overlay: one routing table per node.
class Overlay {
 public:
  Overlay(std::vector<NodeId> ids, std::size_t k);

  /// Every node learns every other node (subject to bucket capacity and
  /// eviction), with `reputations[i]` as node i's advertised reputation.
  void populate_full(std::span<const double> reputations);
  /// Each node learns `per_node` random peers.
  void populate_random(std::span<const double> reputations, std::size_t per_node,
                       Rng& rng);

  std::size_t size() const { return ids_.size(); }
  const NodeId& id(NodeIndex n) const { return ids_[n]; }
  const RoutingTable& table(NodeIndex n) const { return tables_[n]; }
  RoutingTable& table(NodeIndex n) { return tables_[n]; }
  std::size_t k() const { return k_; }
  bool online(NodeIndex n) const { return online_[n]; }
  void set_online(NodeIndex n, bool up) { online_[n] = up; }
  /// Appends a node with an empty routing table and returns its index.
  NodeIndex add_node(const NodeId& id);
  void replace_id(NodeIndex n, const NodeId& id);

 private:
  std::vector<NodeId> ids_;
  std::vector<RoutingTable> tables_;
  std::vector<bool> online_;
  std::size_t k_;
};

struct LookupResult {
  std::vector<Contact> closest;
  std::uint32_t hops = 0;
};

/// Iterative lookup: query the `alpha` closest unqueried contacts, merge their
/// answers, repeat until a round brings nothing closer; then finish by
/// querying any unqueried contacts among the best `k`. Offline nodes do not
/// answer.
LookupResult lookup(const Overlay& overlay, NodeIndex origin, const NodeId& target,
                    std::size_t alpha = 3, std::size_t k = 20);

struct GossipMessage {
  std::uint64_t payload_digest = 0;
  NodeIndex origin = 0;
  std::uint32_t ttl = 7;
  std::uint32_t hops = 0;
  double sender_reputation = 0.5;
};

struct GossipParams {
  std::size_t fanout = 6;
  std::uint32_t ttl = 7;
  /// Inbound receipts a node accepts per gossip round.
  std::size_t queue_capacity = 64;
  std::uint32_t max_rounds = 10;
};

struct GossipTrace {
  /// coverage[r] = fraction of online nodes holding the message after round
  /// r (coverage[0] is the origin alone).
  std::vector<double> coverage;
  std::size_t dropped = 0;
};

/// Push gossip in synchronous rounds. In each round every holder with hop
/// budget pushes to `fanout` contacts drawn uniformly from its routing table;
/// a node that first receives the message relays it within the same round
/// while the hop budget (TTL) lasts. Duplicate receipts are ignored. Receipts
/// beyond a node's per-round queue capacity are dropped, lowest sender
/// reputation first. One trace per message.
std::vector<GossipTrace> gossip_broadcast(const Overlay& overlay,
                                          std::span<const GossipMessage> messages,
                                          std::span<const double> reputations,
                                          const GossipParams& params, Rng& rng);
GossipTrace gossip_broadcast(const Overlay& overlay, NodeIndex origin,
                             std::span<const double> reputations,
                             const GossipParams& params, Rng& rng);

/// Regions 0..8; provider = region / 3.
inline constexpr std::uint32_t kRegions = 9;
inline constexpr std::uint32_t kRegionsPerProvider = 3;
inline std::uint32_t provider_of(std::uint32_t region) {
  return region / kRegionsPerProvider;
}

struct LatencyModel {
  double intra_region_ms = 12.0;
  double same_provider_ms = 40.0;
  double cross_provider_ms = 87.0;
  double loopback_ms = 1.0;
  double coefficient_of_variation = 0.2;
};

/// Log-normal RTT with the median for the pair's locality class.
double sample_latency(const LatencyModel& model, std::uint32_t region_a,
                      std::uint32_t region_b, bool same_node, Rng& rng);
double median_latency(const LatencyModel& model, std::uint32_t region_a,
                      std::uint32_t region_b, bool same_node);

/// Membership bookkeeping for churn.
struct Member {
  bool online = true;
  std::uint64_t departed_round = 0;
  /// Generation counter; a whitewashed slot gets a fresh identity.
  std::uint32_t generation = 0;
};

struct ChurnEvent {
  enum class Kind { departure, return_retained, return_reset, fresh_identity };
  Kind kind;
  NodeIndex node;
};

struct ChurnParams {
  /// Fraction of the population departing (and arriving) per minute.
  double rate_per_minute = 0.0;
  /// Probability that an arrival is a returning node rather than a fresh
  /// identity reusing a departed slot.
  double return_probability = 0.5;
  /// Rounds a departed node keeps its reputation.
  std::uint32_t retention_rounds = 100;
};

/// Departures and arrivals each ~ Poisson(rate * n * dt). Returning nodes
/// keep their state within `retention_rounds`; later returns and fresh
/// identities restart at the prior (reported via the event kind).
std::vector<ChurnEvent> churn_step(std::vector<Member>& members,
                                   const ChurnParams& params, double dt_minutes,
                                   std::uint64_t round, Rng& rng);

}  // namespace nexus::network
