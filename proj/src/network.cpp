#include "nexus/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

namespace nexus::network {

bool NodeId::is_zero() const {
  return std::all_of(words.begin(), words.end(), [](auto w) { return w == 0; });
}

int NodeId::leading_zeros() const {
  int total = 0;
  for (std::uint64_t w : words) {
    if (w == 0) {
      total += 64;
      continue;
    }
    return total + std::countl_zero(w);
  }
  return total;
}

std::uint64_t NodeId::short_hash() const {
  return public_hash(std::span<const std::uint64_t>(words.data(), words.size()));
}

std::string NodeId::hex() const {
  std::string out;
  char buf[17];
  for (std::uint64_t w : words) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(w));
    out += buf;
  }
  return out;
}

NodeId derive_node_id(std::uint64_t seed, std::uint64_t key_index) {
  NodeId id;
  std::uint64_t state = mix64(seed ^ mix64(key_index ^ 0x6e65787573ULL));
  for (auto& w : id.words) {
    state = mix64(state);
    w = state;
  }
  return id;
}

NodeId xor_distance(const NodeId& a, const NodeId& b) {
  NodeId d;
  for (std::size_t i = 0; i < 4; ++i) d.words[i] = a.words[i] ^ b.words[i];
  return d;
}

int bucket_index(const NodeId& self, const NodeId& other) {
  const NodeId d = xor_distance(self, other);
  if (d.is_zero()) return -1;
  return d.leading_zeros();
}

InsertResult bucket_insert(KBucket& bucket, const Contact& contact, double margin) {
  for (auto& c : bucket.contacts) {
    if (c.node == contact.node) {
      c.reputation = contact.reputation;
      return {true, std::nullopt};
    }
  }
  if (!bucket.full()) {
    bucket.contacts.push_back(contact);
    return {true, std::nullopt};
  }
  auto weakest = std::min_element(
      bucket.contacts.begin(), bucket.contacts.end(),
      [](const Contact& a, const Contact& b) { return a.reputation < b.reputation; });
  if (contact.reputation > weakest->reputation + margin) {
    Contact evicted = *weakest;
    *weakest = contact;
    return {true, evicted};
  }
  return {false, std::nullopt};
}

RoutingTable::RoutingTable(NodeId self, std::size_t k) : self_(self) {
  for (auto& b : buckets_) b.capacity = k;
}

InsertResult RoutingTable::insert(const Contact& contact) {
  const int idx = bucket_index(self_, contact.id);
  if (idx < 0) return {};
  return bucket_insert(buckets_[static_cast<std::size_t>(idx)], contact);
}

bool RoutingTable::remove(NodeIndex node) {
  for (auto& b : buckets_) {
    auto it = std::find_if(b.contacts.begin(), b.contacts.end(),
                           [&](const Contact& c) { return c.node == node; });
    if (it != b.contacts.end()) {
      b.contacts.erase(it);
      return true;
    }
  }
  return false;
}

std::vector<Contact> RoutingTable::closest(const NodeId& target,
                                           std::size_t count) const {
  std::vector<Contact> all = all_contacts();
  auto cmp = [&](const Contact& a, const Contact& b) {
    return xor_distance(a.id, target) < xor_distance(b.id, target);
  };
  if (all.size() > count) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count),
                      all.end(), cmp);
    all.resize(count);
  } else {
    std::sort(all.begin(), all.end(), cmp);
  }
  return all;
}

std::vector<Contact> RoutingTable::all_contacts() const {
  std::vector<Contact> all;
  for (const auto& b : buckets_) {
    all.insert(all.end(), b.contacts.begin(), b.contacts.end());
  }
  return all;
}

std::size_t RoutingTable::size() const {
  std::size_t n = 0;
  for (const auto& b : buckets_) n += b.contacts.size();
  return n;
}

Overlay::Overlay(std::vector<NodeId> ids, std::size_t k)
    : ids_(std::move(ids)), online_(ids_.size(), true), k_(k) {
  tables_.reserve(ids_.size());
  for (const auto& id : ids_) tables_.emplace_back(id, k);
}

void Overlay::populate_full(std::span<const double> reputations) {
  // Each node meets the others in its own hashed order; a fixed order would
  // let low indices fill every far bucket in the network.
  std::vector<std::pair<std::uint64_t, NodeIndex>> order;
  for (NodeIndex a = 0; a < ids_.size(); ++a) {
    order.clear();
    const std::uint64_t key = ids_[a].short_hash();
    for (NodeIndex b = 0; b < ids_.size(); ++b) {
      if (a != b) order.emplace_back(mix64(key ^ ids_[b].short_hash()), b);
    }
    std::sort(order.begin(), order.end());
    for (const auto& [h, b] : order) {
      tables_[a].insert({b, ids_[b], reputations.empty() ? 0.5 : reputations[b]});
    }
  }
}

void Overlay::populate_random(std::span<const double> reputations,
                              std::size_t per_node, Rng& rng) {
  const std::size_t n = ids_.size();
  for (NodeIndex a = 0; a < n; ++a) {
    for (std::size_t j = 0; j < per_node && n > 1; ++j) {
      auto b = static_cast<NodeIndex>(rng.index(n - 1));
      if (b >= a) ++b;
      const double r = reputations.empty() ? 0.5 : reputations[b];
      tables_[a].insert({b, ids_[b], r});
      tables_[b].insert({a, ids_[a], reputations.empty() ? 0.5 : reputations[a]});
    }
  }
}

NodeIndex Overlay::add_node(const NodeId& id) {
  ids_.push_back(id);
  tables_.emplace_back(id, k_);
  online_.push_back(true);
  return static_cast<NodeIndex>(ids_.size() - 1);
}

void Overlay::replace_id(NodeIndex n, const NodeId& id) {
  ids_[n] = id;
  tables_[n] = RoutingTable(id, k_);
  for (auto& t : tables_) t.remove(n);
}

LookupResult lookup(const Overlay& overlay, NodeIndex origin, const NodeId& target,
                    std::size_t alpha, std::size_t k) {
  LookupResult result;
  const RoutingTable& own = overlay.table(origin);
  if (own.self() == target) {
    result.closest = own.closest(target, k);
    return result;
  }
  std::vector<Contact> shortlist = own.closest(target, k);
  std::set<NodeIndex> seen{origin};
  for (const auto& c : shortlist) seen.insert(c.node);
  std::set<NodeIndex> queried{origin};
  auto by_distance = [&](const Contact& a, const Contact& b) {
    return xor_distance(a.id, target) < xor_distance(b.id, target);
  };
  if (shortlist.empty()) return result;
  NodeId best = xor_distance(shortlist.front().id, target);
  bool finishing = false;

  for (;;) {
    std::vector<Contact> to_query;
    const std::size_t limit = finishing ? k : alpha;
    for (std::size_t i = 0; i < shortlist.size() && i < k && to_query.size() < limit; ++i) {
      if (!queried.contains(shortlist[i].node)) to_query.push_back(shortlist[i]);
    }
    if (to_query.empty()) break;
    ++result.hops;
    for (const auto& c : to_query) {
      queried.insert(c.node);
      if (!overlay.online(c.node)) continue;
      for (const auto& r : overlay.table(c.node).closest(target, k)) {
        if (seen.insert(r.node).second) shortlist.push_back(r);
      }
    }
    // Drop unresponsive contacts from the candidate list.
    std::erase_if(shortlist, [&](const Contact& c) {
      return queried.contains(c.node) && !overlay.online(c.node);
    });
    std::sort(shortlist.begin(), shortlist.end(), by_distance);
    if (shortlist.empty()) break;
    const NodeId now = xor_distance(shortlist.front().id, target);
    if (finishing) break;
    if (now < best) {
      best = now;
    } else {
      finishing = true;
    }
  }
  if (shortlist.size() > k) shortlist.resize(k);
  result.closest = std::move(shortlist);
  return result;
}

std::vector<GossipTrace> gossip_broadcast(const Overlay& overlay,
                                          std::span<const GossipMessage> messages,
                                          std::span<const double> reputations,
                                          const GossipParams& params, Rng& rng) {
  const std::size_t n = overlay.size();
  std::vector<std::vector<NodeIndex>> neighbours(n);
  std::size_t online_count = 0;
  for (NodeIndex v = 0; v < n; ++v) {
    if (overlay.online(v)) ++online_count;
    for (const auto& c : overlay.table(v).all_contacts()) {
      neighbours[v].push_back(c.node);
    }
  }
  auto rep_of = [&](NodeIndex v) {
    return reputations.empty() ? 0.5 : reputations[v];
  };

  constexpr std::uint32_t kNotHeld = UINT32_MAX;
  const std::size_t m = messages.size();
  // hops_at[msg][node]: hop count at which the node got the message.
  std::vector<std::vector<std::uint32_t>> hops_at(m, std::vector<std::uint32_t>(n, kNotHeld));
  std::vector<std::size_t> held(m, 0);
  std::vector<GossipTrace> traces(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto origin = messages[i].origin;
    if (overlay.online(origin)) {
      hops_at[i][origin] = 0;
      held[i] = 1;
    }
    traces[i].coverage.push_back(online_count == 0 ? 0.0
                                                   : static_cast<double>(held[i]) / online_count);
  }

  struct Receipt {
    std::size_t msg;
    NodeIndex sender;
    NodeIndex receiver;
    std::uint32_t hops;
    double sender_rep;
  };

  for (std::uint32_t round = 1; round <= params.max_rounds; ++round) {
    std::vector<std::size_t> queue_used(n, 0);
    // Wave 0: every current holder with budget pushes.
    std::vector<std::pair<std::size_t, NodeIndex>> senders;
    for (std::size_t i = 0; i < m; ++i) {
      const std::uint32_t ttl = std::min(messages[i].ttl, params.ttl);
      for (NodeIndex v = 0; v < n; ++v) {
        if (hops_at[i][v] != kNotHeld && hops_at[i][v] < ttl && overlay.online(v)) {
          senders.emplace_back(i, v);
        }
      }
    }
    while (!senders.empty()) {
      std::vector<Receipt> receipts;
      for (const auto& [i, v] : senders) {
        const auto& nb = neighbours[v];
        const std::size_t f = std::min(params.fanout, nb.size());
        // Partial Fisher-Yates over a copy keeps draws uniform and distinct.
        std::vector<NodeIndex> pool = nb;
        for (std::size_t j = 0; j < f; ++j) {
          const std::size_t pick = j + rng.index(pool.size() - j);
          std::swap(pool[j], pool[pick]);
          receipts.push_back({i, v, pool[j], hops_at[i][v] + 1, rep_of(v)});
        }
      }
      // Highest sender reputation gets queue space first.
      std::stable_sort(receipts.begin(), receipts.end(),
                       [](const Receipt& a, const Receipt& b) {
                         return a.sender_rep > b.sender_rep;
                       });
      std::vector<std::pair<std::size_t, NodeIndex>> next;
      for (const auto& r : receipts) {
        if (!overlay.online(r.receiver)) continue;
        if (queue_used[r.receiver] >= params.queue_capacity) {
          ++traces[r.msg].dropped;
          continue;
        }
        ++queue_used[r.receiver];
        if (hops_at[r.msg][r.receiver] != kNotHeld) continue;
        hops_at[r.msg][r.receiver] = r.hops;
        ++held[r.msg];
        const std::uint32_t ttl = std::min(messages[r.msg].ttl, params.ttl);
        if (r.hops < ttl) next.emplace_back(r.msg, r.receiver);
      }
      senders = std::move(next);
    }
    bool all_done = true;
    for (std::size_t i = 0; i < m; ++i) {
      traces[i].coverage.push_back(online_count == 0 ? 0.0
                                                     : static_cast<double>(held[i]) / online_count);
      if (held[i] < online_count) all_done = false;
    }
    if (all_done) break;
  }
  return traces;
}

GossipTrace gossip_broadcast(const Overlay& overlay, NodeIndex origin,
                             std::span<const double> reputations,
                             const GossipParams& params, Rng& rng) {
  const GossipMessage msg{0, origin, params.ttl, 0,
                          reputations.empty() ? 0.5 : reputations[origin]};
  return gossip_broadcast(overlay, std::span<const GossipMessage>(&msg, 1),
                          reputations, params, rng)
      .front();
}

double median_latency(const LatencyModel& model, std::uint32_t region_a,
                      std::uint32_t region_b, bool same_node) {
  if (same_node) return model.loopback_ms;
  if (region_a == region_b) return model.intra_region_ms;
  if (provider_of(region_a) == provider_of(region_b)) return model.same_provider_ms;
  return model.cross_provider_ms;
}

double sample_latency(const LatencyModel& model, std::uint32_t region_a,
                      std::uint32_t region_b, bool same_node, Rng& rng) {
  const double median = median_latency(model, region_a, region_b, same_node);
  if (same_node) return median;
  const double cv = model.coefficient_of_variation;
  const double sigma = std::sqrt(std::log1p(cv * cv));
  return median * std::exp(sigma * rng.normal());
}

std::vector<ChurnEvent> churn_step(std::vector<Member>& members,
                                   const ChurnParams& params, double dt_minutes,
                                   std::uint64_t round, Rng& rng) {
  std::vector<ChurnEvent> events;
  if (params.rate_per_minute <= 0.0 || members.empty()) return events;
  const double mean =
      params.rate_per_minute * static_cast<double>(members.size()) * dt_minutes;
  const std::uint64_t departures = rng.poisson(mean);
  const std::uint64_t arrivals = rng.poisson(mean);

  std::vector<NodeIndex> online;
  for (NodeIndex i = 0; i < members.size(); ++i) {
    if (members[i].online) online.push_back(i);
  }
  const std::size_t leave = std::min<std::size_t>(departures, online.size());
  for (std::size_t j = 0; j < leave; ++j) {
    const std::size_t pick = j + rng.index(online.size() - j);
    std::swap(online[j], online[pick]);
    Member& m = members[online[j]];
    m.online = false;
    m.departed_round = round;
    events.push_back({ChurnEvent::Kind::departure, online[j]});
  }

  std::vector<NodeIndex> offline;
  for (NodeIndex i = 0; i < members.size(); ++i) {
    if (!members[i].online) offline.push_back(i);
  }
  const std::size_t join = std::min<std::size_t>(arrivals, offline.size());
  for (std::size_t j = 0; j < join; ++j) {
    const std::size_t pick = j + rng.index(offline.size() - j);
    std::swap(offline[j], offline[pick]);
    const NodeIndex node = offline[j];
    Member& m = members[node];
    m.online = true;
    if (rng.bernoulli(params.return_probability)) {
      const bool retained = round - m.departed_round <= params.retention_rounds;
      events.push_back({retained ? ChurnEvent::Kind::return_retained
                                 : ChurnEvent::Kind::return_reset,
                        node});
    } else {
      m.generation += 1;
      events.push_back({ChurnEvent::Kind::fresh_identity, node});
    }
  }
  return events;
}

}  // namespace nexus::network
