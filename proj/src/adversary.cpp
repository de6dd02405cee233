#include "nexus/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nexus::adversary {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::gradient_flip: return "gradient_flip";
    case AttackKind::alie: return "alie";
    case AttackKind::backdoor: return "backdoor";
    case AttackKind::sybil: return "sybil";
    case AttackKind::unreliable: return "unreliable";
    case AttackKind::farming: return "farming";
  }
  return "unknown";
}

AttackKind parse_attack_kind(std::string_view name) {
  for (AttackKind k : {AttackKind::none, AttackKind::gradient_flip, AttackKind::alie,
                       AttackKind::backdoor, AttackKind::sybil, AttackKind::unreliable,
                       AttackKind::farming}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown attack kind: " + std::string(name));
}

void AttackSpec::validate() const {
  if (!(byzantine_fraction >= 0.0 && byzantine_fraction < 1.0)) {
    throw std::invalid_argument("byzantine_fraction must be in [0,1)");
  }
  if (!(failure_prob >= 0.0 && failure_prob <= 1.0)) {
    throw std::invalid_argument("failure_prob must be in [0,1]");
  }
  if (!(poison_fraction >= 0.0 && poison_fraction <= 1.0)) {
    throw std::invalid_argument("poison_fraction must be in [0,1]");
  }
  if (!(sybil_fraction >= 0.0)) throw std::invalid_argument("sybil_fraction must be >= 0");
  if (!std::isfinite(alie_z)) throw std::invalid_argument("alie_z must be finite");
}

bool is_malicious(const AttackSpec& spec, std::uint64_t round) {
  switch (spec.kind) {
    case AttackKind::gradient_flip:
    case AttackKind::alie:
    case AttackKind::backdoor:
    case AttackKind::sybil:
      return true;
    case AttackKind::farming:
      return round >= spec.farming_onset_round;
    case AttackKind::none:
    case AttackKind::unreliable:
      return false;
  }
  return false;
}

Vector gradient_flip(std::span<const double> delta) {
  Vector out(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) out[i] = -delta[i];
  return out;
}

AlieStats alie_stats(std::span<const Vector> deltas) {
  AlieStats s;
  s.contributors = deltas.size();
  if (deltas.empty()) return s;
  const std::size_t d = deltas.front().size();
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (const auto& v : deltas) {
    if (v.size() != d) throw std::invalid_argument("colluder deltas differ in size");
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += v[i];
  }
  const double n = static_cast<double>(deltas.size());
  for (double& m : s.mean) m /= n;
  for (const auto& v : deltas) {
    for (std::size_t i = 0; i < d; ++i) {
      const double e = v[i] - s.mean[i];
      s.stddev[i] += e * e;
    }
  }
  for (double& sd : s.stddev) sd = std::sqrt(sd / n);
  return s;
}

Vector alie_craft(const AlieStats& stats, double z) {
  if (stats.contributors < 2) {
    throw std::invalid_argument("ALIE needs at least two colluders");
  }
  Vector out(stats.mean.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stats.mean[i] + z * stats.stddev[i];
  return out;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile needs p in (0,1)");
  // Phi(x) = erfc(-x / sqrt 2) / 2 is increasing; bisect on [-40, 40].
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double alie_auto_z(std::size_t total, std::size_t attackers) {
  if (total == 0 || attackers > total) throw std::invalid_argument("bad ALIE counts");
  const auto n = static_cast<double>(total);
  const double s = std::floor(n / 2.0 + 1.0) - static_cast<double>(attackers);
  const double p = (n - s) / n;
  return normal_quantile(std::clamp(p, 1e-9, 1.0 - 1e-9));
}

Vector alie_attack(std::span<const Vector> colluder_deltas, double z) {
  if (colluder_deltas.empty()) return {};
  if (colluder_deltas.size() == 1) return gradient_flip(colluder_deltas.front());
  return alie_craft(alie_stats(colluder_deltas), z);
}

learner::ToyDataset backdoor_poison(const learner::ToyDataset& shard,
                                    const Trigger& trigger, double fraction,
                                    Rng& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("poison fraction must be in [0,1]");
  }
  for (auto idx : trigger.indices) {
    if (idx >= shard.dim) throw std::invalid_argument("trigger index outside feature dimension");
  }
  if (trigger.target_label < 0 ||
      static_cast<std::size_t>(trigger.target_label) >= shard.classes) {
    throw std::invalid_argument("target label out of range");
  }
  learner::ToyDataset out = shard;
  std::vector<std::size_t> order(shard.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(shard.size())));
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t row = order[j];
    for (auto idx : trigger.indices) out.features[row * out.dim + idx] = trigger.value;
    out.labels[row] = trigger.target_label;
  }
  return out;
}

bool unreliable_fails(double failure_prob, Rng& rng) {
  return rng.bernoulli(failure_prob);
}

Vector random_direction(std::size_t dim, double norm, Rng& rng) {
  Vector v(dim);
  double s = 0.0;
  do {
    s = 0.0;
    for (double& x : v) {
      x = rng.normal();
      s += x * x;
    }
  } while (s == 0.0 && dim > 0);
  const double scale = dim == 0 ? 0.0 : norm / std::sqrt(s);
  for (double& x : v) x *= scale;
  return v;
}

std::vector<network::NodeIndex> inject_sybils(network::Overlay& overlay,
                                              std::size_t count, std::size_t peers,
                                              double r0, std::uint64_t seed) {
  std::vector<network::NodeIndex> added;
  Rng rng(seed, "sybil-links");
  const std::size_t existing = overlay.size();
  for (std::size_t j = 0; j < count; ++j) {
    const auto id = network::derive_node_id(seed ^ 0x5359424953ULL, existing + j);
    const auto node = overlay.add_node(id);
    added.push_back(node);
    const std::size_t pool = overlay.size() - 1;
    for (std::size_t p = 0; p < peers && pool > 0; ++p) {
      const auto peer = static_cast<network::NodeIndex>(rng.index(pool));
      overlay.table(node).insert({peer, overlay.id(peer), r0});
      overlay.table(peer).insert({node, id, r0});
    }
  }
  return added;
}

}  // namespace nexus::adversary
