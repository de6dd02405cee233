#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nexus/learner.hpp"
#include "nexus/network.hpp"
#include "nexus/random.hpp"

namespace nexus::adversary {

using learner::Vector;

enum class AttackKind { none, gradient_flip, alie, backdoor, sybil, unreliable, farming };

std::string_view to_string(AttackKind kind);
/// Throws std::invalid_argument for unknown names.
AttackKind parse_attack_kind(std::string_view name);

struct Trigger {
  std::vector<std::size_t> indices{0, 1, 2, 3};
  double value = 4.0;
  int target_label = 0;
};

struct AttackSpec {
  AttackKind kind = AttackKind::none;
  /// Share of the training pool controlled by the attacker.
  double byzantine_fraction = 0.0;
  double alie_z = 1.0;
  /// Derive z from the attacker/total counts instead of using alie_z.
  bool alie_auto_z = false;
  Trigger trigger;
  double poison_fraction = 0.5;
  /// Sybil identities as a fraction of the honest population.
  double sybil_fraction = 0.0;
  std::uint64_t sybil_join_round = 0;
  double failure_prob = 0.4;
  std::uint64_t farming_onset_round = 50;
  /// Byzantine trainers announce cap = 1 (the probe clamps it).
  bool inflate_capability = false;
  /// Byzantine trainers stay out of the run entirely (honest-only bound).
  bool exclude_attackers = false;

  void validate() const;
};

/// True when byzantine nodes of this kind also vote and evaluate against
/// honest peers in the given round.
bool is_malicious(const AttackSpec& spec, std::uint64_t round);

Vector gradient_flip(std::span<const double> delta);

struct AlieStats {
  Vector mean;
  Vector stddev;
  std::size_t contributors = 0;
};

/// Per-coordinate mean and (population) standard deviation of the
/// colluders' own pre-attack deltas.
AlieStats alie_stats(std::span<const Vector> deltas);

/// mean + z * stddev. Throws std::invalid_argument with fewer than two
/// contributors.
Vector alie_craft(const AlieStats& stats, double z);

/// The z of the original construction: s = floor(n/2 + 1) - m supporters
/// are needed, z = Phi^-1((n - s) / n).
double alie_auto_z(std::size_t total, std::size_t attackers);

/// Shared colluder vector, falling back to flipping the single delta when
/// only one colluder is present.
Vector alie_attack(std::span<const Vector> colluder_deltas, double z);

/// Overwrites trigger features and labels on a `fraction` of the examples.
/// Throws std::invalid_argument for trigger indices outside the feature
/// dimension or a fraction outside [0,1].
learner::ToyDataset backdoor_poison(const learner::ToyDataset& shard,
                                    const Trigger& trigger, double fraction,
                                    Rng& rng);

/// Whether an unreliable node misbehaves this round.
bool unreliable_fails(double failure_prob, Rng& rng);

/// Uniformly random direction scaled to `norm`.
Vector random_direction(std::size_t dim, double norm, Rng& rng);

/// Adds `count` fresh identities to the overlay. Each learns `peers` random
/// contacts and announces itself to them at reputation `r0`.
std::vector<network::NodeIndex> inject_sybils(network::Overlay& overlay,
                                              std::size_t count, std::size_t peers,
                                              double r0, std::uint64_t seed);

/// Inverse standard normal CDF (bisection on erfc; accurate to ~1e-12).
double normal_quantile(double p);

}  // namespace nexus::adversary
