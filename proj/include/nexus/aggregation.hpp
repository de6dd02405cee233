#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nexus/learner.hpp"

namespace nexus::aggregation {

using NodeIndex = std::uint32_t;
using learner::ModelParams;
using learner::Vector;

struct UpdateDelta {
  NodeIndex node = 0;
  Vector delta;
  std::size_t n_k = 0;
};

class NoTrustedMass : public std::runtime_error {
 public:
  NoTrustedMass() : std::runtime_error("no trusted mass") {}
};

/// alpha_k = n_k r_k / sum_j n_j r_j. Reputations are parallel to `updates`.
/// Computed as n_k (r_k / r_max) / sum_j n_j (r_j / r_max), which is the same
/// quantity and reduces bit-for-bit to fedavg_weights when all r are equal.
std::vector<double> aggregation_weights(std::span<const UpdateDelta> updates,
                                        std::span<const double> reputations);

/// n_k / sum_j n_j.
std::vector<double> fedavg_weights(std::span<const UpdateDelta> updates);

/// global + sum_k weight_k * delta_k. Weights must sum to 1 within 1e-9.
ModelParams rep_fedavg(const ModelParams& global,
                       std::span<const UpdateDelta> updates,
                       std::span<const double> weights);

/// Coordinate-wise trimmed mean that drops `byzantine_bound` values at each
/// end before averaging.
ModelParams trimmed_mean(const ModelParams& global,
                         std::span<const UpdateDelta> updates,
                         std::size_t byzantine_bound);

/// Coordinate-wise median.
ModelParams coordinate_median(const ModelParams& global,
                              std::span<const UpdateDelta> updates);

/// Krum: applies the single update whose summed squared distance to its
/// n - f - 2 nearest neighbours is smallest. Returns the chosen index too.
struct KrumChoice {
  ModelParams model;
  std::size_t chosen = 0;
};
KrumChoice krum(const ModelParams& global, std::span<const UpdateDelta> updates,
                std::size_t byzantine_bound);

}  // namespace nexus::aggregation
