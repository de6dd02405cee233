#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <utility>
#include <vector>

namespace nexus::learner {

inline constexpr double kInfiniteEpsilon = std::numeric_limits<double>::infinity();

/// Renyi DP of one Poisson-subsampled Gaussian step at integer order `alpha`
/// (binomial-expansion form; exact for integer orders).
double subsampled_gaussian_rdp(double q, double sigma, std::uint32_t alpha);

/// (epsilon, delta) after `steps` compositions, minimized over integer orders
/// 2..256. sigma == 0 yields kInfiniteEpsilon; steps == 0 yields 0.
double rdp_epsilon(double q, double sigma, std::uint64_t steps, double delta);

/// Order that attains the minimum in rdp_epsilon (0 when undefined).
std::uint32_t rdp_best_order(double q, double sigma, std::uint64_t steps,
                             double delta);

/// Per-order RDP of one step for orders 2..256 (index 0 is order 2).
std::vector<double> rdp_curve(double q, double sigma);

/// Composes `curve` over `steps` and converts to epsilon at `delta`.
double epsilon_from_curve(const std::vector<double>& curve,
                          std::uint64_t steps, double delta);

/// Per-node DP-SGD bookkeeping across rounds.
class PrivacyLedger {
 public:
  struct Entry {
    std::uint64_t steps = 0;
    std::uint32_t participations = 0;
    double sample_rate = 0.0;
  };

  void record(std::uint32_t node, std::uint64_t steps, double sample_rate);

  const Entry* find(std::uint32_t node) const;
  std::uint32_t max_participation() const;
  double epsilon(std::uint32_t node, double sigma, double delta) const;
  /// Epsilon of the most-exposed node.
  double worst_case_epsilon(double sigma, double delta) const;

 private:
  const std::vector<double>& curve(double q, double sigma) const;

  std::map<std::uint32_t, Entry> entries_;
  mutable std::map<std::pair<double, double>, std::vector<double>> curves_;
};

}  // namespace nexus::learner
