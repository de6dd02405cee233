#include "nexus/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nexus::aggregation {

namespace {

void check_dims(const ModelParams& global, std::span<const UpdateDelta> updates) {
  for (const auto& u : updates) {
    if (u.delta.size() != global.size()) {
      throw std::invalid_argument("update dimension does not match model");
    }
  }
}

}  // namespace

std::vector<double> aggregation_weights(std::span<const UpdateDelta> updates,
                                        std::span<const double> reputations) {
  if (updates.size() != reputations.size()) {
    throw std::invalid_argument("one reputation per update required");
  }
  double r_max = 0.0;
  for (double r : reputations) {
    if (!(r >= 0.0)) throw std::invalid_argument("reputation must be >= 0");
    r_max = std::max(r_max, r);
  }
  if (r_max == 0.0) throw NoTrustedMass();
  std::vector<double> mass(updates.size());
  double total = 0.0;
  for (std::size_t k = 0; k < updates.size(); ++k) {
    mass[k] = static_cast<double>(updates[k].n_k) * (reputations[k] / r_max);
    total += mass[k];
  }
  if (!(total > 0.0)) throw NoTrustedMass();
  for (double& m : mass) m /= total;
  return mass;
}

std::vector<double> fedavg_weights(std::span<const UpdateDelta> updates) {
  std::vector<double> w(updates.size());
  double total = 0.0;
  for (std::size_t k = 0; k < updates.size(); ++k) {
    w[k] = static_cast<double>(updates[k].n_k);
    total += w[k];
  }
  if (!(total > 0.0)) throw std::invalid_argument("no examples behind updates");
  for (double& v : w) v /= total;
  return w;
}

ModelParams rep_fedavg(const ModelParams& global,
                       std::span<const UpdateDelta> updates,
                       std::span<const double> weights) {
  if (updates.size() != weights.size()) {
    throw std::invalid_argument("one weight per update required");
  }
  check_dims(global, updates);
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("aggregation weights must sum to 1");
  }
  ModelParams out = global;
  for (std::size_t k = 0; k < updates.size(); ++k) {
    const auto& d = updates[k].delta;
    for (std::size_t i = 0; i < d.size(); ++i) out.values[i] += weights[k] * d[i];
  }
  return out;
}

ModelParams trimmed_mean(const ModelParams& global,
                         std::span<const UpdateDelta> updates,
                         std::size_t byzantine_bound) {
  check_dims(global, updates);
  if (updates.empty()) throw std::invalid_argument("no updates");
  const std::size_t n = updates.size();
  const std::size_t trim = std::min(byzantine_bound, (n - 1) / 2);
  ModelParams out = global;
  std::vector<double> column(n);
  for (std::size_t i = 0; i < global.size(); ++i) {
    for (std::size_t k = 0; k < n; ++k) column[k] = updates[k].delta[i];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (std::size_t k = trim; k < n - trim; ++k) sum += column[k];
    out.values[i] += sum / static_cast<double>(n - 2 * trim);
  }
  return out;
}

ModelParams coordinate_median(const ModelParams& global,
                              std::span<const UpdateDelta> updates) {
  check_dims(global, updates);
  if (updates.empty()) throw std::invalid_argument("no updates");
  const std::size_t n = updates.size();
  ModelParams out = global;
  std::vector<double> column(n);
  for (std::size_t i = 0; i < global.size(); ++i) {
    for (std::size_t k = 0; k < n; ++k) column[k] = updates[k].delta[i];
    std::sort(column.begin(), column.end());
    out.values[i] += n % 2 == 1 ? column[n / 2]
                                : 0.5 * (column[n / 2 - 1] + column[n / 2]);
  }
  return out;
}

KrumChoice krum(const ModelParams& global, std::span<const UpdateDelta> updates,
                std::size_t byzantine_bound) {
  check_dims(global, updates);
  if (updates.empty()) throw std::invalid_argument("no updates");
  const std::size_t n = updates.size();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < global.size(); ++i) {
        const double diff = updates[a].delta[i] - updates[b].delta[i];
        d2 += diff * diff;
      }
      dist[a][b] = dist[b][a] = d2;
    }
  }
  // n - f - 2 neighbours, at least one when there are peers.
  const std::size_t neighbours =
      n > byzantine_bound + 2 ? n - byzantine_bound - 2 : std::min<std::size_t>(1, n - 1);
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<double> row;
  for (std::size_t a = 0; a < n; ++a) {
    row.clear();
    for (std::size_t b = 0; b < n; ++b) {
      if (b != a) row.push_back(dist[a][b]);
    }
    std::sort(row.begin(), row.end());
    double s = 0.0;
    for (std::size_t j = 0; j < neighbours && j < row.size(); ++j) s += row[j];
    if (s < best_score) {
      best_score = s;
      best = a;
    }
  }
  ModelParams out = global;
  for (std::size_t i = 0; i < global.size(); ++i) {
    out.values[i] += updates[best].delta[i];
  }
  return {out, best};
}

}  // namespace nexus::aggregation
