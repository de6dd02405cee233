#include "nexus/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace nexus::learner {

namespace {

constexpr std::uint32_t kMinOrder = 2;
constexpr std::uint32_t kMaxOrder = 256;

double log_add(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void check_args(double q, double sigma, double delta) {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in (0, 1]");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
}

}  // namespace

double subsampled_gaussian_rdp(double q, double sigma, std::uint32_t alpha) {
  if (alpha < 2) throw std::invalid_argument("order must be >= 2");
  if (sigma == 0.0) return INFINITY;
  const double a = static_cast<double>(alpha);
  if (q == 1.0) return a / (2.0 * sigma * sigma);
  // log A_alpha = logsumexp_k [log C(a,k) + k log q + (a-k) log(1-q)
  //                            + (k^2 - k) / (2 sigma^2)]
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  double log_a = -INFINITY;
  for (std::uint32_t k = 0; k <= alpha; ++k) {
    const double kd = static_cast<double>(k);
    const double log_binom =
        std::lgamma(a + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(a - kd + 1.0);
    const double term = log_binom + kd * log_q + (a - kd) * log_1mq +
                        (kd * kd - kd) / (2.0 * sigma * sigma);
    log_a = log_add(log_a, term);
  }
  return log_a / (a - 1.0);
}

std::vector<double> rdp_curve(double q, double sigma) {
  std::vector<double> curve;
  curve.reserve(kMaxOrder - kMinOrder + 1);
  for (std::uint32_t order = kMinOrder; order <= kMaxOrder; ++order) {
    curve.push_back(subsampled_gaussian_rdp(q, sigma, order));
  }
  return curve;
}

namespace {

std::pair<double, std::uint32_t> minimize_over_curve(
    const std::vector<double>& curve, std::uint64_t steps, double delta) {
  double best = INFINITY;
  std::uint32_t best_order = 0;
  const double log_inv_delta = std::log(1.0 / delta);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double order = static_cast<double>(i + kMinOrder);
    const double eps =
        static_cast<double>(steps) * curve[i] + log_inv_delta / (order - 1.0);
    if (eps < best) {
      best = eps;
      best_order = static_cast<std::uint32_t>(i + kMinOrder);
    }
  }
  return {best, best_order};
}

std::pair<double, std::uint32_t> minimize_epsilon(double q, double sigma,
                                                  std::uint64_t steps,
                                                  double delta) {
  return minimize_over_curve(rdp_curve(q, sigma), steps, delta);
}

}  // namespace

double epsilon_from_curve(const std::vector<double>& curve,
                          std::uint64_t steps, double delta) {
  if (steps == 0) return 0.0;
  return minimize_over_curve(curve, steps, delta).first;
}

double rdp_epsilon(double q, double sigma, std::uint64_t steps, double delta) {
  check_args(q, sigma, delta);
  if (steps == 0) return 0.0;
  if (sigma == 0.0) return kInfiniteEpsilon;
  return minimize_epsilon(q, sigma, steps, delta).first;
}

std::uint32_t rdp_best_order(double q, double sigma, std::uint64_t steps,
                             double delta) {
  check_args(q, sigma, delta);
  if (steps == 0 || sigma == 0.0) return 0;
  return minimize_epsilon(q, sigma, steps, delta).second;
}

void PrivacyLedger::record(std::uint32_t node, std::uint64_t steps,
                           double sample_rate) {
  Entry& e = entries_[node];
  e.steps += steps;
  e.participations += 1;
  e.sample_rate = std::max(e.sample_rate, sample_rate);
}

const PrivacyLedger::Entry* PrivacyLedger::find(std::uint32_t node) const {
  auto it = entries_.find(node);
  return it == entries_.end() ? nullptr : &it->second;
}

std::uint32_t PrivacyLedger::max_participation() const {
  std::uint32_t best = 0;
  for (const auto& [node, e] : entries_) best = std::max(best, e.participations);
  return best;
}

const std::vector<double>& PrivacyLedger::curve(double q, double sigma) const {
  auto key = std::make_pair(q, sigma);
  auto it = curves_.find(key);
  if (it == curves_.end()) it = curves_.emplace(key, rdp_curve(q, sigma)).first;
  return it->second;
}

double PrivacyLedger::epsilon(std::uint32_t node, double sigma,
                              double delta) const {
  const Entry* e = find(node);
  if (e == nullptr || e->steps == 0) return 0.0;
  if (sigma == 0.0) return kInfiniteEpsilon;
  return epsilon_from_curve(curve(e->sample_rate, sigma), e->steps, delta);
}

double PrivacyLedger::worst_case_epsilon(double sigma, double delta) const {
  double worst = 0.0;
  for (const auto& [node, e] : entries_) {
    worst = std::max(worst, epsilon(node, sigma, delta));
  }
  return worst;
}

}  // namespace nexus::learner
