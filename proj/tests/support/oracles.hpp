#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace nexus::oracle {

/// Mean score gap between honest (success p_h) and Byzantine (p_b) peers
/// after T discounted Beta updates from the uniform prior, by simulation.
inline double monte_carlo_gap(double p_h, double p_b, double lambda, int T,
                              int per_role, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto mean_score = [&](double p) {
    double total = 0.0;
    for (int n = 0; n < per_role; ++n) {
      double a = 1.0, b = 1.0;
      for (int t = 0; t < T; ++t) {
        const double o = u(gen) < p ? 1.0 : 0.0;
        a = lambda * a + o;
        b = lambda * b + (1.0 - o);
      }
      total += a / (a + b);
    }
    return total / per_role;
  };
  const double h = mean_score(p_h);
  return h - mean_score(p_b);
}

/// Majority error for m evaluators under the common-bit model, by
/// enumeration of the mixture: with probability rho all copy one bit.
inline double majority_error_enumerated(double eta, double rho, int m) {
  double independent = 0.0;
  for (int k = m / 2 + 1; k <= m; ++k) {
    double c = 1.0;
    for (int i = 0; i < k; ++i) c = c * (m - i) / (i + 1);
    independent += c * std::pow(eta, k) * std::pow(1.0 - eta, m - k);
  }
  return rho * eta + (1.0 - rho) * independent;
}

/// log E_{z~N(0,s^2)}[((1-q) + q exp((2z-1)/(2 s^2)))^alpha] by trapezoid
/// integration on a wide grid, done in log space.
inline double subsampled_gaussian_rdp_numeric(double q, double sigma, int alpha) {
  const double s2 = sigma * sigma;
  const double lo = -40.0 * sigma - 10.0, hi = 40.0 * sigma + 10.0;
  const int n = 400000;
  const double h = (hi - lo) / n;
  std::vector<double> logs(n + 1);
  double peak = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const double z = lo + h * i;
    const double log_ratio = (2.0 * z - 1.0) / (2.0 * s2);
    // log((1-q) + q e^r) computed stably.
    const double a = std::log1p(-q), b = std::log(q) + log_ratio;
    const double mx = std::max(a, b);
    const double log_mix = mx + std::log1p(std::exp(std::min(a, b) - mx));
    const double log_density = -z * z / (2.0 * s2) - 0.5 * std::log(2.0 * M_PI * s2);
    logs[i] = alpha * log_mix + log_density;
    peak = std::max(peak, logs[i]);
  }
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    sum += w * std::exp(logs[i] - peak);
  }
  return (peak + std::log(sum * h)) / (alpha - 1.0);
}

/// Epsilon from the numeric RDP curve with the standard conversion
/// eps = min_a steps*rdp(a) + log(1/delta)/(a-1).
inline double rdp_epsilon_numeric(double q, double sigma, std::uint64_t steps,
                                  double delta, int max_order = 256) {
  double best = std::numeric_limits<double>::infinity();
  for (int a = 2; a <= max_order; ++a) {
    const double rdp = subsampled_gaussian_rdp_numeric(q, sigma, a);
    const double eps = static_cast<double>(steps) * rdp + std::log(1.0 / delta) / (a - 1.0);
    best = std::min(best, eps);
    if (eps > 4.0 * best && a > 16) break;
  }
  return best;
}

/// Poisson pmf.
inline double poisson_pmf(double mean, int k) {
  return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

}  // namespace nexus::oracle
