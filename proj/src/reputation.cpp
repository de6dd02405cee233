#include "nexus/reputation.hpp"

#include <cmath>
#include <stdexcept>

namespace nexus::reputation {

void ReputationParams::validate() const {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must lie in (0, 1]");
  }
  if (!(eligibility_floor >= 0.0 && eligibility_floor <= 1.0)) {
    throw std::invalid_argument("eligibility_floor must lie in [0, 1]");
  }
  if (!(r0 > 0.0 && r0 < 1.0)) {
    throw std::invalid_argument("r0 must lie in (0, 1)");
  }
  if (!(uncertainty_gate > 0.0)) {
    throw std::invalid_argument("uncertainty_gate must be positive");
  }
  if (!(collusion_p > 0.0 && collusion_p < 1.0)) {
    throw std::invalid_argument("collusion_p must lie in (0, 1)");
  }
}

BetaReputation fresh(std::string domain) {
  BetaReputation rep;
  rep.domain = std::move(domain);
  return rep;
}

BetaReputation update(const BetaReputation& rep, bool outcome,
                      const ReputationParams& params) {
  BetaReputation next = rep;
  const double o = outcome ? 1.0 : 0.0;
  next.alpha = params.lambda * rep.alpha + o;
  next.beta = params.lambda * rep.beta + (1.0 - o);
  next.interactions = rep.interactions + 1;
  return next;
}

double score(const BetaReputation& rep) {
  return rep.alpha / (rep.alpha + rep.beta);
}

double uncertainty(const BetaReputation& rep) {
  return 1.0 / (rep.alpha + rep.beta);
}

double expected_gap(const SeparationParams& sp) {
  if (sp.rounds == 0) return 0.0;
  double discounted = 0.0;
  double power = 1.0;
  for (std::uint32_t s = 0; s < sp.rounds; ++s) {
    discounted += power;
    power *= sp.lambda;
  }
  // power == lambda^T here
  return (sp.p_h_eff - sp.p_b_eff) * discounted / (2.0 * power + discounted);
}

double effective_error(double eta, double rho, std::uint32_t m) {
  if (m == 0) throw std::invalid_argument("m must be at least 1");
  const double md = static_cast<double>(m);
  return eta + rho * eta * (1.0 - eta) * (md - 1.0) / md;
}

bool is_gated(const BetaReputation& rep, std::uint64_t age_cycles,
              const ReputationParams& params, Sensitivity sensitivity) {
  if (sensitivity == Sensitivity::low) return false;
  return age_cycles < params.cooldown_cycles ||
         uncertainty(rep) > params.uncertainty_gate;
}

const BetaReputation& DomainReputation::get(const std::string& domain) const {
  auto it = by_domain_.find(domain);
  if (it == by_domain_.end()) {
    throw std::out_of_range("no reputation for domain " + domain);
  }
  return it->second;
}

BetaReputation& DomainReputation::at(const std::string& domain) {
  auto [it, inserted] = by_domain_.try_emplace(domain, fresh(domain));
  return it->second;
}

double DomainReputation::score_for(const std::string& domain, double r0) const {
  if (auto it = by_domain_.find(domain); it != by_domain_.end()) {
    return score(it->second);
  }
  if (by_domain_.empty()) return r0;
  double sum = 0.0;
  for (const auto& [name, rep] : by_domain_) sum += score(rep);
  return sum / static_cast<double>(by_domain_.size());
}

double chi2_sf_1dof(double statistic) {
  if (!(statistic > 0.0)) return 1.0;
  return std::erfc(std::sqrt(statistic / 2.0));
}

std::vector<CollusionFinding> collusion_scan(const VoteMatrix& votes,
                                             const ReputationParams& params) {
  for (const auto& row : votes) {
    for (int v : row) {
      if (v != 0 && v != 1) {
        throw std::invalid_argument("vote matrix entries must be 0 or 1");
      }
    }
  }
  std::vector<CollusionFinding> flagged;
  for (const auto& row : votes) {
    if (row.size() < kMinCollusionVotes) return flagged;
  }
  for (std::size_t i = 0; i < votes.size(); ++i) {
    for (std::size_t j = i + 1; j < votes.size(); ++j) {
      const std::size_t n = std::min(votes[i].size(), votes[j].size());
      double table[2][2] = {{0, 0}, {0, 0}};
      for (std::size_t k = 0; k < n; ++k) table[votes[i][k]][votes[j][k]] += 1;
      const double total = static_cast<double>(n);
      const double row0 = table[0][0] + table[0][1];
      const double row1 = table[1][0] + table[1][1];
      const double col0 = table[0][0] + table[1][0];
      const double col1 = table[0][1] + table[1][1];
      // A constant voter carries no information about dependence.
      if (row0 == 0 || row1 == 0 || col0 == 0 || col1 == 0) continue;
      const double diff = table[0][0] * table[1][1] - table[0][1] * table[1][0];
      const double stat = total * diff * diff / (row0 * row1 * col0 * col1);
      const double p = chi2_sf_1dof(stat);
      // Only positive association counts as colluding.
      if (p < params.collusion_p && diff > 0) {
        flagged.push_back({i, j, stat, p});
      }
    }
  }
  return flagged;
}

void apply_collusion_penalties(std::vector<BetaReputation>& reps,
                               const std::vector<CollusionFinding>& findings,
                               const ReputationParams& params) {
  std::set<std::size_t> penalized;
  for (const auto& f : findings) {
    penalized.insert(f.first);
    penalized.insert(f.second);
  }
  for (std::size_t node : penalized) {
    if (node < reps.size()) reps[node] = update(reps[node], false, params);
  }
}

}  // namespace nexus::reputation
