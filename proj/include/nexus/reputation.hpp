#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace nexus::reputation {

/// Discounted Beta evidence for one peer in one task domain.
struct BetaReputation {
  double alpha = 1.0;
  double beta = 1.0;
  std::uint64_t interactions = 0;
  std::string domain = "vision";

  bool operator==(const BetaReputation&) const = default;
};

struct ReputationParams {
  double lambda = 0.95;
  double r0 = 0.5;
  std::uint32_t cooldown_cycles = 100;
  double uncertainty_gate = 0.1;
  double eligibility_floor = 0.3;
  double collusion_p = 0.01;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct SeparationParams {
  double p_h_eff = 0.0;
  double p_b_eff = 0.0;
  double lambda = 0.95;
  std::uint32_t rounds = 0;
};

/// Operation classes as seen by the anti-whitewashing gate.
enum class Sensitivity { low, high };

/// Fresh reputation at the uniform prior.
BetaReputation fresh(std::string domain = "vision");

/// alpha' = lambda*alpha + o, beta' = lambda*beta + (1-o).
BetaReputation update(const BetaReputation& rep, bool outcome,
                      const ReputationParams& params);

double score(const BetaReputation& rep);
double uncertainty(const BetaReputation& rep);

/// Closed-form expected honest/Byzantine gap after T discounted updates.
double expected_gap(const SeparationParams& sp);

/// Majority-vote error under equicorrelated evaluator noise (upper bound,
/// used as the operative value).
double effective_error(double eta, double rho, std::uint32_t m);

bool is_gated(const BetaReputation& rep, std::uint64_t age_cycles,
              const ReputationParams& params, Sensitivity sensitivity);

/// Per-domain reputation table for one peer.
class DomainReputation {
 public:
  const BetaReputation& get(const std::string& domain) const;
  BetaReputation& at(const std::string& domain);
  /// Score for `domain`; falls back to the mean over tracked domains when the
  /// domain has no evidence, and to r0 when nothing is tracked.
  double score_for(const std::string& domain, double r0 = 0.5) const;
  const std::map<std::string, BetaReputation>& domains() const {
    return by_domain_;
  }
  bool contains(const std::string& domain) const {
    return by_domain_.contains(domain);
  }

 private:
  std::map<std::string, BetaReputation> by_domain_;
};

/// Binary vote history, one row per node, aligned by decision index.
/// Entries must be 0 or 1.
using VoteMatrix = std::vector<std::vector<int>>;

struct CollusionFinding {
  std::size_t first = 0;
  std::size_t second = 0;
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Minimum votes per node before the scan has any power.
inline constexpr std::size_t kMinCollusionVotes = 20;

/// Pairwise 2x2 chi-square independence test (1 dof, no continuity
/// correction). Returns the flagged pairs with p < params.collusion_p.
/// Throws std::invalid_argument on non-binary entries.
std::vector<CollusionFinding> collusion_scan(const VoteMatrix& votes,
                                             const ReputationParams& params);

/// Applies one negative update to every node appearing in `findings`.
/// Each node is penalized once per scan.
void apply_collusion_penalties(std::vector<BetaReputation>& reps,
                               const std::vector<CollusionFinding>& findings,
                               const ReputationParams& params);

/// Upper tail of the chi-square distribution with one degree of freedom.
double chi2_sf_1dof(double statistic);

}  // namespace nexus::reputation
