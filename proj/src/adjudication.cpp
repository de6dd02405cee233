#include "nexus/adjudication.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace nexus::adjudication {

void NoiseModel::validate() const {
  if (!(eta >= 0.0 && eta <= 0.5)) {
    throw std::invalid_argument("eta must lie in [0, 0.5]");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("rho must lie in [0, 1]");
  }
}

std::vector<std::uint32_t> assign_shards(std::uint64_t round,
                                         std::uint64_t node, std::uint32_t m,
                                         std::uint32_t num_shards) {
  if (num_shards < m) {
    throw std::invalid_argument("num_shards must be at least m");
  }
  std::vector<std::uint32_t> shards;
  std::vector<bool> used(num_shards, false);
  shards.reserve(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    const std::array<std::uint64_t, 3> key{round, node, i};
    auto idx = static_cast<std::uint32_t>(public_hash(key) % num_shards);
    while (used[idx]) idx = (idx + 1) % num_shards;
    used[idx] = true;
    shards.push_back(idx);
  }
  return shards;
}

std::vector<std::uint32_t> assign_shards(const BenchmarkShardSchedule& s) {
  return assign_shards(s.round, s.node, s.m, s.num_shards);
}

std::vector<NodeIndex> select_evaluators(std::span<const Candidate> peers,
                                         const EvaluatorSelection& request) {
  const std::set<NodeIndex> previous(request.previous.begin(),
                                     request.previous.end());
  // region -> (fresh, repeated) candidates, each in hashed order
  std::map<std::uint32_t, std::pair<std::vector<const Candidate*>,
                                    std::vector<const Candidate*>>>
      by_region;
  std::size_t available = 0;
  for (const auto& c : peers) {
    if (c.node == request.target) continue;
    auto& bucket = by_region[c.region];
    (previous.contains(c.node) ? bucket.second : bucket.first).push_back(&c);
    ++available;
  }
  if (available < request.m) throw InsufficientEvaluators();

  auto rank = [&](const Candidate* c) {
    const std::array<std::uint64_t, 4> key{request.seed, request.round,
                                           request.target, c->id_hash};
    return public_hash(key);
  };
  std::vector<std::pair<std::uint64_t, std::uint32_t>> regions;
  for (auto& [region, lists] : by_region) {
    for (auto* list : {&lists.first, &lists.second}) {
      std::sort(list->begin(), list->end(),
                [&](const Candidate* a, const Candidate* b) {
                  const auto ra = rank(a), rb = rank(b);
                  return ra != rb ? ra < rb : a->node < b->node;
                });
    }
    const std::array<std::uint64_t, 3> key{request.seed, request.round, region};
    regions.emplace_back(public_hash(key), region);
  }
  std::sort(regions.begin(), regions.end());

  std::vector<NodeIndex> chosen;
  // Two passes: first only candidates not used last time, then repeats.
  for (int pass = 0; pass < 2 && chosen.size() < request.m; ++pass) {
    std::map<std::uint32_t, std::size_t> cursor;
    bool progress = true;
    while (chosen.size() < request.m && progress) {
      progress = false;
      for (const auto& [h, region] : regions) {
        if (chosen.size() >= request.m) break;
        auto& lists = by_region[region];
        auto& list = pass == 0 ? lists.first : lists.second;
        std::size_t& pos = cursor[region];
        if (pos < list.size()) {
          chosen.push_back(list[pos++]->node);
          progress = true;
        }
      }
    }
  }
  return chosen;
}

std::vector<bool> draw_errors(const NoiseModel& noise, std::size_t m, Rng& rng) {
  std::vector<bool> errors(m);
  if (rng.bernoulli(noise.rho)) {
    const bool shared = rng.bernoulli(noise.eta);
    std::fill(errors.begin(), errors.end(), shared);
  } else {
    for (std::size_t i = 0; i < m; ++i) errors[i] = rng.bernoulli(noise.eta);
  }
  return errors;
}

std::vector<bool> simulate_votes(bool true_quality, const NoiseModel& noise,
                                 std::uint32_t m, Rng& rng) {
  noise.validate();
  auto errors = draw_errors(noise, m, rng);
  std::vector<bool> verdicts(m);
  for (std::uint32_t i = 0; i < m; ++i) verdicts[i] = true_quality != errors[i];
  return verdicts;
}

bool adjudicate(std::span<const bool> verdicts) {
  if (verdicts.empty() || verdicts.size() % 2 == 0) {
    throw std::invalid_argument("adjudication needs an odd number of verdicts");
  }
  const auto yes = std::count(verdicts.begin(), verdicts.end(), true);
  return 2 * static_cast<std::size_t>(yes) > verdicts.size();
}

bool adjudicate(const std::vector<bool>& verdicts) {
  if (verdicts.empty() || verdicts.size() % 2 == 0) {
    throw std::invalid_argument("adjudication needs an odd number of verdicts");
  }
  const auto yes = std::count(verdicts.begin(), verdicts.end(), true);
  return 2 * static_cast<std::size_t>(yes) > verdicts.size();
}

bool judge_update(const learner::ModelParams& global,
                  std::span<const double> delta,
                  const learner::ToyDataset& shard) {
  if (delta.size() != global.size()) {
    throw std::invalid_argument("delta dimension does not match model");
  }
  if (shard.size() == 0) throw std::invalid_argument("empty shard");
  learner::ModelParams candidate = global;
  for (std::size_t i = 0; i < delta.size(); ++i) candidate.values[i] += delta[i];
  return learner::evaluate(candidate, shard) >= learner::evaluate(global, shard);
}

double pairwise_agreement(double eta, double rho) {
  // Shared-bit branch always agrees; independent branch agrees when both
  // bits match.
  return rho + (1.0 - rho) * (eta * eta + (1.0 - eta) * (1.0 - eta));
}

Agreement measure_agreement(std::span<const VoteRecord> log, double eta) {
  std::map<std::uint64_t, std::vector<const VoteRecord*>> by_adjudication;
  std::set<NodeIndex> evaluators;
  for (const auto& v : log) {
    by_adjudication[v.adjudication].push_back(&v);
    evaluators.insert(v.evaluator);
  }
  if (evaluators.size() < 2) {
    throw InsufficientData("need at least two evaluators");
  }
  std::size_t pairs = 0, agree = 0;
  std::size_t shared = 0;
  for (const auto& [id, votes] : by_adjudication) {
    if (votes.size() >= 2) ++shared;
    for (std::size_t i = 0; i < votes.size(); ++i) {
      for (std::size_t j = i + 1; j < votes.size(); ++j) {
        ++pairs;
        if (votes[i]->verdict == votes[j]->verdict) ++agree;
      }
    }
  }
  if (shared < 20) {
    throw InsufficientData("need at least 20 co-adjudications");
  }
  Agreement out;
  out.pairs = pairs;
  out.agreement = static_cast<double>(agree) / static_cast<double>(pairs);
  // agreement(eta, rho) is increasing in rho for eta in (0, 0.5); bisect.
  const double floor = pairwise_agreement(eta, 0.0);
  if (out.agreement <= floor) {
    out.implied_rho = 0.0;
  } else if (out.agreement >= 1.0) {
    out.implied_rho = 1.0;
  } else {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (pairwise_agreement(eta, mid) < out.agreement ? lo : hi) = mid;
    }
    out.implied_rho = 0.5 * (lo + hi);
  }
  return out;
}

double binomial_majority_error(double eta, std::uint32_t m) {
  double total = 0.0;
  for (std::uint32_t k = m / 2 + 1; k <= m; ++k) {
    const double log_binom = std::lgamma(m + 1.0) - std::lgamma(k + 1.0) -
                             std::lgamma(m - k + 1.0);
    total += std::exp(log_binom) * std::pow(eta, k) * std::pow(1.0 - eta, m - k);
  }
  return total;
}

double mixture_majority_error(double eta, double rho, std::uint32_t m) {
  return rho * eta + (1.0 - rho) * binomial_majority_error(eta, m);
}

}  // namespace nexus::adjudication
