#include "nexus/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <set>

namespace nexus::sim {

RoleQuartiles quartiles(std::vector<double> values) {
  RoleQuartiles q;
  q.count = values.size();
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  q.mean = sum / static_cast<double>(values.size());
  // Linear interpolation between order statistics.
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  return q;
}

double RunMetrics::success_rate() const {
  if (rounds.empty()) return 0.0;
  double ok = 0.0;
  for (const auto& r : rounds) ok += r.result.success ? 1.0 : 0.0;
  return ok / static_cast<double>(rounds.size());
}

double RunMetrics::final_test_accuracy() const {
  return rounds.empty() ? 0.0 : rounds.back().result.test_accuracy;
}

double RunMetrics::final_validation_accuracy() const {
  return rounds.empty() ? 0.0 : rounds.back().result.val_after;
}

double RunMetrics::worst_epsilon() const {
  return rounds.empty() ? 0.0 : rounds.back().epsilon;
}

double RunMetrics::p95_round_time() const {
  std::vector<double> t;
  for (const auto& r : rounds) {
    if (!r.result.decisions.empty()) t.push_back(r.result.round_time_s);
  }
  if (t.empty()) return 0.0;
  std::sort(t.begin(), t.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(t.size())));
  return t[std::max<std::size_t>(rank, 1) - 1];
}

double RunMetrics::mean_consensus_latency() const {
  if (consensus.empty()) return 0.0;
  double s = 0.0;
  for (const auto& c : consensus) s += c.latency_s;
  return s / static_cast<double>(consensus.size());
}

RunMetrics run_scenario(const ScenarioConfig& config) {
  SimState state = build_state(config);
  RunMetrics m;
  m.config = state.config;
  m.timeout_s = state.timeout_s;
  for (std::uint64_t t = 0; t < config.rounds; ++t) {
    RoundMetrics rm;
    rm.result = run_round(state, t);
    rm.epsilon = state.privacy.worst_case_epsilon(config.dp.noise_multiplier, config.dp.delta);
    std::vector<double> by_role[3];
    std::set<NodeIndex> selected(rm.result.selected.begin(), rm.result.selected.end());
    for (NodeIndex i = 0; i < state.nodes.size(); ++i) {
      const auto& node = state.nodes[i];
      const double sc = reputation::score(node.rep);
      m.reputation.push_back({t, i, node.role, sc, reputation::uncertainty(node.rep),
                              node.rep.alpha, node.rep.beta, state.members[i].online,
                              selected.contains(i)});
      // Role statistics cover the training pool plus any Sybils.
      if (node.trainer || node.role == Role::sybil) {
        by_role[static_cast<int>(node.role)].push_back(sc);
      }
    }
    rm.honest = quartiles(by_role[0]);
    rm.byzantine = quartiles(by_role[1]);
    rm.sybil = quartiles(by_role[2]);
    for (const auto& d : rm.result.decisions) m.consensus.push_back(d);
    m.network.push_back(rm.result.network);
    m.rounds.push_back(std::move(rm));
  }
  m.safety_violation = consensus::check_safety(state.trace).violation;
  return m;
}

std::optional<double> validation_correctness(const RunMetrics& run) {
  if (run.consensus.empty()) return std::nullopt;
  double ok = 0.0;
  for (const auto& c : run.consensus) ok += c.correct ? 1.0 : 0.0;
  return ok / static_cast<double>(run.consensus.size());
}

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv("NEXUS_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  std::uint64_t value = 0;
  const char* end = raw + std::strlen(raw);
  auto [ptr, ec] = std::from_chars(raw, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

}  // namespace nexus::sim
