#include "nexus/presets.hpp"

#include <cmath>
#include <stdexcept>

namespace nexus::sim {

namespace {

std::size_t scaled(std::size_t n, double scale) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * scale)));
}

ScenarioConfig desk(std::string_view id, double scale) {
  ScenarioConfig c;
  c.name = std::string(id);
  c.nodes.gpu_pool = scaled(20, scale);
  c.nodes.cpu_pool = scaled(80, scale);
  c.nodes.k_train = scaled(10, scale);
  return c;
}

std::string pct(double f) { return std::to_string(static_cast<int>(std::lround(f * 100))); }

}  // namespace

std::vector<std::string> experiment_ids() {
  return {"exp1", "exp2", "exp3", "exp4", "exp5", "exp6", "exp7", "exp8", "exp9", "exp10"};
}

ScenarioConfig experiment_preset(std::string_view id, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
  ScenarioConfig c = desk(id, scale);
  using adversary::AttackKind;
  if (id == "exp1" || id == "exp2") {
    // Random selection keeps the aggregation rule the only difference.
    c.rounds = 100;
    c.selection.strategy = SelectionStrategy::random;
    c.attack.kind = AttackKind::gradient_flip;
    c.attack.byzantine_fraction = 0.2;
  } else if (id == "exp3") {
    c.rounds = 100;
    c.selection.strategy = SelectionStrategy::random;
  } else if (id == "exp4") {
    c.rounds = 100;
    c.attack.kind = AttackKind::unreliable;
    c.attack.byzantine_fraction = 0.2;
    c.attack.failure_prob = 0.4;
  } else if (id == "exp5") {
    c.rounds = 30;
    c.consensus.op_class = consensus::OpClass::model_checkpoint;
    c.consensus.proposals = ProposalMode::contested;
    c.attack.kind = AttackKind::sybil;
    c.attack.sybil_fraction = 0.3;
    c.bootstrap.age_cycles = c.reputation.cooldown_cycles;
    c.bootstrap.interactions = 40;
  } else if (id == "exp6") {
    c.rounds = 100;
    c.selection.strategy = SelectionStrategy::random;
  } else if (id == "exp7") {
    c.rounds = 3;
    c.nodes.gpu_pool = scaled(200, scale);
    c.nodes.cpu_pool = scaled(824, scale);
    c.nodes.k_train = scaled(10, scale);
    c.network.lookups_per_round = 100;
  } else if (id == "exp8") {
    c.rounds = 20;
  } else if (id == "exp9") {
    c.rounds = 60;
    c.churn.rate_per_minute = 0.1;
  } else if (id == "exp10") {
    c.rounds = 100;
    c.nodes.gpu_pool = scaled(100, scale);
    c.nodes.cpu_pool = 0;
    c.nodes.k_train = scaled(50, scale);
    c.selection.strategy = SelectionStrategy::random;
    c.attack.kind = AttackKind::unreliable;
    c.attack.byzantine_fraction = 0.2;
    c.attack.failure_prob = 0.4;
  } else {
    throw std::invalid_argument("unknown experiment: " + std::string(id));
  }
  return c;
}

Experiment experiment_arms(std::string_view id, double scale) {
  Experiment e;
  e.id = std::string(id);
  const ScenarioConfig base = experiment_preset(id, scale);
  auto arm = [&](std::string label, auto&& edit) {
    ScenarioConfig c = base;
    c.name = e.id + "/" + label;
    edit(c);
    e.arms.push_back({std::move(label), std::move(c)});
  };
  using adversary::AttackKind;
  const AggregationRule rules[] = {AggregationRule::rep_fedavg, AggregationRule::fedavg,
                                   AggregationRule::trimmed_mean, AggregationRule::median,
                                   AggregationRule::krum};
  if (id == "exp1") {
    e.title = "convergence and robustness under 20% gradient flip";
    for (auto rule : rules) {
      arm(std::string(to_string(rule)), [&](ScenarioConfig& c) { c.aggregation.rule = rule; });
    }
    arm("honest_only_fedavg", [](ScenarioConfig& c) {
      c.aggregation.rule = AggregationRule::fedavg;
      c.attack.exclude_attackers = true;
    });
    for (auto rule : {AggregationRule::rep_fedavg, AggregationRule::fedavg}) {
      arm("benign_" + std::string(to_string(rule)), [&](ScenarioConfig& c) {
        c.aggregation.rule = rule;
        c.attack.kind = AttackKind::none;
        c.attack.byzantine_fraction = 0.0;
      });
    }
  } else if (id == "exp2") {
    e.title = "attack types at 20% Byzantine";
    for (auto kind : {AttackKind::gradient_flip, AttackKind::alie, AttackKind::backdoor}) {
      for (auto rule : rules) {
        arm(std::string(adversary::to_string(kind)) + "_" + std::string(to_string(rule)),
            [&](ScenarioConfig& c) {
              c.attack.kind = kind;
              c.aggregation.rule = rule;
            });
      }
    }
  } else if (id == "exp3") {
    e.title = "DP noise multiplier sweep";
    for (double sigma : {0.0, 0.5, 1.1, 2.0}) {
      char label[32];
      std::snprintf(label, sizeof label, "sigma_%.1f", sigma);
      arm(label, [&](ScenarioConfig& c) { c.dp.noise_multiplier = sigma; });
    }
  } else if (id == "exp4") {
    e.title = "selection strategies with 20% unreliable trainers";
    for (auto s : {SelectionStrategy::random, SelectionStrategy::capability,
                   SelectionStrategy::load_balanced, SelectionStrategy::reputation}) {
      arm(std::string(to_string(s)), [&](ScenarioConfig& c) { c.selection.strategy = s; });
    }
  } else if (id == "exp5") {
    e.title = "validation correctness under open-admission Sybils";
    for (double f : {0.0, 0.1, 0.2, 0.3}) {
      for (auto w : {ConsensusWeighting::reputation, ConsensusWeighting::puzzle,
                     ConsensusWeighting::stake, ConsensusWeighting::equal}) {
        arm(std::string(to_string(w)) + "_sybil" + pct(f), [&](ScenarioConfig& c) {
          c.consensus.weighting = w;
          c.attack.sybil_fraction = f;
        });
      }
    }
  } else if (id == "exp6") {
    e.title = "non-IID sensitivity";
    for (double a : {0.1, 0.3, 0.5, 1.0}) {
      for (auto rule : {AggregationRule::rep_fedavg, AggregationRule::fedavg}) {
        char label[48];
        std::snprintf(label, sizeof label, "%s_alpha_%.1f", std::string(to_string(rule)).c_str(), a);
        arm(label, [&](ScenarioConfig& c) {
          c.data.dirichlet_alpha = a;
          c.aggregation.rule = rule;
        });
      }
    }
  } else if (id == "exp7") {
    e.title = "routing hops and gossip spread versus network size";
    for (std::size_t n : {64, 128, 256, 512, 1024}) {
      arm("n" + std::to_string(n), [&](ScenarioConfig& c) {
        const std::size_t total = scaled(n, scale);
        c.nodes.gpu_pool = std::max<std::size_t>(c.nodes.k_train, total / 5);
        c.nodes.cpu_pool = total - c.nodes.gpu_pool;
      });
    }
  } else if (id == "exp8") {
    e.title = "intra-cloud versus cross-cloud";
    arm("intra_cloud", [](ScenarioConfig& c) { c.nodes.regions = 1; });
    arm("cross_cloud", [](ScenarioConfig& c) { c.nodes.regions = network::kRegions; });
  } else if (id == "exp9") {
    e.title = "churn resilience";
    for (auto s : {SelectionStrategy::reputation, SelectionStrategy::random}) {
      arm(std::string(to_string(s)), [&](ScenarioConfig& c) { c.selection.strategy = s; });
    }
    arm("reputation_stable", [](ScenarioConfig& c) { c.churn.rate_per_minute = 0.0; });
  } else if (id == "exp10") {
    e.title = "reputation dynamics";
    arm("rep_fedavg", [](ScenarioConfig&) {});
  }
  return e;
}

}  // namespace nexus::sim
