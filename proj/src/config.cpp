#include "nexus/config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace nexus::sim {

using nlohmann::json;

namespace {

template <typename E>
using NameTable = std::vector<std::pair<E, std::string_view>>;

const NameTable<SelectionStrategy> kStrategies = {
    {SelectionStrategy::random, "random"},
    {SelectionStrategy::capability, "capability"},
    {SelectionStrategy::load_balanced, "load_balanced"},
    {SelectionStrategy::reputation, "reputation"}};
const NameTable<AggregationRule> kRules = {
    {AggregationRule::rep_fedavg, "rep_fedavg"},
    {AggregationRule::fedavg, "fedavg"},
    {AggregationRule::trimmed_mean, "trimmed_mean"},
    {AggregationRule::median, "median"},
    {AggregationRule::krum, "krum"}};
const NameTable<ConsensusWeighting> kWeightings = {
    {ConsensusWeighting::reputation, "reputation"},
    {ConsensusWeighting::equal, "equal"},
    {ConsensusWeighting::stake, "stake"},
    {ConsensusWeighting::puzzle, "puzzle"}};
const NameTable<ProposalMode> kModes = {{ProposalMode::single, "single"},
                                        {ProposalMode::contested, "contested"}};
const NameTable<consensus::OpClass> kOpClasses = {
    {consensus::OpClass::fl_round_result, "fl_round_result"},
    {consensus::OpClass::model_checkpoint, "model_checkpoint"},
    {consensus::OpClass::architecture_change, "architecture_change"},
    {consensus::OpClass::protocol_update, "protocol_update"}};
const NameTable<adversary::AttackKind> kAttacks = {
    {adversary::AttackKind::none, "none"},
    {adversary::AttackKind::gradient_flip, "gradient_flip"},
    {adversary::AttackKind::alie, "alie"},
    {adversary::AttackKind::backdoor, "backdoor"},
    {adversary::AttackKind::sybil, "sybil"},
    {adversary::AttackKind::unreliable, "unreliable"},
    {adversary::AttackKind::farming, "farming"}};

template <typename E>
std::string_view name_of(const NameTable<E>& table, E value) {
  for (const auto& [v, n] : table) {
    if (v == value) return n;
  }
  return "unknown";
}

std::string join_path(const std::string& base, std::string_view key) {
  return base.empty() ? std::string(key) : base + "." + std::string(key);
}

class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a section");
  }

  template <typename T>
  void value(std::string_view key, T& out) {
    const json* j = find(key);
    if (j == nullptr) return;
    const std::string p = join_path(path_, key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!j->is_boolean()) throw ConfigError(p, "expected true or false");
      out = j->get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j->is_string()) throw ConfigError(p, "expected a string");
      out = j->get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j->is_number()) throw ConfigError(p, "expected a number");
      out = j->get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!j->is_number_integer() || (j->is_number_integer() && !j->is_number_unsigned() && j->get<long long>() < 0)) {
        throw ConfigError(p, "expected a nonnegative integer");
      }
      const auto v = j->get<std::uint64_t>();
      if (v > std::numeric_limits<T>::max()) throw ConfigError(p, "integer out of range");
      out = static_cast<T>(v);
    } else if constexpr (std::is_integral_v<T>) {
      if (!j->is_number_integer()) throw ConfigError(p, "expected an integer");
      out = j->get<T>();
    } else {
      // vector<size_t>
      if (!j->is_array()) throw ConfigError(p, "expected a list");
      out.clear();
      for (const auto& e : *j) {
        if (!e.is_number_unsigned()) throw ConfigError(p, "expected nonnegative integers");
        out.push_back(e.get<typename T::value_type>());
      }
    }
  }

  template <typename E>
  void enumeration(std::string_view key, E& out, const NameTable<E>& table) {
    const json* j = find(key);
    if (j == nullptr) return;
    const std::string p = join_path(path_, key);
    if (!j->is_string()) throw ConfigError(p, "expected a string");
    const auto s = j->get<std::string>();
    for (const auto& [v, n] : table) {
      if (n == s) {
        out = v;
        return;
      }
    }
    std::string options;
    for (const auto& [v, n] : table) options += (options.empty() ? "" : ", ") + std::string(n);
    throw ConfigError(p, "unknown value '" + s + "' (expected one of: " + options + ")");
  }

  void section(std::string_view key, const std::function<void(Reader&)>& body) {
    const json* j = find(key);
    if (j == nullptr) return;
    Reader child(*j, join_path(path_, key));
    body(child);
    child.finish();
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ConfigError(join_path(path_, it.key()), "unknown key");
    }
  }

 private:
  const json* find(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = node_.find(std::string(key));
    return it == node_.end() ? nullptr : &*it;
  }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  explicit Writer(json& node) : node_(node) { node_ = json::object(); }

  template <typename T>
  void value(std::string_view key, const T& v) {
    node_[std::string(key)] = v;
  }
  template <typename E>
  void enumeration(std::string_view key, const E& v, const NameTable<E>& table) {
    node_[std::string(key)] = std::string(name_of(table, v));
  }
  void section(std::string_view key, const std::function<void(Writer&)>& body) {
    json child;
    Writer w(child);
    body(w);
    node_[std::string(key)] = std::move(child);
  }

 private:
  json& node_;
};

// One field list drives both reading and writing. `C` is ScenarioConfig or
// const ScenarioConfig.
template <typename A, typename C>
void visit(A& a, C& c) {
  a.value("name", c.name);
  a.value("seed", c.seed);
  a.value("rounds", c.rounds);
  a.section("nodes", [&](A& s) {
    s.value("gpu_pool", c.nodes.gpu_pool);
    s.value("cpu_pool", c.nodes.cpu_pool);
    s.value("regions", c.nodes.regions);
    s.value("k_train", c.nodes.k_train);
    s.value("min_updates", c.nodes.min_updates);
  });
  a.section("data", [&](A& s) {
    s.value("classes", c.data.classes);
    s.value("dim", c.data.dim);
    s.value("examples_per_node", c.data.examples_per_node);
    s.value("separation", c.data.separation);
    s.value("dirichlet_alpha", c.data.dirichlet_alpha);
    s.value("validation_fraction", c.data.validation_fraction);
    s.value("test_fraction", c.data.test_fraction);
    s.value("benchmark_shards", c.data.benchmark_shards);
  });
  a.section("reputation", [&](A& s) {
    s.value("lambda", c.reputation.lambda);
    s.value("r0", c.reputation.r0);
    s.value("cooldown_cycles", c.reputation.cooldown_cycles);
    s.value("uncertainty_gate", c.reputation.uncertainty_gate);
    s.value("eligibility_floor", c.reputation.eligibility_floor);
    s.value("collusion_p", c.reputation.collusion_p);
  });
  a.section("selection", [&](A& s) {
    s.enumeration("strategy", c.selection.strategy, kStrategies);
    s.value("w1", c.selection.weights.w1);
    s.value("w2", c.selection.weights.w2);
    s.value("w3", c.selection.weights.w3);
    s.value("w4", c.selection.weights.w4);
  });
  a.section("dp", [&](A& s) {
    s.value("clip_norm", c.dp.clip_norm);
    s.value("noise_multiplier", c.dp.noise_multiplier);
    s.value("batch_size", c.dp.batch_size);
    s.value("local_epochs", c.dp.local_epochs);
    s.value("delta", c.dp.delta);
    s.value("learning_rate", c.dp.learning_rate);
  });
  a.section("aggregation", [&](A& s) {
    s.enumeration("rule", c.aggregation.rule, kRules);
    s.value("byzantine_bound", c.aggregation.byzantine_bound);
  });
  a.section("adjudication", [&](A& s) {
    s.value("eta", c.adjudication.noise.eta);
    s.value("rho", c.adjudication.noise.rho);
    s.value("m", c.adjudication.m);
  });
  a.section("consensus", [&](A& s) {
    s.enumeration("weighting", c.consensus.weighting, kWeightings);
    s.enumeration("op_class", c.consensus.op_class, kOpClasses);
    s.enumeration("proposals", c.consensus.proposals, kModes);
    s.value("k_leader", c.consensus.k_leader);
    s.value("view_timeout_s", c.consensus.view_timeout_s);
    s.value("puzzle_admit_fraction", c.consensus.puzzle_admit_fraction);
    s.value("sybil_stake", c.consensus.sybil_stake);
    s.value("reputation_proof_overhead", c.consensus.reputation_proof_overhead);
    s.value("collusion_scan_every", c.consensus.collusion_scan_every);
  });
  a.section("attack", [&](A& s) {
    s.enumeration("kind", c.attack.kind, kAttacks);
    s.value("byzantine_fraction", c.attack.byzantine_fraction);
    s.value("alie_z", c.attack.alie_z);
    s.value("alie_auto_z", c.attack.alie_auto_z);
    s.value("trigger_indices", c.attack.trigger.indices);
    s.value("trigger_value", c.attack.trigger.value);
    s.value("target_label", c.attack.trigger.target_label);
    s.value("poison_fraction", c.attack.poison_fraction);
    s.value("sybil_fraction", c.attack.sybil_fraction);
    s.value("sybil_join_round", c.attack.sybil_join_round);
    s.value("failure_prob", c.attack.failure_prob);
    s.value("farming_onset_round", c.attack.farming_onset_round);
    s.value("inflate_capability", c.attack.inflate_capability);
    s.value("exclude_attackers", c.attack.exclude_attackers);
  });
  a.section("churn", [&](A& s) {
    s.value("rate_per_minute", c.churn.rate_per_minute);
    s.value("round_minutes", c.churn.round_minutes);
    s.value("return_probability", c.churn.return_probability);
    s.value("retention_rounds", c.churn.retention_rounds);
  });
  a.section("network", [&](A& s) {
    s.value("k_bucket", c.network.k_bucket);
    s.value("fanout", c.network.fanout);
    s.value("ttl", c.network.ttl);
    s.value("queue_capacity", c.network.queue_capacity);
    s.value("lookup_alpha", c.network.lookup_alpha);
    s.value("lookups_per_round", c.network.lookups_per_round);
    s.value("intra_region_ms", c.network.latency.intra_region_ms);
    s.value("same_provider_ms", c.network.latency.same_provider_ms);
    s.value("cross_provider_ms", c.network.latency.cross_provider_ms);
    s.value("loopback_ms", c.network.latency.loopback_ms);
    s.value("latency_cv", c.network.latency.coefficient_of_variation);
  });
  a.section("timing", [&](A& s) {
    s.value("round_timeout_s", c.timing.round_timeout_s);
    s.value("step_seconds", c.timing.step_seconds);
    s.value("transfer_rtts", c.timing.transfer_rtts);
    s.value("eval_seconds", c.timing.eval_seconds);
  });
  a.section("bootstrap", [&](A& s) {
    s.value("age_cycles", c.bootstrap.age_cycles);
    s.value("interactions", c.bootstrap.interactions);
  });
}

void require(bool ok, const char* path, const char* what) {
  if (!ok) throw ConfigError(path, what);
}

}  // namespace

std::string_view to_string(SelectionStrategy s) { return name_of(kStrategies, s); }
std::string_view to_string(AggregationRule r) { return name_of(kRules, r); }
std::string_view to_string(ConsensusWeighting w) { return name_of(kWeightings, w); }
std::string_view to_string(ProposalMode m) { return name_of(kModes, m); }

void ScenarioConfig::validate() const {
  require(rounds <= 1000000, "rounds", "too many rounds");
  require(nodes.gpu_pool >= 1, "nodes.gpu_pool", "need at least one trainer");
  require(nodes.regions >= 1 && nodes.regions <= network::kRegions, "nodes.regions",
          "must be in 1..9");
  require(nodes.k_train >= 1 && nodes.k_train <= nodes.gpu_pool, "nodes.k_train",
          "must be in 1..gpu_pool");
  require(nodes.min_updates <= nodes.k_train, "nodes.min_updates", "exceeds k_train");
  require(data.classes >= 2, "data.classes", "need at least two classes");
  require(data.dim >= 1, "data.dim", "must be positive");
  require(data.examples_per_node >= 1, "data.examples_per_node", "must be positive");
  require(data.separation >= 0.0, "data.separation", "must be >= 0");
  require(data.dirichlet_alpha > 0.0, "data.dirichlet_alpha", "must be > 0");
  require(data.validation_fraction > 0.0 && data.test_fraction > 0.0 &&
              data.validation_fraction + data.test_fraction < 0.9,
          "data.validation_fraction", "validation and test fractions must be positive and leave a training split");
  require(data.benchmark_shards >= adjudication.m, "data.benchmark_shards",
          "must be >= adjudication.m");
  try {
    reputation.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("reputation", e.what());
  }
  try {
    selection.weights.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("selection", e.what());
  }
  try {
    dp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("dp", e.what());
  }
  try {
    adjudication.noise.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("adjudication", e.what());
  }
  require(adjudication.m >= 3 && adjudication.m % 2 == 1, "adjudication.m",
          "must be odd and >= 3");
  require(consensus.k_leader >= 1, "consensus.k_leader", "must be positive");
  require(consensus.view_timeout_s > 0.0, "consensus.view_timeout_s", "must be positive");
  require(consensus.puzzle_admit_fraction >= 0.0 && consensus.puzzle_admit_fraction <= 1.0,
          "consensus.puzzle_admit_fraction", "must be in [0,1]");
  require(consensus.sybil_stake >= 0.0, "consensus.sybil_stake", "must be >= 0");
  require(consensus.reputation_proof_overhead >= 0.0, "consensus.reputation_proof_overhead",
          "must be >= 0");
  try {
    attack.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("attack", e.what());
  }
  for (auto idx : attack.trigger.indices) {
    require(idx < data.dim, "attack.trigger_indices", "index outside feature dimension");
  }
  require(attack.trigger.target_label >= 0 &&
              static_cast<std::size_t>(attack.trigger.target_label) < data.classes,
          "attack.target_label", "must be a valid class");
  require(churn.rate_per_minute >= 0.0, "churn.rate_per_minute", "must be >= 0");
  require(churn.round_minutes > 0.0, "churn.round_minutes", "must be positive");
  require(churn.return_probability >= 0.0 && churn.return_probability <= 1.0,
          "churn.return_probability", "must be in [0,1]");
  require(network.k_bucket >= 1, "network.k_bucket", "must be positive");
  require(network.lookup_alpha >= 1, "network.lookup_alpha", "must be positive");
  require(network.latency.intra_region_ms > 0 && network.latency.same_provider_ms > 0 &&
              network.latency.cross_provider_ms > 0 && network.latency.loopback_ms > 0,
          "network", "latency medians must be positive");
  require(network.latency.coefficient_of_variation >= 0.0, "network.latency_cv",
          "must be >= 0");
  require(timing.round_timeout_s >= 0.0, "timing.round_timeout_s", "must be >= 0");
  require(timing.step_seconds > 0.0, "timing.step_seconds", "must be positive");
  require(timing.transfer_rtts >= 0.0, "timing.transfer_rtts", "must be >= 0");
  require(timing.eval_seconds >= 0.0, "timing.eval_seconds", "must be >= 0");
}

ScenarioConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed config: ") + e.what());
  }
  ScenarioConfig c;
  Reader r(root, "");
  visit(r, c);
  r.finish();
  c.validate();
  return c;
}

std::string dump_config(const ScenarioConfig& config) {
  json root;
  Writer w(root);
  ScenarioConfig copy = config;
  visit(w, copy);
  return root.dump(2) + "\n";
}

ScenarioConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("<file>", "cannot open " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace nexus::sim
