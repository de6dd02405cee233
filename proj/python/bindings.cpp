#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "nexus/adjudication.hpp"
#include "nexus/config.hpp"
#include "nexus/consensus.hpp"
#include "nexus/output.hpp"
#include "nexus/presets.hpp"
#include "nexus/privacy.hpp"
#include "nexus/reputation.hpp"
#include "nexus/simulation.hpp"

namespace py = pybind11;
using namespace nexus;

namespace {

py::dict summarize(const sim::RunMetrics& run) {
  py::dict d;
  d["name"] = run.config.name;
  d["seed"] = run.config.seed;
  d["rounds"] = run.rounds.size();
  d["success_rate"] = run.success_rate();
  d["final_test_acc"] = run.final_test_accuracy();
  d["final_val_acc"] = run.final_validation_accuracy();
  d["worst_epsilon"] = run.worst_epsilon();
  d["p95_round_time_s"] = run.p95_round_time();
  d["mean_consensus_latency_s"] = run.mean_consensus_latency();
  d["safety_violation"] = run.safety_violation;
  if (auto v = sim::validation_correctness(run)) d["validation_correctness"] = *v;
  else d["validation_correctness"] = py::none();
  return d;
}

std::string render(const sim::RunMetrics& run, void (*writer)(std::ostream&, const sim::RunMetrics&)) {
  std::ostringstream out;
  writer(out, run);
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Reputation-driven decentralized federated learning simulator";

  py::register_exception<sim::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("expected_gap",
        [](double p_h, double p_b, double lambda, std::uint32_t rounds) {
          return reputation::expected_gap({p_h, p_b, lambda, rounds});
        },
        py::arg("p_h"), py::arg("p_b"), py::arg("lam") = 0.95, py::arg("rounds"));
  m.def("effective_error", &reputation::effective_error, py::arg("eta"), py::arg("rho"), py::arg("m"));
  m.def("pairwise_agreement", &adjudication::pairwise_agreement, py::arg("eta"), py::arg("rho"));
  m.def("rdp_epsilon", &learner::rdp_epsilon, py::arg("q"), py::arg("sigma"), py::arg("steps"),
        py::arg("delta"));
  m.def("quorum_threshold",
        [](const std::string& op) { return consensus::quorum_threshold(consensus::parse_op_class(op)); },
        py::arg("op_class"));
  m.def("experiment_ids", &sim::experiment_ids);

  // Configs cross the boundary as JSON text; unknown keys raise ValueError.
  m.def("validate_config", [](const std::string& text) { return sim::dump_config(sim::parse_config(text)); },
        py::arg("text"), "Parse, validate and return the fully resolved config as JSON.");
  m.def("experiment_config",
        [](const std::string& id, double scale) { return sim::dump_config(sim::experiment_preset(id, scale)); },
        py::arg("experiment"), py::arg("scale") = 1.0);

  m.def("run",
        [](const std::string& text, std::optional<std::uint64_t> seed, std::optional<std::string> out_dir) {
          sim::ScenarioConfig cfg = sim::parse_config(text);
          if (seed) cfg.seed = *seed;
          if (auto env = sim::seed_from_env()) cfg.seed = *env;
          sim::RunMetrics run;
          {
            py::gil_scoped_release release;
            run = sim::run_scenario(cfg);
          }
          if (out_dir) sim::write_run(*out_dir, run);
          py::dict d = summarize(run);
          d["rounds_csv"] = render(run, &sim::write_rounds_csv);
          d["network_csv"] = render(run, &sim::write_network_csv);
          d["consensus_csv"] = render(run, &sim::write_consensus_csv);
          return d;
        },
        py::arg("config_json"), py::arg("seed") = py::none(), py::arg("out_dir") = py::none(),
        "Run one scenario. NEXUS_SEED overrides both the config and `seed`.");
}
