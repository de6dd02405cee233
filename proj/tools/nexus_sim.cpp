// nexus-sim: run scenarios and experiment sweeps, validate configs.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "nexus/config.hpp"
#include "nexus/output.hpp"
#include "nexus/presets.hpp"
#include "nexus/simulation.hpp"

namespace fs = std::filesystem;
using namespace nexus::sim;

namespace {

int cmd_run(const std::string& config_file, std::optional<std::uint64_t> seed,
            const fs::path& out) {
  ScenarioConfig config = load_config(config_file);
  if (seed) config.seed = *seed;
  if (auto env = seed_from_env()) config.seed = *env;
  const RunMetrics run = run_scenario(config);
  write_run(out, run);
  write_summary(std::cout, run);
  return 0;
}

int cmd_exp(const std::string& id, double scale, std::uint32_t seeds, const fs::path& out) {
  const Experiment e = experiment_arms(id, scale);
  const std::uint64_t first = seed_from_env().value_or(1);
  fs::create_directories(out);
  std::ofstream table(out / "arms.csv");
  table << arms_header();
  std::cout << e.id << ": " << e.title << '\n';
  for (const auto& arm : e.arms) {
    for (std::uint32_t j = 0; j < seeds; ++j) {
      ScenarioConfig c = arm.config;
      c.seed = first + j;
      const RunMetrics run = run_scenario(c);
      write_run(out / arm.label / ("seed_" + std::to_string(c.seed)), run);
      const std::string row = arms_row(e.id, arm.label, c.seed, run);
      table << row;
      table.flush();
      std::cout << row;
    }
  }
  return 0;
}

int cmd_validate(const std::string& file) {
  load_config(file);
  std::cout << "ok: " << file << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reputation-driven decentralized federated learning simulator"};
  app.require_subcommand(1);

  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::string out;
  auto* run = app.add_subcommand("run", "run one scenario from a config file");
  run->add_option("--config", config_file, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "run seed (NEXUS_SEED overrides)");
  run->add_option("--out", out, "output directory")->required();

  std::string exp_id;
  double scale = 1.0;
  std::uint32_t seeds = 1;
  std::string exp_out;
  auto* exp = app.add_subcommand("exp", "run an experiment preset across its arms");
  exp->add_option("id", exp_id, "exp1..exp10")->required()->check(CLI::IsMember(experiment_ids()));
  exp->add_option("--scale", scale, "node-count multiplier")->check(CLI::PositiveNumber);
  exp->add_option("--seeds", seeds, "seeds per arm")->check(CLI::Range(1u, 1000u));
  exp->add_option("--out", exp_out, "output directory")->required();

  std::string validate_file;
  auto* validate = app.add_subcommand("validate-config", "check a config file");
  validate->add_option("file", validate_file)->required();

  std::string preset_id;
  double preset_scale = 1.0;
  auto* preset = app.add_subcommand("preset", "print an experiment's base config");
  preset->add_option("id", preset_id)->required()->check(CLI::IsMember(experiment_ids()));
  preset->add_option("--scale", preset_scale)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_file, seed, out);
    if (*exp) return cmd_exp(exp_id, scale, seeds, exp_out);
    if (*validate) return cmd_validate(validate_file);
    if (*preset) {
      std::cout << dump_config(experiment_preset(preset_id, preset_scale));
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
