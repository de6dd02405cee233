#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nexus/config.hpp"

namespace nexus::sim {

struct ExperimentArm {
  std::string label;
  ScenarioConfig config;
};

struct Experiment {
  std::string id;
  std::string title;
  std::vector<ExperimentArm> arms;
};

std::vector<std::string> experiment_ids();

/// Base configuration of an experiment at desk scale, node counts multiplied
/// by `scale`. Throws std::invalid_argument for unknown ids or scale <= 0.
ScenarioConfig experiment_preset(std::string_view id, double scale = 1.0);

/// The comparison arms of an experiment, each a full configuration.
Experiment experiment_arms(std::string_view id, double scale = 1.0);

}  // namespace nexus::sim
