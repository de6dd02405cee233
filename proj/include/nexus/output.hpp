#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "nexus/simulation.hpp"

namespace nexus::sim {

void write_rounds_csv(std::ostream& out, const RunMetrics& run);
void write_reputation_csv(std::ostream& out, const RunMetrics& run);
void write_consensus_csv(std::ostream& out, const RunMetrics& run);
void write_network_csv(std::ostream& out, const RunMetrics& run);
void write_summary(std::ostream& out, const RunMetrics& run);

/// Writes the four CSV files, summary.txt and the resolved config.json into
/// `dir`, creating it if needed.
void write_run(const std::filesystem::path& dir, const RunMetrics& run);

/// Header of the per-arm table written by experiment sweeps (arms.csv).
std::string arms_header();
std::string arms_row(const std::string& experiment, const std::string& arm,
                     std::uint64_t seed, const RunMetrics& run);

}  // namespace nexus::sim
