#include "nexus/output.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace nexus::sim {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

const char* flag(bool b) { return b ? "1" : "0"; }

std::string coverage_at(const NetworkRecord& n, std::size_t r) {
  if (n.coverage.empty()) return "";
  return num(n.coverage[std::min(r, n.coverage.size() - 1)]);
}

std::ofstream open(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

void write_rounds_csv(std::ostream& out, const RunMetrics& run) {
  out << "round,success,completed_in_time,min_updates_met,quorum_approved,no_regression,"
         "failure,selected,selected_byzantine,collected,val_acc_before,val_acc_after,"
         "test_acc,round_time_s,consensus_latency_s,views,epsilon,"
         "rep_honest_mean,rep_honest_q1,rep_honest_median,rep_honest_q3,"
         "rep_byzantine_mean,rep_byzantine_q1,rep_byzantine_median,rep_byzantine_q3,"
         "rep_sybil_mean\n";
  for (const auto& rm : run.rounds) {
    const auto& r = rm.result;
    out << r.round << ',' << flag(r.success) << ',' << flag(r.completed_in_time) << ','
        << flag(r.min_updates_met) << ',' << flag(r.quorum_approved) << ','
        << flag(r.no_regression) << ',' << r.failure << ',' << r.selected.size() << ','
        << r.selected_byzantine << ',' << r.collected << ',' << num(r.val_before) << ','
        << num(r.val_after) << ',' << num(r.test_accuracy) << ',' << num(r.round_time_s) << ','
        << num(r.consensus_latency_s) << ',' << r.views << ',' << num(rm.epsilon) << ','
        << num(rm.honest.mean) << ',' << num(rm.honest.q1) << ',' << num(rm.honest.median)
        << ',' << num(rm.honest.q3) << ',';
    if (rm.byzantine.count > 0) {
      out << num(rm.byzantine.mean) << ',' << num(rm.byzantine.q1) << ','
          << num(rm.byzantine.median) << ',' << num(rm.byzantine.q3) << ',';
    } else {
      out << ",,,,";
    }
    if (rm.sybil.count > 0) out << num(rm.sybil.mean);
    out << '\n';
  }
}

void write_reputation_csv(std::ostream& out, const RunMetrics& run) {
  out << "round,node,role,score,uncertainty,alpha,beta,online,selected\n";
  for (const auto& r : run.reputation) {
    out << r.round << ',' << r.node << ',' << to_string(r.role) << ',' << num(r.score) << ','
        << num(r.uncertainty) << ',' << num(r.alpha) << ',' << num(r.beta) << ','
        << flag(r.online) << ',' << flag(r.selected) << '\n';
  }
}

void write_consensus_csv(std::ostream& out, const RunMetrics& run) {
  out << "round,epoch,op_class,q_T,W,approval_weight,status,views,latency,"
         "candidate,oracle_accept,correct\n";
  for (const auto& c : run.consensus) {
    out << c.round << ',' << c.epoch << ',' << consensus::to_string(c.op_class) << ','
        << num(c.quorum) << ',' << num(c.total_weight) << ',' << num(c.approval_weight) << ','
        << consensus::to_string(c.status) << ',' << c.views << ',' << num(c.latency_s) << ','
        << (c.adversarial ? "adversarial" : "honest") << ',' << flag(c.oracle_accept) << ','
        << flag(c.correct) << '\n';
  }
}

void write_network_csv(std::ostream& out, const RunMetrics& run) {
  out << "round,online,coverage_r1,coverage_r2,coverage_r3,rounds_to_99,lookup_hops,"
         "departures,arrivals,dropped\n";
  for (const auto& n : run.network) {
    out << n.round << ',' << n.online << ',' << coverage_at(n, 1) << ',' << coverage_at(n, 2)
        << ',' << coverage_at(n, 3) << ',' << n.rounds_to_99 << ',' << num(n.mean_lookup_hops)
        << ',' << n.departures << ',' << n.arrivals << ',' << n.dropped << '\n';
  }
}

void write_summary(std::ostream& out, const RunMetrics& run) {
  const auto& c = run.config;
  out << "scenario: " << c.name << '\n'
      << "seed: " << c.seed << '\n'
      << "rounds: " << run.rounds.size() << '\n'
      << "round_timeout_s: " << num(run.timeout_s) << '\n'
      << "round_success_rate: " << num(run.success_rate()) << '\n'
      << "final_validation_accuracy: " << num(run.final_validation_accuracy()) << '\n'
      << "final_test_accuracy: " << num(run.final_test_accuracy()) << '\n';
  const auto vc = validation_correctness(run);
  out << "validation_correctness: " << (vc ? num(*vc) : std::string("absent")) << '\n'
      << "worst_case_epsilon: " << num(run.worst_epsilon()) << '\n'
      << "p95_round_time_s: " << num(run.p95_round_time()) << '\n'
      << "mean_consensus_latency_s: " << num(run.mean_consensus_latency()) << '\n'
      << "safety_violation: " << (run.safety_violation ? "yes" : "no") << '\n';
  if (!run.rounds.empty()) {
    const auto& last = run.rounds.back();
    out << "final_honest_median_reputation: " << num(last.honest.median) << '\n';
    if (last.byzantine.count > 0) {
      out << "final_byzantine_median_reputation: " << num(last.byzantine.median) << '\n';
    }
    if (last.sybil.count > 0) {
      out << "final_sybil_mean_reputation: " << num(last.sybil.mean) << '\n';
    }
  }
}

void write_run(const std::filesystem::path& dir, const RunMetrics& run) {
  std::filesystem::create_directories(dir);
  {
    auto f = open(dir / "rounds.csv");
    write_rounds_csv(f, run);
  }
  {
    auto f = open(dir / "reputation.csv");
    write_reputation_csv(f, run);
  }
  {
    auto f = open(dir / "consensus.csv");
    write_consensus_csv(f, run);
  }
  {
    auto f = open(dir / "network.csv");
    write_network_csv(f, run);
  }
  {
    auto f = open(dir / "summary.txt");
    write_summary(f, run);
  }
  {
    auto f = open(dir / "config.json");
    f << dump_config(run.config);
  }
}

std::string arms_header() {
  return "experiment,arm,seed,success_rate,final_test_acc,final_val_acc,"
         "validation_correctness,worst_epsilon,p95_round_time_s,"
         "mean_consensus_latency_s,honest_median,byzantine_median,mean_lookup_hops,"
         "mean_rounds_to_99\n";
}

std::string arms_row(const std::string& experiment, const std::string& arm,
                     std::uint64_t seed, const RunMetrics& run) {
  const auto vc = validation_correctness(run);
  std::string row = experiment + "," + arm + "," + std::to_string(seed) + "," +
                    num(run.success_rate()) + "," + num(run.final_test_accuracy()) + "," +
                    num(run.final_validation_accuracy()) + "," + (vc ? num(*vc) : "") + "," +
                    num(run.worst_epsilon()) + "," + num(run.p95_round_time()) + "," +
                    num(run.mean_consensus_latency()) + ",";
  if (!run.rounds.empty()) {
    row += num(run.rounds.back().honest.median) + ",";
    row += run.rounds.back().byzantine.count > 0 ? num(run.rounds.back().byzantine.median) : "";
  } else {
    row += ",";
  }
  double hops = 0.0, spread = 0.0;
  std::size_t spread_n = 0;
  for (const auto& n : run.network) {
    hops += n.mean_lookup_hops;
    if (n.rounds_to_99 >= 0) {
      spread += n.rounds_to_99;
      ++spread_n;
    }
  }
  row += "," + (run.network.empty() ? std::string() : num(hops / static_cast<double>(run.network.size())));
  row += "," + (spread_n == 0 ? std::string() : num(spread / static_cast<double>(spread_n)));
  return row + "\n";
}

}  // namespace nexus::sim
