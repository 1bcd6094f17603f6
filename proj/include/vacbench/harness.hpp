// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vacbench/agents.hpp"
#include "vacbench/error.hpp"
#include "vacbench/mdp.hpp"
#include "vacbench/optimizer.hpp"

namespace vacbench {

inline constexpr int kConfigSchemaVersion = 1;

/// Schema violation at a JSON pointer such as "/agents/1/alpha".
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(ErrorKind::config, (path.empty() ? "" : path + ": ") + what),
        path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct AgentSpec {
  std::string label;  // file prefix and legend entry; defaults to kind
  std::string kind;   // vac, vanilla_ac, eps_greedy, mex
  std::optional<double> alpha;  // empty means "theory"
  std::optional<double> B;      // empty means "theory"
  double epsilon = 0.1;

  /// Throws ConfigError with a pointer below `path` on schema violations.
  static AgentSpec from_json(const nlohmann::json& doc,
                             const std::string& path = "");
};

struct ExperimentConfig {
  /// Either a generated instance or a fixture file (resolved against the
  /// config file's directory).
  std::optional<InstanceSpec> generated;
  std::uint64_t instance_seed = 0;
  std::string instance_path;

  std::vector<AgentSpec> agents;
  SolveConfig solver;
  long T = 0;
  std::vector<std::uint64_t> seeds;
  double delta = 0.05;
  std::string output_dir = "results";
  bool record_wall_time = false;

  static ExperimentConfig parse(const nlohmann::json& doc,
                                const std::string& base_dir = ".");
  static ExperimentConfig load(const std::string& path);
};

/// Parses VACBENCH_SEED ("7" or "1,2,3").
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

TabularCore build_instance(const ExperimentConfig& cfg);

/// Resolved (alpha, B) of an agent on an instance, theory values filled in.
Hyperparams resolve_hyperparams(const AgentSpec& agent, const LinearMdp& lin,
                                long T, double delta);

RegretLog run_agent(const AgentSpec& agent, const LinearMdp& lin, long T,
                    double delta, const AgentOptions& opts,
                    std::uint64_t seed);

/// 1, 2, 5, 10, 20, 50, ... up to T, with T appended.
std::vector<long> summary_checkpoints(long T);

struct SummaryRow {
  std::string agent;
  long t;
  double mean;
  double std;
  int seeds;
};

std::vector<SummaryRow> summarize(const std::vector<RegretLog>& logs,
                                  const std::vector<std::string>& agent_order,
                                  long T);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Line chart of mean cumulative regret against t, one polyline per agent.
void write_regret_svg(std::ostream& out, const std::vector<RegretLog>& logs,
                      const std::vector<std::string>& agent_order);

/// {"theta": {...}, "omega": {...}} in the checkpoint format.
nlohmann::json checkpoint_json(const QFunction& f, const LogLinearPolicy& pi);

struct RunOptions {
  std::string config_path;
  int workers = 0;  // 0 = hardware concurrency
  std::string out_dir;  // overrides the config when non-empty
};

/// Exit codes: 0 done, 2 config error, 3 agent or I/O failure (completed
/// cells are still written).
int cmd_run(const RunOptions& opts, std::ostream& log, std::ostream& err);

struct VerifyCommand {
  std::uint64_t seed = 0;
  std::string out_dir;
  bool flip_reparam_sign = false;
};

/// Prints the JSON report; writes verify_report.json when out_dir is set.
/// Exit 0 iff every check passes, 1 otherwise.
int cmd_verify(const VerifyCommand& opts, std::ostream& out, std::ostream& err);

struct SolveCommand {
  std::string instance_path;
  long episodes = 50;
  std::uint64_t seed = 0;
  double alpha = 0.1;
  double B = 10.0;
  std::string solver_path;  // optional JSON SolveConfig
  std::string out_dir;
};

/// One offline solve_round on data from uniform-policy episodes. Prints a
/// JSON summary; writes params.json and trace.csv when out_dir is set.
int cmd_solve(const SolveCommand& opts, std::ostream& out, std::ostream& err);

}  // namespace vacbench
