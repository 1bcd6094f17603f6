// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "vacbench/vacbench.h"

int main(int argc, char** argv) {
  CLI::App app{"vacbench: value-incentivized actor-critic on linear MDPs"};
  app.set_version_flag("--version", std::string(vacb_version()));
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  std::string config;
  int workers = 0;
  std::string run_out;
  auto* run = app.add_subcommand(
      "run", "Run every (agent, seed) cell of an experiment config. "
             "VACBENCH_SEED=1,2,3 overrides the config's seed list.");
  run->add_option("--config", config, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--workers", workers,
                  "Concurrent cells (0 = available parallelism)")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--out", run_out, "Output directory (overrides the config)");

  std::uint64_t verify_seed = 0;
  std::string verify_out;
  std::string mutate;
  auto* verify = app.add_subcommand(
      "verify", "Run the identity and lemma checks; exit 1 on any failure");
  verify->add_option("--seed", verify_seed, "Seed for the randomized checks");
  verify->add_option("--out", verify_out,
                     "Directory for verify_report.json");
  verify->add_option("--mutate", mutate,
                     "Inject a known defect to test the gate "
                     "(reparam-sign)")
      ->check(CLI::IsMember({"reparam-sign"}));

  std::string instance;
  long episodes = 50;
  std::uint64_t solve_seed = 0;
  double alpha = 0.1;
  double B = 10.0;
  std::string solver;
  std::string solve_out;
  auto* solve = app.add_subcommand(
      "solve", "One offline solve on data from uniform-policy episodes");
  solve->add_option("--instance", instance, "Instance JSON")
      ->required()
      ->check(CLI::ExistingFile);
  solve->add_option("--episodes", episodes, "Uniform-policy episodes of data")
      ->check(CLI::NonNegativeNumber);
  solve->add_option("--seed", solve_seed, "Seed for the data rollouts");
  solve->add_option("--alpha", alpha, "Loss weight")
      ->check(CLI::NonNegativeNumber);
  solve->add_option("--B", B, "Policy ball scale")
      ->check(CLI::PositiveNumber);
  solve->add_option("--solver", solver, "SolveConfig JSON")
      ->check(CLI::ExistingFile);
  solve->add_option("--out", solve_out,
                    "Directory for params.json and trace.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run) {
    return vacb_cmd_run(config.c_str(), workers,
                        run_out.empty() ? nullptr : run_out.c_str());
  }
  if (*verify) {
    return vacb_cmd_verify(verify_seed,
                           verify_out.empty() ? nullptr : verify_out.c_str(),
                           mutate == "reparam-sign" ? 1 : 0);
  }
  return vacb_cmd_solve(instance.c_str(), episodes, solve_seed, alpha, B,
                        solver.empty() ? nullptr : solver.c_str(),
                        solve_out.empty() ? nullptr : solve_out.c_str());
}
