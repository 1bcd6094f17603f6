// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "vacbench/error.hpp"
#include "vacbench/func_approx.hpp"
#include "vacbench/linear_mdp.hpp"
#include "vacbench/optimizer.hpp"

namespace vacbench {

struct Hyperparams {
  double alpha;
  double B;
};

/// alpha = sqrt(log(1 + T^{3/2}/d) / (H^2 T log(log|A| T / delta))) and
/// B = T log|A| / (d H). Throws when log|A| T / delta <= 1, where the outer
/// logarithm is not positive.
Hyperparams hyperparams_from_theory(long T, int H, int num_actions, int d,
                                    double delta);
/// alpha = sqrt((1-g)^2 log(1 + T^{3/2}/(d (1-g)^2)) / (T log(log|A| T /
/// delta))) and B = T log|A| (1-g) / d.
Hyperparams hyperparams_from_theory_discounted(long T, double gamma,
                                               int num_actions, int d,
                                               double delta);

struct RegretRow {
  long t;
  double v_star;
  double v_pi;
  double regret_inst;
  double regret_cum;
  double objective;
  double loss;
  double wall_ms;
  /// State-action pairs the sampler drew this round (discounted runs only).
  long samples = 0;
};

struct RegretLog {
  std::string agent;
  std::uint64_t seed = 0;
  bool discounted = false;
  nlohmann::json hyperparams = nlohmann::json::object();
  std::vector<RegretRow> rows;
  QFunction final_f;
  LogLinearPolicy final_pi;

  /// Header t,v_star,v_pi,regret_inst,regret_cum,objective,loss,wall_ms;
  /// discounted logs append a samples column. Values use 17 significant
  /// digits, so identical runs give identical bytes.
  void write_csv(std::ostream& out) const;
  double cumulative_regret() const {
    return rows.empty() ? 0.0 : rows.back().regret_cum;
  }
};

/// Raised when a run aborts. Holds the rows logged before the failure.
class AgentError : public Error {
 public:
  AgentError(const std::string& what, RegretLog partial)
      : Error(ErrorKind::runtime, what), partial_(std::move(partial)) {}
  const RegretLog& partial() const { return partial_; }

 private:
  RegretLog partial_;
};

struct AgentOptions {
  SolveConfig solver;
  /// Wall-clock timings make CSVs differ between runs, so they are opt-in.
  bool record_wall_time = false;
  /// Called after each round with the parameters that acted in it.
  std::function<void(long t, const QFunction&, const LogLinearPolicy&)>
      on_round;
};

/// Episodic VAC: per episode, solve on the data so far, log the exact value
/// of the resulting policy, roll it out and append the H tuples.
RegretLog run_vac_episodic(const LinearMdp& lin, long T, double alpha,
                           double B, const AgentOptions& opts,
                           std::uint64_t seed);

/// Discounted VAC: per round, solve, log the exact value, then append one
/// tuple drawn from the discounted occupancy of the policy.
RegretLog run_vac_discounted(const LinearMdp& lin, long T, double alpha,
                             double B, const AgentOptions& opts,
                             std::uint64_t seed);

enum class BaselineKind { vanilla_ac, eps_greedy, mex };

BaselineKind parse_baseline(const std::string& name);
std::string to_string(BaselineKind kind);

struct BaselineParams {
  double epsilon = 0.1;  // eps_greedy
  double alpha = 0.0;    // mex
  double B = 1.0;        // vanilla_ac
};

/// vanilla_ac is VAC with alpha = 0. eps_greedy refits f by least-squares
/// Q-iteration on max targets each round and acts epsilon-greedily. mex
/// ascends the max-target objective in theta and acts greedily. All three
/// run in either mode.
RegretLog run_baseline(BaselineKind kind, const LinearMdp& lin, long T,
                       const BaselineParams& params, const AgentOptions& opts,
                       std::uint64_t seed);

}  // namespace vacbench
