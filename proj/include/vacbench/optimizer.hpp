// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "vacbench/error.hpp"
#include "vacbench/func_approx.hpp"
#include "vacbench/objective.hpp"

namespace vacbench {

/// Schedule of the alternating projected-gradient solver.
struct SolveConfig {
  int outer_rounds = 10;
  int critic_steps = 50;
  int actor_steps = 50;
  double step_theta = 0.05;
  double step_omega = 0.5;
  /// A phase stops once an accepted step gains less than this, and the
  /// round loop stops once a whole outer round does.
  double tolerance = 1e-7;
  bool warm_start = true;
  int max_halvings = 20;
  double ridge = kDefaultRidge;
  /// With a warm start, also ascend from (f_prev, uniform policy) and keep
  /// whichever start reaches the higher objective.
  bool restart_policy = true;
  /// After an unhalved accepted step the step doubles, up to this multiple
  /// of the base step. 1 keeps the step fixed.
  double max_step_growth = 64.0;

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static SolveConfig from_json(const nlohmann::json& doc);
};

enum class Phase { critic, actor };

struct TraceRow {
  int round;
  Phase phase;
  int iteration;
  double objective;
  double loss;
};

struct SolveResult {
  QFunction f;
  LogLinearPolicy pi;
  double objective = 0.0;
  double loss = 0.0;
  std::vector<TraceRow> trace;
};

/// Raised when the objective becomes non-finite. Carries the trace so far.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<TraceRow> trace)
      : Error(ErrorKind::runtime, what), trace_(std::move(trace)) {}
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  std::vector<TraceRow> trace_;
};

/// Alternating block ascent on value - alpha * loss: critic steps on theta
/// with omega fixed, then actor steps on omega with theta fixed, each step
/// projected back onto its ball. A step that lowers the objective is halved
/// up to `max_halvings` times. The best evaluated pair is returned.
/// Trace rows of the second start continue the round numbering.
SolveResult solve_round(const ObjectiveEngine& engine, double alpha, double B,
                        const QFunction& f_prev, const LogLinearPolicy& pi_prev,
                        const SolveConfig& cfg);

/// Theta-only ascent on kappa * E_rho[max_a f_0] - alpha * mex_loss. The
/// returned policy is left at zero; callers act greedily on `f`.
SolveResult solve_mex_round(const ObjectiveEngine& engine, double alpha,
                            const QFunction& f_prev, const SolveConfig& cfg);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

}  // namespace vacbench
