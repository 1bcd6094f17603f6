// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vacbench/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace vacbench {

void SolveConfig::validate() const {
  if (outer_rounds < 1 || critic_steps < 1 || actor_steps < 1) {
    throw invalid_argument("solver: step counts must be >= 1");
  }
  if (!(std::isfinite(step_theta) && step_theta > 0.0) ||
      !(std::isfinite(step_omega) && step_omega > 0.0)) {
    throw invalid_argument("solver: step sizes must be finite and > 0");
  }
  if (!(tolerance > 0.0)) throw invalid_argument("solver: tolerance must be > 0");
  if (max_halvings < 0) throw invalid_argument("solver: max_halvings < 0");
  if (!(std::isfinite(max_step_growth) && max_step_growth >= 1.0)) {
    throw invalid_argument("solver: max_step_growth must be finite and >= 1");
  }
  if (!(ridge >= 0.0)) throw invalid_argument("solver: ridge must be >= 0");
}

nlohmann::json SolveConfig::to_json() const {
  return {{"outer_rounds", outer_rounds}, {"critic_steps", critic_steps},
          {"actor_steps", actor_steps},   {"step_theta", step_theta},
          {"step_omega", step_omega},     {"tolerance", tolerance},
          {"warm_start", warm_start},     {"max_halvings", max_halvings},
          {"ridge", ridge},               {"restart_policy", restart_policy},
          {"max_step_growth", max_step_growth}};
}

SolveConfig SolveConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw invalid_argument("solver: expected an object");
  SolveConfig cfg;
  try {
  for (const auto& [key, value] : doc.items()) {
    if (key == "outer_rounds") cfg.outer_rounds = value.get<int>();
    else if (key == "critic_steps") cfg.critic_steps = value.get<int>();
    else if (key == "actor_steps") cfg.actor_steps = value.get<int>();
    else if (key == "step_theta") cfg.step_theta = value.get<double>();
    else if (key == "step_omega") cfg.step_omega = value.get<double>();
    else if (key == "tolerance") cfg.tolerance = value.get<double>();
    else if (key == "warm_start") cfg.warm_start = value.get<bool>();
    else if (key == "max_halvings") cfg.max_halvings = value.get<int>();
    else if (key == "ridge") cfg.ridge = value.get<double>();
    else if (key == "restart_policy") cfg.restart_policy = value.get<bool>();
    else if (key == "max_step_growth") cfg.max_step_growth = value.get<double>();
    else throw invalid_argument("solver: unknown key '" + key + "'");
  }
  } catch (const nlohmann::json::type_error& e) {
    throw invalid_argument(std::string("solver: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

namespace {

using Params = std::vector<Eigen::VectorXd>;

struct Point {
  Params x;
  double value = 0.0;
  double loss = 0.0;
  Params grad;
};

// One block of projected ascent with halving backtracking. `eval` maps a
// parameter list to a Point with its gradient; `proj` maps onto the ball.
// The step size carries over between calls through `step`.
template <class Eval, class Proj>
void ascend(Point& cur, double& step, double step_cap, int iterations,
            const SolveConfig& cfg, int round, Phase phase, Eval&& eval,
            Proj&& proj, std::vector<TraceRow>& trace) {
  for (int it = 1; it <= iterations; ++it) {
    bool accepted = false;
    for (int halving = 0; halving <= cfg.max_halvings; ++halving) {
      Params trial = cur.x;
      for (std::size_t h = 0; h < trial.size(); ++h) {
        trial[h] += step * cur.grad[h];
      }
      trial = proj(std::move(trial));
      Point next = eval(std::move(trial));
      if (!std::isfinite(next.value)) {
        throw SolverError("solver: non-finite objective", trace);
      }
      if (next.value >= cur.value) {
        const double gain = next.value - cur.value;
        if (halving == 0) step = std::min(2.0 * step, step_cap);
        cur = std::move(next);
        trace.push_back({round, phase, it, cur.value, cur.loss});
        accepted = gain >= cfg.tolerance;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return;
  }
}

void check_finite(const Point& p, const std::vector<TraceRow>& trace) {
  if (!std::isfinite(p.value)) {
    throw SolverError("solver: non-finite objective", trace);
  }
}

}  // namespace

namespace {

SolveResult ascend_pair(const ObjectiveEngine& engine, double alpha, double B,
                        QFunction f, LogLinearPolicy pi,
                        const SolveConfig& cfg) {
  const LinearMdp& lin = engine.lin();
  SolveResult out;
  auto& trace = out.trace;

  auto eval_actor = [&](Params omega) {
    LogLinearPolicy cand{std::move(omega)};
    auto rep = engine.evaluate(f, cand, alpha, true);
    return Point{std::move(cand.omega), rep.value, rep.loss_value,
                 std::move(rep.grad_omega)};
  };
  auto proj_actor = [&](Params omega) {
    return project(LogLinearPolicy{std::move(omega)}, lin, B).omega;
  };

  Point actor = eval_actor(pi.omega);
  check_finite(actor, trace);
  trace.push_back({0, Phase::critic, 0, actor.value, actor.loss});
  out.f = f;
  out.pi = pi;
  out.objective = actor.value;
  out.loss = actor.loss;

  double step_theta = cfg.step_theta;
  double step_omega = cfg.step_omega;
  for (int round = 0; round < cfg.outer_rounds; ++round) {
    const double round_start = out.objective;

    const PolicyTable table = policy_table(pi, lin);
    auto eval_critic = [&](Params theta) {
      QFunction cand{std::move(theta)};
      auto res = engine.evaluate(cand, table, alpha, true);
      return Point{std::move(cand.theta), res.value, res.loss,
                   std::move(res.grad_theta)};
    };
    auto proj_critic = [&](Params theta) {
      return project(QFunction{std::move(theta)}, lin).theta;
    };
    Point critic = eval_critic(f.theta);
    ascend(critic, step_theta, cfg.step_theta * cfg.max_step_growth, cfg.critic_steps, cfg, round,
           Phase::critic, eval_critic, proj_critic, trace);
    f.theta = critic.x;

    actor = eval_actor(pi.omega);
    ascend(actor, step_omega, cfg.step_omega * cfg.max_step_growth, cfg.actor_steps, cfg, round,
           Phase::actor, eval_actor, proj_actor, trace);
    pi.omega = actor.x;

    // Both phases only accept non-decreasing steps, so the last actor point
    // is the best pair seen in this round.
    if (actor.value >= out.objective) {
      out.f = f;
      out.pi = pi;
      out.objective = actor.value;
      out.loss = actor.loss;
    }
    if (out.objective - round_start < cfg.tolerance) break;
  }
  return out;
}

}  // namespace

SolveResult solve_round(const ObjectiveEngine& engine, double alpha, double B,
                        const QFunction& f_prev, const LogLinearPolicy& pi_prev,
                        const SolveConfig& cfg) {
  cfg.validate();
  if (!(alpha >= 0.0)) throw invalid_argument("solver: alpha must be >= 0");
  if (!(B > 0.0)) throw invalid_argument("solver: B must be > 0");
  const LinearMdp& lin = engine.lin();

  QFunction f = cfg.warm_start ? project(f_prev, lin) : QFunction::zeros(lin);
  LogLinearPolicy pi =
      cfg.warm_start ? project(pi_prev, lin, B) : LogLinearPolicy::zeros(lin);
  const bool second_start =
      cfg.restart_policy && cfg.warm_start &&
      std::any_of(pi.omega.begin(), pi.omega.end(),
                  [](const Eigen::VectorXd& w) { return !w.isZero(0.0); });

  SolveResult best = ascend_pair(engine, alpha, B, f, std::move(pi), cfg);
  if (second_start) {
    SolveResult fresh = ascend_pair(engine, alpha, B, std::move(f),
                                    LogLinearPolicy::zeros(lin), cfg);
    const int offset = best.trace.back().round + 1;
    for (auto& row : fresh.trace) row.round += offset;
    best.trace.insert(best.trace.end(), fresh.trace.begin(), fresh.trace.end());
    if (fresh.objective > best.objective) {
      best.f = std::move(fresh.f);
      best.pi = std::move(fresh.pi);
      best.objective = fresh.objective;
      best.loss = fresh.loss;
    }
  }
  return best;
}

SolveResult solve_mex_round(const ObjectiveEngine& engine, double alpha,
                            const QFunction& f_prev, const SolveConfig& cfg) {
  cfg.validate();
  if (!(alpha >= 0.0)) throw invalid_argument("solver: alpha must be >= 0");
  const LinearMdp& lin = engine.lin();
  QFunction f = cfg.warm_start ? project(f_prev, lin) : QFunction::zeros(lin);

  // Against the greedy table the policy-averaged loss is the max-target loss
  // and the value term is E_rho[max_a f_0], so the table gradient applies.
  auto eval = [&](Params theta) {
    QFunction cand{std::move(theta)};
    auto res = engine.evaluate(cand, greedy_policy(cand, lin), alpha, true);
    return Point{std::move(cand.theta), res.value, res.loss,
                 std::move(res.grad_theta)};
  };
  auto proj = [&](Params theta) {
    return project(QFunction{std::move(theta)}, lin).theta;
  };

  SolveResult out;
  Point cur = eval(f.theta);
  check_finite(cur, out.trace);
  out.trace.push_back({0, Phase::critic, 0, cur.value, cur.loss});
  double step = cfg.step_theta;
  for (int round = 0; round < cfg.outer_rounds; ++round) {
    const double round_start = cur.value;
    ascend(cur, step, cfg.step_theta, cfg.critic_steps, cfg, round,
           Phase::critic, eval, proj, out.trace);
    if (cur.value - round_start < cfg.tolerance) break;
  }
  out.f = QFunction{cur.x};
  out.pi = LogLinearPolicy::zeros(lin);
  out.objective = cur.value;
  out.loss = cur.loss;
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "round,phase,iteration,objective,loss\n";
  const auto old = out.precision(17);
  for (const auto& row : trace) {
    out << row.round << ',' << (row.phase == Phase::critic ? "critic" : "actor")
        << ',' << row.iteration << ',' << row.objective << ',' << row.loss
        << '\n';
  }
  out.precision(old);
}

}  // namespace vacbench
