// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vacbench/agents.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "vacbench/objective.hpp"

namespace vacbench {

namespace {

void check_theory_args(long T, int num_actions, int d, double delta) {
  if (T < 2) throw invalid_argument("theory hyperparameters need T >= 2");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw invalid_argument("delta must lie in (0, 1)");
  }
  if (num_actions < 1 || d < 1) throw invalid_argument("|A| and d must be >= 1");
  const double inner = std::log(static_cast<double>(num_actions)) *
                       static_cast<double>(T) / delta;
  if (!(inner > 1.0)) {
    throw invalid_argument(
        "log|A| T / delta <= 1: the confidence term is degenerate, enlarge T");
  }
}

}  // namespace

Hyperparams hyperparams_from_theory(long T, int H, int num_actions, int d,
                                    double delta) {
  check_theory_args(T, num_actions, d, delta);
  if (H < 1) throw invalid_argument("H must be >= 1");
  const double t = static_cast<double>(T);
  const double log_a = std::log(static_cast<double>(num_actions));
  const double conf = std::log(log_a * t / delta);
  const double info = std::log(1.0 + std::pow(t, 1.5) / d);
  return {std::sqrt(info / (static_cast<double>(H) * H * t * conf)),
          t * log_a / (static_cast<double>(d) * H)};
}

Hyperparams hyperparams_from_theory_discounted(long T, double gamma,
                                               int num_actions, int d,
                                               double delta) {
  check_theory_args(T, num_actions, d, delta);
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw invalid_argument("gamma must lie in [0, 1)");
  }
  const double t = static_cast<double>(T);
  const double log_a = std::log(static_cast<double>(num_actions));
  const double eff = (1.0 - gamma) * (1.0 - gamma);
  const double conf = std::log(log_a * t / delta);
  const double info = std::log(1.0 + std::pow(t, 1.5) / (d * eff));
  return {std::sqrt(eff * info / (t * conf)), t * log_a * (1.0 - gamma) / d};
}

void RegretLog::write_csv(std::ostream& out) const {
  out << "t,v_star,v_pi,regret_inst,regret_cum,objective,loss,wall_ms";
  if (discounted) out << ",samples";
  out << '\n';
  char buf[64];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, ",%.17g", x);
    out << buf;
  };
  for (const auto& r : rows) {
    out << r.t;
    put(r.v_star);
    put(r.v_pi);
    put(r.regret_inst);
    put(r.regret_cum);
    put(r.objective);
    put(r.loss);
    put(r.wall_ms);
    if (discounted) out << ',' << r.samples;
    out << '\n';
  }
}

namespace {

struct Decision {
  PolicyTable table;
  double objective = 0.0;
  double loss = 0.0;
};

// Shared online loop. `decide` maps the current engine to the policy that
// acts this round; data collection and regret bookkeeping live here.
template <class Decide>
RegretLog run_loop(const LinearMdp& lin, long T, const AgentOptions& opts,
                   std::uint64_t seed, RegretLog log, Decide&& decide) {
  if (T < 1) throw invalid_argument("T must be >= 1");
  opts.solver.validate();
  const TabularCore& core = lin.core();
  log.seed = seed;
  log.discounted = !core.is_episodic();
  const double v_star = exact_optimal_values(core).values.at_rho(core.rho());

  TransitionDataset data(lin.num_steps());
  double cum = 0.0;
  for (long t = 1; t <= T; ++t) {
    const auto start = std::chrono::steady_clock::now();
    Decision dec;
    try {
      const ObjectiveEngine engine(lin, data, opts.solver.ridge);
      dec = decide(engine, t);
    } catch (const Error& e) {
      throw AgentError("round " + std::to_string(t) + ": " + e.what(),
                       std::move(log));
    }
    const double v_pi = exact_policy_values(core, dec.table).at_rho(core.rho());

    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(t));
    long samples = 0;
    if (core.is_episodic()) {
      data.add_trajectory(rollout(core, dec.table, rng), t);
    } else {
      const auto s = sample_discounted(core, dec.table, rng);
      const double r = core.reward(0, s.state, s.action);
      data.add(0, {s.state, s.action, r, s.next_state}, t);
      samples = s.step_index + 1;
    }

    const double inst = v_star - v_pi;
    cum += inst;
    double wall = 0.0;
    if (opts.record_wall_time) {
      wall = std::chrono::duration<double, std::milli>(
                 std::chrono::steady_clock::now() - start)
                 .count();
    }
    log.rows.push_back(
        {t, v_star, v_pi, inst, cum, dec.objective, dec.loss, wall, samples});
  }
  return log;
}

RegretLog run_vac(const LinearMdp& lin, long T, double alpha, double B,
                  const AgentOptions& opts, std::uint64_t seed,
                  const std::string& name) {
  if (!(alpha >= 0.0)) throw invalid_argument("alpha must be >= 0");
  if (!(B > 0.0)) throw invalid_argument("B must be > 0");
  RegretLog log;
  log.agent = name;
  log.hyperparams = {{"alpha", alpha}, {"B", B},
                     {"solver", opts.solver.to_json()}};
  QFunction f = QFunction::optimistic(lin);
  LogLinearPolicy pi = LogLinearPolicy::zeros(lin);
  log = run_loop(lin, T, opts, seed, std::move(log),
                 [&](const ObjectiveEngine& engine, long t) {
                   auto res = solve_round(engine, alpha, B, f, pi, opts.solver);
                   f = std::move(res.f);
                   pi = std::move(res.pi);
                   if (opts.on_round) opts.on_round(t, f, pi);
                   return Decision{policy_table(pi, lin), res.objective,
                                   res.loss};
                 });
  log.final_f = f;
  log.final_pi = pi;
  return log;
}

PolicyTable epsilon_greedy(const QFunction& f, const LinearMdp& lin,
                           double epsilon) {
  PolicyTable table = greedy_policy(f, lin);
  const double floor = epsilon / lin.core().num_actions();
  for (int h = 0; h < table.num_steps(); ++h) {
    for (int s = 0; s < table.num_states(); ++s) {
      for (double& p : table.row(h, s)) p = (1.0 - epsilon) * p + floor;
    }
  }
  return table;
}

// Least-squares Q-iteration on max targets. Episodic stages are fitted
// backwards once; the discounted stage is iterated to a fixed point.
void fit_q_iteration(QFunction& f, const ObjectiveEngine& engine) {
  const LinearMdp& lin = engine.lin();
  auto refit = [&](int h) {
    auto w = engine.fit_max_targets(f, h);
    return w ? project_theta(std::move(*w), lin, h)
             : Eigen::VectorXd(Eigen::VectorXd::Zero(lin.dim()));
  };
  if (lin.core().is_episodic()) {
    for (int h = lin.num_steps() - 1; h >= 0; --h) f.theta[h] = refit(h);
    return;
  }
  constexpr int kMaxSweeps = 10000;
  for (int k = 0; k < kMaxSweeps; ++k) {
    Eigen::VectorXd next = refit(0);
    const double change = (next - f.theta[0]).lpNorm<Eigen::Infinity>();
    f.theta[0] = std::move(next);
    if (change <= 1e-10) return;
  }
}

}  // namespace

RegretLog run_vac_episodic(const LinearMdp& lin, long T, double alpha,
                           double B, const AgentOptions& opts,
                           std::uint64_t seed) {
  if (!lin.core().is_episodic()) {
    throw invalid_argument("run_vac_episodic needs an episodic instance");
  }
  return run_vac(lin, T, alpha, B, opts, seed, "vac");
}

RegretLog run_vac_discounted(const LinearMdp& lin, long T, double alpha,
                             double B, const AgentOptions& opts,
                             std::uint64_t seed) {
  if (lin.core().is_episodic()) {
    throw invalid_argument("run_vac_discounted needs a discounted instance");
  }
  return run_vac(lin, T, alpha, B, opts, seed, "vac");
}

BaselineKind parse_baseline(const std::string& name) {
  if (name == "vanilla_ac") return BaselineKind::vanilla_ac;
  if (name == "eps_greedy") return BaselineKind::eps_greedy;
  if (name == "mex") return BaselineKind::mex;
  throw invalid_argument("unknown baseline '" + name + "'");
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::vanilla_ac: return "vanilla_ac";
    case BaselineKind::eps_greedy: return "eps_greedy";
    case BaselineKind::mex: return "mex";
  }
  return "unknown";
}

RegretLog run_baseline(BaselineKind kind, const LinearMdp& lin, long T,
                       const BaselineParams& params, const AgentOptions& opts,
                       std::uint64_t seed) {
  switch (kind) {
    case BaselineKind::vanilla_ac:
      return run_vac(lin, T, 0.0, params.B, opts, seed, "vanilla_ac");

    case BaselineKind::eps_greedy: {
      if (!(params.epsilon >= 0.0 && params.epsilon <= 1.0)) {
        throw invalid_argument("epsilon must lie in [0, 1]");
      }
      RegretLog log;
      log.agent = "eps_greedy";
      log.hyperparams = {{"epsilon", params.epsilon}};
      QFunction f = QFunction::zeros(lin);
      log = run_loop(lin, T, opts, seed, std::move(log),
                     [&](const ObjectiveEngine& engine, long t) {
                       fit_q_iteration(f, engine);
                       const auto greedy = greedy_policy(f, lin);
                       const auto res = engine.evaluate(f, greedy, 0.0, false);
                       if (opts.on_round) {
                         opts.on_round(t, f, LogLinearPolicy::zeros(lin));
                       }
                       return Decision{epsilon_greedy(f, lin, params.epsilon),
                                       res.value, res.loss};
                     });
      log.final_f = f;
      log.final_pi = LogLinearPolicy::zeros(lin);
      return log;
    }

    case BaselineKind::mex: {
      if (!(params.alpha >= 0.0)) throw invalid_argument("alpha must be >= 0");
      RegretLog log;
      log.agent = "mex";
      log.hyperparams = {{"alpha", params.alpha},
                         {"solver", opts.solver.to_json()}};
      QFunction f = QFunction::zeros(lin);
      log = run_loop(lin, T, opts, seed, std::move(log),
                     [&](const ObjectiveEngine& engine, long t) {
                       auto res = solve_mex_round(engine, params.alpha, f,
                                                  opts.solver);
                       f = std::move(res.f);
                       if (opts.on_round) opts.on_round(t, f, res.pi);
                       return Decision{greedy_policy(f, lin), res.objective,
                                       res.loss};
                     });
      log.final_f = f;
      log.final_pi = LogLinearPolicy::zeros(lin);
      return log;
    }
  }
  throw invalid_argument("unknown baseline");
}

}  // namespace vacbench
