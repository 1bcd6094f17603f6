// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vacbench/objective.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "vacbench/error.hpp"

namespace vacbench {

// ---------------------------------------------------------------------------
// TransitionDataset

void TransitionDataset::add(int h, const Transition& t, long episode) {
  if (h < 0 || h >= num_steps()) {
    throw invalid_argument("dataset: stage out of range");
  }
  tuples_[h].push_back(t);
  episodes_[h].push_back(episode);
}

void TransitionDataset::add_trajectory(const Trajectory& traj, long episode) {
  if (static_cast<int>(traj.size()) != num_steps()) {
    throw invalid_argument("dataset: trajectory length does not match H");
  }
  for (int h = 0; h < num_steps(); ++h) {
    const auto& st = traj[h];
    add(h, {st.state, st.action, st.reward, st.next_state}, episode);
  }
}

bool TransitionDataset::empty() const {
  return std::all_of(tuples_.begin(), tuples_.end(),
                     [](const auto& v) { return v.empty(); });
}

nlohmann::json ObjectiveReport::to_json() const {
  return {{"value", value},
          {"loss", loss_value},
          {"fictitious_value", fictitious_value},
          {"fitted_g", params_to_json(fitted_g)},
          {"grad_theta", params_to_json(grad_theta)},
          {"grad_omega", params_to_json(grad_omega)}};
}

// ---------------------------------------------------------------------------
// ObjectiveEngine

ObjectiveEngine::ObjectiveEngine(const LinearMdp& lin,
                                 const TransitionDataset& data, double ridge)
    : lin_(lin), steps_(lin.num_steps()) {
  if (data.num_steps() != lin.num_steps()) {
    throw invalid_argument("dataset stage count does not match the instance");
  }
  if (!(ridge >= 0.0)) throw invalid_argument("ridge must be >= 0");
  const auto& core = lin.core();
  const int d = lin.dim();
  for (int h = 0; h < lin.num_steps(); ++h) {
    // Ordered map keeps the reduction order fixed for reproducibility.
    std::map<std::tuple<int, int, int>, Entry> merged;
    for (const auto& t : data.step(h)) {
      if (t.state < 0 || t.state >= core.num_states() || t.action < 0 ||
          t.action >= core.num_actions() || t.next_state < 0 ||
          t.next_state >= core.num_states()) {
        throw invalid_argument("dataset: tuple index out of range");
      }
      auto [it, inserted] = merged.try_emplace(
          {t.state, t.action, t.next_state},
          Entry{t.state, t.action, t.next_state, t.reward, 0.0});
      it->second.count += 1.0;
    }
    auto& step = steps_[h];
    for (const auto& [key, entry] : merged) step.entries.push_back(entry);
    if (step.entries.empty()) continue;

    Eigen::MatrixXd gram = ridge * Eigen::MatrixXd::Identity(d, d);
    for (const auto& e : step.entries) {
      const auto phi = lin.phi(h, e.state, e.action);
      gram.noalias() += e.count * phi * phi.transpose();
    }
    if (ridge > 0.0) {
      step.gram.compute(gram);
    } else {
      step.use_pinv = true;
      step.gram_pinv.compute(gram);
    }
  }
}

int ObjectiveEngine::next_stage(int h) const {
  if (!lin_.core().is_episodic()) return 0;
  return h + 1 < lin_.num_steps() ? h + 1 : -1;
}

double ObjectiveEngine::target_scale() const {
  return lin_.core().is_episodic() ? 1.0 : lin_.core().gamma();
}

double ObjectiveEngine::value_scale() const {
  return lin_.core().is_episodic() ? 1.0 : 1.0 - lin_.core().gamma();
}

Eigen::VectorXd ObjectiveEngine::solve_gram(int h,
                                            const Eigen::VectorXd& rhs) const {
  const auto& step = steps_[h];
  return step.use_pinv ? Eigen::VectorXd(step.gram_pinv.solve(rhs))
                       : Eigen::VectorXd(step.gram.solve(rhs));
}

std::vector<double> ObjectiveEngine::averaged_targets(
    int h, const std::vector<Eigen::VectorXd>& q, const PolicyTable& pi) const {
  const auto& entries = steps_[h].entries;
  const int nh = next_stage(h);
  const int A = lin_.core().num_actions();
  const double c = target_scale();
  std::vector<double> ybar(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    double next = 0.0;
    if (nh >= 0) {
      for (int ap = 0; ap < A; ++ap) {
        next += pi(nh, e.next_state, ap) * q[nh](e.next_state * A + ap);
      }
    }
    ybar[i] = e.reward + c * next;
  }
  return ybar;
}

Eigen::VectorXd ObjectiveEngine::fit_targets(
    int h, const std::vector<double>& ybar) const {
  const auto& entries = steps_[h].entries;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(lin_.dim());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    rhs.noalias() += (e.count * ybar[i]) * lin_.phi(h, e.state, e.action);
  }
  return solve_gram(h, rhs);
}

Eigen::VectorXd ObjectiveEngine::constrain_g(
    int h, Eigen::VectorXd g, const Eigen::VectorXd& theta_h,
    const std::vector<double>& ybar) const {
  Eigen::VectorXd projected = project_theta(g, lin_, h);
  if (projected == g) return g;
  // The variance part of the inner value is the same for every g, so the
  // comparison only needs the averaged-target residuals.
  const auto& entries = steps_[h].entries;
  const int A = lin_.core().num_actions();
  const Eigen::VectorXd gp = lin_.features(h) * projected;
  const Eigen::VectorXd ft = lin_.features(h) * theta_h;
  double at_projected = 0.0;
  double at_theta = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const int sa = e.state * A + e.action;
    at_projected += e.count * (ybar[i] - gp(sa)) * (ybar[i] - gp(sa));
    at_theta += e.count * (ybar[i] - ft(sa)) * (ybar[i] - ft(sa));
  }
  return at_theta < at_projected ? theta_h : projected;
}

std::optional<InnerFit> ObjectiveEngine::fit(const QFunction& f,
                                             const PolicyTable& pi,
                                             int h) const {
  if (h < 0 || h >= lin_.num_steps()) {
    throw invalid_argument("fit: stage out of range");
  }
  if (!has_data(h)) return std::nullopt;
  std::vector<Eigen::VectorXd> q(lin_.num_steps());
  for (int k = 0; k < lin_.num_steps(); ++k) q[k] = q_table(f, lin_, k);
  const auto ybar = averaged_targets(h, q, pi);
  InnerFit out;
  out.g = constrain_g(h, fit_targets(h, ybar), f.theta[h], ybar);

  const Eigen::VectorXd gq = lin_.features(h) * out.g;
  const int nh = next_stage(h);
  const int A = lin_.core().num_actions();
  const double c = target_scale();
  for (const auto& e : steps_[h].entries) {
    const double fitted = gq(e.state * A + e.action);
    if (nh < 0) {
      out.min_value += e.count * (e.reward - fitted) * (e.reward - fitted);
      continue;
    }
    for (int ap = 0; ap < A; ++ap) {
      const double p = pi(nh, e.next_state, ap);
      if (p == 0.0) continue;
      const double y = e.reward + c * q[nh](e.next_state * A + ap);
      out.min_value += e.count * p * (y - fitted) * (y - fitted);
    }
  }
  return out;
}

ObjectiveEngine::TableResult ObjectiveEngine::evaluate(
    const QFunction& f, const PolicyTable& pi, double alpha,
    bool with_gradients) const {
  const auto& core = lin_.core();
  const int steps = lin_.num_steps();
  const int S = core.num_states();
  const int A = core.num_actions();
  const int d = lin_.dim();
  const double c = target_scale();
  const double kappa = value_scale();
  if (static_cast<int>(f.theta.size()) != steps) {
    throw invalid_argument("Q-function stage count does not match");
  }
  if (pi.num_steps() != steps || pi.num_states() != S ||
      pi.num_actions() != A) {
    throw invalid_argument("policy table shape does not match");
  }

  std::vector<Eigen::VectorXd> q(steps);
  for (int h = 0; h < steps; ++h) q[h] = lin_.features(h) * f.theta[h];

  TableResult out;
  out.fitted_g.assign(steps, Eigen::VectorXd::Zero(d));
  out.loss_per_step.assign(steps, 0.0);
  if (with_gradients) {
    out.grad_theta.assign(steps, Eigen::VectorXd::Zero(d));
    out.grad_table.assign(steps, std::vector<double>(S * A, 0.0));
  }

  for (int h = 0; h < steps; ++h) {
    const auto& entries = steps_[h].entries;
    if (entries.empty()) continue;
    const int nh = next_stage(h);
    const auto ybar = averaged_targets(h, q, pi);
    out.fitted_g[h] = constrain_g(h, fit_targets(h, ybar), f.theta[h], ybar);
    const Eigen::VectorXd gq = lin_.features(h) * out.fitted_g[h];

    double term = 0.0;
    double inner = 0.0;
    Eigen::VectorXd w;   // d loss / d f_h(s,a)
    Eigen::VectorXd u;   // d loss / d E_{a'} f_next(s', a'), times c
    if (with_gradients) {
      w = Eigen::VectorXd::Zero(S * A);
      u = Eigen::VectorXd::Zero(S);
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const int sa = e.state * A + e.action;
      const double fv = q[h](sa);
      const double gv = gq(sa);
      if (nh < 0) {
        term += e.count * (e.reward - fv) * (e.reward - fv);
        inner += e.count * (e.reward - gv) * (e.reward - gv);
      } else {
        for (int ap = 0; ap < A; ++ap) {
          const double p = pi(nh, e.next_state, ap);
          if (p == 0.0) continue;
          const double y = e.reward + c * q[nh](e.next_state * A + ap);
          term += e.count * p * (y - fv) * (y - fv);
          inner += e.count * p * (y - gv) * (y - gv);
        }
      }
      if (with_gradients) {
        w(sa) += 2.0 * e.count * (fv - ybar[i]);
        if (nh >= 0) u(e.next_state) += 2.0 * e.count * c * (gv - fv);
      }
    }
    out.loss_per_step[h] = term - inner;
    out.loss += out.loss_per_step[h];

    if (with_gradients) {
      out.grad_theta[h].noalias() -= alpha * lin_.features(h).transpose() * w;
      if (nh >= 0) {
        Eigen::VectorXd z(S * A);
        auto& table = out.grad_table[nh];
        for (int sp = 0; sp < S; ++sp) {
          for (int ap = 0; ap < A; ++ap) {
            z(sp * A + ap) = u(sp) * pi(nh, sp, ap);
            table[sp * A + ap] -= alpha * u(sp) * q[nh](sp * A + ap);
          }
        }
        out.grad_theta[nh].noalias() -=
            alpha * lin_.features(nh).transpose() * z;
      }
    }
  }

  const auto rho = core.rho();
  Eigen::VectorXd weights(S * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      weights(s * A + a) = rho[s] * pi(0, s, a);
      out.fictitious_value += weights(s * A + a) * q[0](s * A + a);
    }
  }
  out.value = kappa * out.fictitious_value - alpha * out.loss;
  if (with_gradients) {
    out.grad_theta[0].noalias() += kappa * lin_.features(0).transpose() * weights;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        out.grad_table[0][s * A + a] += kappa * rho[s] * q[0](s * A + a);
      }
    }
  }
  return out;
}

ObjectiveReport ObjectiveEngine::evaluate(const QFunction& f,
                                          const LogLinearPolicy& pi,
                                          double alpha,
                                          bool with_gradients) const {
  const PolicyTable table = policy_table(pi, lin_);
  auto res = evaluate(f, table, alpha, with_gradients);
  ObjectiveReport report;
  report.value = res.value;
  report.loss_value = res.loss;
  report.fictitious_value = res.fictitious_value;
  report.fitted_g = std::move(res.fitted_g);
  if (with_gradients) {
    report.grad_theta = std::move(res.grad_theta);
    report.grad_omega.reserve(lin_.num_steps());
    for (int h = 0; h < lin_.num_steps(); ++h) {
      report.grad_omega.push_back(
          softmax_chain(lin_, table, h, res.grad_table[h]));
    }
  }
  return report;
}

std::vector<double> ObjectiveEngine::max_targets(
    int h, const std::vector<Eigen::VectorXd>& q) const {
  const auto& entries = steps_[h].entries;
  const int nh = next_stage(h);
  const int A = lin_.core().num_actions();
  const double c = target_scale();
  std::vector<double> y(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    double best = 0.0;
    if (nh >= 0) {
      best = q[nh](e.next_state * A);
      for (int ap = 1; ap < A; ++ap) {
        best = std::max(best, q[nh](e.next_state * A + ap));
      }
    }
    y[i] = e.reward + c * best;
  }
  return y;
}

std::optional<Eigen::VectorXd> ObjectiveEngine::fit_max_targets(
    const QFunction& f, int h) const {
  if (h < 0 || h >= lin_.num_steps()) {
    throw invalid_argument("fit: stage out of range");
  }
  if (!has_data(h)) return std::nullopt;
  std::vector<Eigen::VectorXd> q(lin_.num_steps());
  for (int k = 0; k < lin_.num_steps(); ++k) q[k] = q_table(f, lin_, k);
  return fit_targets(h, max_targets(h, q));
}

double ObjectiveEngine::mex_loss(const QFunction& f) const {
  const int steps = lin_.num_steps();
  const int A = lin_.core().num_actions();
  std::vector<Eigen::VectorXd> q(steps);
  for (int h = 0; h < steps; ++h) q[h] = lin_.features(h) * f.theta[h];

  double loss = 0.0;
  for (int h = 0; h < steps; ++h) {
    const auto& entries = steps_[h].entries;
    if (entries.empty()) continue;
    const auto y = max_targets(h, q);
    const Eigen::VectorXd g = constrain_g(h, fit_targets(h, y), f.theta[h], y);
    const Eigen::VectorXd gq = lin_.features(h) * g;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      const int sa = e.state * A + e.action;
      loss += e.count * ((y[i] - q[h](sa)) * (y[i] - q[h](sa)) -
                         (y[i] - gq(sa)) * (y[i] - gq(sa)));
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Free functions

PolicyTable greedy_policy(const QFunction& f, const LinearMdp& lin) {
  const auto& core = lin.core();
  const int S = core.num_states();
  const int A = core.num_actions();
  PolicyTable pi(core.num_steps(), S, A);
  for (int h = 0; h < core.num_steps(); ++h) {
    const Eigen::VectorXd q = q_table(f, lin, h);
    for (int s = 0; s < S; ++s) {
      int best = 0;
      for (int a = 1; a < A; ++a) {
        if (q(s * A + a) > q(s * A + best)) best = a;
      }
      pi.row(h, s)[best] = 1.0;
    }
  }
  return pi;
}

Eigen::VectorXd softmax_chain(const LinearMdp& lin, const PolicyTable& pi,
                              int h, const std::vector<double>& grad_table) {
  const int S = lin.core().num_states();
  const int A = lin.core().num_actions();
  // d pi(a|s) / d omega = pi(a|s) (phi(s,a) - sum_b pi(b|s) phi(s,b))
  Eigen::VectorXd z(S * A);
  for (int s = 0; s < S; ++s) {
    double mean = 0.0;
    for (int a = 0; a < A; ++a) mean += pi(h, s, a) * grad_table[s * A + a];
    for (int a = 0; a < A; ++a) {
      z(s * A + a) = pi(h, s, a) * (grad_table[s * A + a] - mean);
    }
  }
  return lin.features(h).transpose() * z;
}

std::optional<InnerFit> fit_inner_g(const QFunction& f, const PolicyTable& pi,
                                    const TransitionDataset& data,
                                    const LinearMdp& lin, int h,
                                    double ridge) {
  return ObjectiveEngine(lin, data, ridge).fit(f, pi, h);
}

double vac_loss(const QFunction& f, const PolicyTable& pi,
                const TransitionDataset& data, const LinearMdp& lin,
                double ridge) {
  return ObjectiveEngine(lin, data, ridge).evaluate(f, pi, 0.0, false).loss;
}

double vac_loss(const QFunction& f, const LogLinearPolicy& pi,
                const TransitionDataset& data, const LinearMdp& lin,
                double ridge) {
  return vac_loss(f, policy_table(pi, lin), data, lin, ridge);
}

ObjectiveReport vac_objective(const QFunction& f, const LogLinearPolicy& pi,
                              const TransitionDataset& data,
                              const LinearMdp& lin, double alpha,
                              double ridge) {
  if (!(alpha >= 0.0)) throw invalid_argument("alpha must be >= 0");
  return ObjectiveEngine(lin, data, ridge).evaluate(f, pi, alpha, true);
}

ObjectiveGradient grad_objective(const QFunction& f, const LogLinearPolicy& pi,
                                 const TransitionDataset& data,
                                 const LinearMdp& lin, double alpha,
                                 double ridge) {
  auto report = vac_objective(f, pi, data, lin, alpha, ridge);
  return {std::move(report.grad_theta), std::move(report.grad_omega)};
}

double mex_loss(const QFunction& f, const TransitionDataset& data,
                const LinearMdp& lin, double ridge) {
  return ObjectiveEngine(lin, data, ridge).mex_loss(f);
}

}  // namespace vacbench
