// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vacbench/func_approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vacbench/error.hpp"

namespace vacbench {

namespace {

// Rescale only when strictly outside, so that projecting a projected vector
// is the identity.
constexpr double kProjectSlack = 4 * std::numeric_limits<double>::epsilon();
constexpr int kDykstraCycles = 10000;

void check_stage(const LinearMdp& lin, int h, bool allow_terminal) {
  const int limit = lin.num_steps() + (allow_terminal ? 1 : 0);
  if (h < 0 || h >= limit) {
    throw invalid_argument("stage index " + std::to_string(h) +
                           " out of range");
  }
}

Eigen::VectorXd radial(Eigen::VectorXd v, double radius) {
  const double norm = v.norm();
  if (norm > radius * (1.0 + kProjectSlack)) v *= radius / norm;
  return v;
}

}  // namespace

QFunction QFunction::zeros(const LinearMdp& lin) {
  return {std::vector<Eigen::VectorXd>(lin.num_steps(),
                                       Eigen::VectorXd::Zero(lin.dim()))};
}

QFunction QFunction::optimistic(const LinearMdp& lin) {
  QFunction f;
  for (int h = 0; h < lin.num_steps(); ++h) {
    const Eigen::MatrixXd& phi = lin.features(h);
    const Eigen::VectorXd target =
        Eigen::VectorXd::Constant(phi.rows(), f_bound(lin, h));
    Eigen::VectorXd theta = phi.completeOrthogonalDecomposition().solve(target);
    f.theta.push_back(project_theta(std::move(theta), lin, h));
  }
  return f;
}

LogLinearPolicy LogLinearPolicy::zeros(const LinearMdp& lin) {
  return {std::vector<Eigen::VectorXd>(lin.num_steps(),
                                       Eigen::VectorXd::Zero(lin.dim()))};
}

double theta_radius(const LinearMdp& lin, int h) {
  return f_bound(lin, h) * std::sqrt(static_cast<double>(lin.dim()));
}

double f_bound(const LinearMdp& lin, int h) {
  const auto& core = lin.core();
  if (core.is_episodic()) return static_cast<double>(core.horizon() - h);
  return 1.0 / (1.0 - core.gamma());
}

double omega_radius(const LinearMdp& lin, double B) {
  const auto& core = lin.core();
  const double sqrt_d = std::sqrt(static_cast<double>(lin.dim()));
  if (core.is_episodic()) return B * core.horizon() * sqrt_d;
  return B * sqrt_d / (1.0 - core.gamma());
}

double q_eval(const QFunction& f, const LinearMdp& lin, int h, int s, int a) {
  const auto& core = lin.core();
  if (core.is_episodic()) {
    check_stage(lin, h, true);
    if (h == lin.num_steps()) return 0.0;
  } else {
    check_stage(lin, h, false);
  }
  if (s < 0 || s >= core.num_states() || a < 0 || a >= core.num_actions()) {
    throw invalid_argument("q_eval: (s, a) out of range");
  }
  return lin.phi(h, s, a).dot(f.theta[h]);
}

Eigen::VectorXd q_table(const QFunction& f, const LinearMdp& lin, int h) {
  check_stage(lin, h, false);
  return lin.features(h) * f.theta[h];
}

void softmax(std::span<const double> logits, std::span<double> out) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  for (auto& p : out) p /= sum;
}

void policy_probs(const LogLinearPolicy& pi, const LinearMdp& lin, int h,
                  int s, std::span<double> out) {
  check_stage(lin, h, false);
  const int A = lin.core().num_actions();
  const Eigen::VectorXd logits =
      lin.features(h).middleRows(s * A, A) * pi.omega[h];
  softmax({logits.data(), static_cast<std::size_t>(A)}, out);
}

PolicyTable policy_table(const LogLinearPolicy& pi, const LinearMdp& lin) {
  const auto& core = lin.core();
  PolicyTable table(core.num_steps(), core.num_states(), core.num_actions());
  for (int h = 0; h < core.num_steps(); ++h) {
    for (int s = 0; s < core.num_states(); ++s) {
      policy_probs(pi, lin, h, s, table.row(h, s));
    }
  }
  return table;
}

// Euclidean projection onto {||theta|| <= R} intersected with the slabs
// {|phi_i^T theta| <= bound}, by Dykstra's alternating projections. With
// one-hot features the slabs are coordinate boxes and one cycle suffices.
Eigen::VectorXd project_theta(Eigen::VectorXd theta, const LinearMdp& lin,
                              int h) {
  const Eigen::MatrixXd& phi = lin.features(h);
  const double radius = theta_radius(lin, h);
  const double bound = f_bound(lin, h);
  auto feasible = [&](const Eigen::VectorXd& x) {
    return x.norm() <= radius * (1.0 + kProjectSlack) &&
           (phi * x).cwiseAbs().maxCoeff() <= bound * (1.0 + kProjectSlack);
  };
  if (feasible(theta)) return theta;

  std::vector<int> rows;
  for (int i = 0; i < phi.rows(); ++i) {
    if (phi.row(i).squaredNorm() > 0.0) rows.push_back(i);
  }
  const int d = static_cast<int>(theta.size());
  std::vector<Eigen::VectorXd> incr(rows.size() + 1, Eigen::VectorXd::Zero(d));
  for (int cycle = 0; cycle < kDykstraCycles; ++cycle) {
    const Eigen::VectorXd start = theta;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const Eigen::VectorXd y0 = theta + incr[k];
      Eigen::VectorXd y = y0;
      const auto row = phi.row(rows[k]);
      const double v = row.dot(y);
      if (std::abs(v) > bound) {
        y -= ((v - std::copysign(bound, v)) / row.squaredNorm()) *
             row.transpose();
      }
      incr[k] = y0 - y;
      theta = std::move(y);
    }
    const Eigen::VectorXd y0 = theta + incr.back();
    Eigen::VectorXd y = radial(y0, radius);
    incr.back() = y0 - y;
    theta = std::move(y);
    if ((theta - start).norm() <= 1e-15 * (1.0 + radius)) break;
  }
  // Guard against residual infeasibility from the iteration cap.
  theta = radial(std::move(theta), radius);
  const double sup = (phi * theta).cwiseAbs().maxCoeff();
  if (sup > bound * (1.0 + kProjectSlack)) theta *= bound / sup;
  return theta;
}

QFunction project(QFunction f, const LinearMdp& lin) {
  for (int h = 0; h < lin.num_steps(); ++h) {
    f.theta[h] = project_theta(std::move(f.theta[h]), lin, h);
  }
  return f;
}

LogLinearPolicy project(LogLinearPolicy pi, const LinearMdp& lin, double B) {
  const double radius = omega_radius(lin, B);
  for (auto& w : pi.omega) w = radial(std::move(w), radius);
  return pi;
}

bool in_q_class(const QFunction& f, const LinearMdp& lin, double tol) {
  for (int h = 0; h < lin.num_steps(); ++h) {
    if (f.theta[h].norm() > theta_radius(lin, h) * (1.0 + tol)) return false;
    const double sup = (lin.features(h) * f.theta[h]).cwiseAbs().maxCoeff();
    if (sup > f_bound(lin, h) * (1.0 + tol)) return false;
  }
  return true;
}

bool in_policy_class(const LogLinearPolicy& pi, const LinearMdp& lin,
                     double B, double tol) {
  const double radius = omega_radius(lin, B);
  for (const auto& w : pi.omega) {
    if (w.norm() > radius * (1.0 + tol)) return false;
  }
  return true;
}

std::vector<double> value_of_f_states(const QFunction& f,
                                      const PolicyTable& pi,
                                      const LinearMdp& lin, int h) {
  const int S = lin.core().num_states();
  const int A = lin.core().num_actions();
  const Eigen::VectorXd q = q_table(f, lin, h);
  std::vector<double> v(S, 0.0);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) v[s] += pi(h, s, a) * q(s * A + a);
  }
  return v;
}

double value_of_f_under_pi(const QFunction& f, const PolicyTable& pi,
                           const LinearMdp& lin) {
  const auto v = value_of_f_states(f, pi, lin, 0);
  const auto rho = lin.core().rho();
  double acc = 0.0;
  for (std::size_t s = 0; s < v.size(); ++s) acc += rho[s] * v[s];
  return acc;
}

nlohmann::json params_to_json(const std::vector<Eigen::VectorXd>& params) {
  nlohmann::json doc = nlohmann::json::object();
  for (std::size_t h = 0; h < params.size(); ++h) {
    doc[std::to_string(h + 1)] = std::vector<double>(
        params[h].data(), params[h].data() + params[h].size());
  }
  return doc;
}

std::vector<Eigen::VectorXd> params_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw invalid_argument("checkpoint: expected object");
  std::vector<Eigen::VectorXd> out(doc.size());
  for (std::size_t h = 0; h < out.size(); ++h) {
    const auto key = std::to_string(h + 1);
    if (!doc.contains(key)) {
      throw invalid_argument("checkpoint: missing stage " + key);
    }
    const auto values = doc.at(key).get<std::vector<double>>();
    out[h] = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                               static_cast<Eigen::Index>(
                                                   values.size()));
  }
  return out;
}

}  // namespace vacbench
