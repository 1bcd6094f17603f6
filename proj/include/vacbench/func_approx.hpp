// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "vacbench/linear_mdp.hpp"

namespace vacbench {

/// Linear Q-function f_h = phi_h^T theta_h, one weight vector per stage.
/// Stage H (one past the last) is implicitly zero.
struct QFunction {
  std::vector<Eigen::VectorXd> theta;

  static QFunction zeros(const LinearMdp& lin);
  /// Least-squares fit of f_h = f_bound(h) everywhere, projected onto the
  /// class. With one-hot features every value sits exactly at its bound.
  static QFunction optimistic(const LinearMdp& lin);
};

/// Log-linear policy pi_h(a|s) = softmax_a(phi_h(s,a)^T omega_h).
struct LogLinearPolicy {
  std::vector<Eigen::VectorXd> omega;

  static LogLinearPolicy zeros(const LinearMdp& lin);
};

/// Radii of the parameter balls.
///
/// Episodic stage h (0-based): ||theta_h|| <= (H-h) sqrt(d),
/// |f_h| <= H-h, ||omega_h|| <= B H sqrt(d).
/// Discounted: ||theta|| <= sqrt(d)/(1-gamma), |f| <= 1/(1-gamma),
/// ||omega|| <= B sqrt(d)/(1-gamma).
double theta_radius(const LinearMdp& lin, int h);
double f_bound(const LinearMdp& lin, int h);
double omega_radius(const LinearMdp& lin, double B);

/// phi_h(s,a)^T theta_h, or 0 at h == num_steps() for episodic instances.
double q_eval(const QFunction& f, const LinearMdp& lin, int h, int s, int a);

/// All S*A values of f_h, indexed s*A + a.
Eigen::VectorXd q_table(const QFunction& f, const LinearMdp& lin, int h);

/// Max-shifted softmax. `out` must have the size of `logits`.
void softmax(std::span<const double> logits, std::span<double> out);

void policy_probs(const LogLinearPolicy& pi, const LinearMdp& lin, int h,
                  int s, std::span<double> out);
PolicyTable policy_table(const LogLinearPolicy& pi, const LinearMdp& lin);

/// Euclidean projection onto the theta ball intersected with
/// max_{s,a} |f_h(s,a)| <= f_bound on the finite instance. Points already in
/// the class are returned unchanged.
QFunction project(QFunction f, const LinearMdp& lin);
Eigen::VectorXd project_theta(Eigen::VectorXd theta, const LinearMdp& lin,
                              int h);
/// Radial projection of each omega_h onto its ball.
LogLinearPolicy project(LogLinearPolicy pi, const LinearMdp& lin, double B);

/// Both Q-class constraints hold at every stage (relative slack `tol`).
bool in_q_class(const QFunction& f, const LinearMdp& lin, double tol = 1e-12);
bool in_policy_class(const LogLinearPolicy& pi, const LinearMdp& lin,
                     double B, double tol = 1e-12);

/// V^pi_{f,h}(s) = sum_a pi_h(a|s) f_h(s,a) for every state.
std::vector<double> value_of_f_states(const QFunction& f,
                                      const PolicyTable& pi,
                                      const LinearMdp& lin, int h);
/// V^pi_f(rho) = sum_s rho(s) V^pi_{f,0}(s).
double value_of_f_under_pi(const QFunction& f, const PolicyTable& pi,
                           const LinearMdp& lin);

/// Checkpoint format: {"1": [...], "2": [...]} keyed by 1-based stage.
/// Doubles are written with round-trip precision.
nlohmann::json params_to_json(const std::vector<Eigen::VectorXd>& params);
std::vector<Eigen::VectorXd> params_from_json(const nlohmann::json& doc);

}  // namespace vacbench
