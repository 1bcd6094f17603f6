// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vacbench/mdp.hpp"

namespace vacbench {

/// A tabular core together with a feature map phi_h(s,a) in R^d and the
/// hidden parameters (zeta_h, mu_h) that realize r_h = phi^T zeta_h and
/// P_h(s'|s,a) = phi^T mu_h(s').
///
/// Agents only ever read `features()`; zeta and mu exist for the oracles.
class LinearMdp {
 public:
  /// Checks the linear-MDP identities and norm bounds to 1e-10.
  LinearMdp(TabularCore core, std::vector<Eigen::MatrixXd> features,
            std::vector<Eigen::VectorXd> zeta,
            std::vector<Eigen::MatrixXd> mu);

  const TabularCore& core() const { return core_; }
  int dim() const { return dim_; }
  int num_steps() const { return core_.num_steps(); }

  /// (S*A) x d matrix whose row s*A+a is phi_h(s,a).
  const Eigen::MatrixXd& features(int h) const { return features_[h]; }
  auto phi(int h, int s, int a) const {
    return features_[h].row(s * core_.num_actions() + a).transpose();
  }
  const Eigen::VectorXd& zeta(int h) const { return zeta_[h]; }
  /// d x S matrix whose column s' is mu_h(s').
  const Eigen::MatrixXd& mu(int h) const { return mu_[h]; }

  /// Largest |phi^T r - reward| and |phi^T mu - P| over the instance.
  double max_reconstruction_error() const;

 private:
  TabularCore core_;
  int dim_ = 0;
  std::vector<Eigen::MatrixXd> features_;
  std::vector<Eigen::VectorXd> zeta_;
  std::vector<Eigen::MatrixXd> mu_;
};

/// One-hot embedding: d = |S||A|, phi_h(s,a) = e_{s*A+a} at every step,
/// zeta_h = r_h and mu_h(s')[s*A+a] = P_h(s'|s,a).
LinearMdp build_linear_from_tabular(const TabularCore& core);

}  // namespace vacbench
