// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vacbench/linear_mdp.hpp"

#include <cmath>

#include "vacbench/error.hpp"

namespace vacbench {

namespace {
constexpr double kIdentityTol = 1e-10;
}

LinearMdp::LinearMdp(TabularCore core, std::vector<Eigen::MatrixXd> features,
                     std::vector<Eigen::VectorXd> zeta,
                     std::vector<Eigen::MatrixXd> mu)
    : core_(std::move(core)),
      features_(std::move(features)),
      zeta_(std::move(zeta)),
      mu_(std::move(mu)) {
  const int steps = core_.num_steps();
  const int S = core_.num_states();
  const int pairs = core_.num_pairs();
  if (static_cast<int>(features_.size()) != steps ||
      static_cast<int>(zeta_.size()) != steps ||
      static_cast<int>(mu_.size()) != steps) {
    throw invalid_argument("linear MDP: need one feature/zeta/mu per step");
  }
  dim_ = static_cast<int>(features_[0].cols());
  if (dim_ < 1) throw invalid_argument("linear MDP: feature dimension is 0");
  const double sqrt_d = std::sqrt(static_cast<double>(dim_));
  for (int h = 0; h < steps; ++h) {
    if (features_[h].rows() != pairs || features_[h].cols() != dim_ ||
        zeta_[h].size() != dim_ || mu_[h].rows() != dim_ ||
        mu_[h].cols() != S) {
      throw invalid_argument("linear MDP: inconsistent shapes at step " +
                             std::to_string(h));
    }
    for (int i = 0; i < pairs; ++i) {
      if (features_[h].row(i).norm() > 1.0 + kIdentityTol) {
        throw invalid_argument("linear MDP: ||phi|| > 1");
      }
    }
    if (zeta_[h].norm() > sqrt_d + kIdentityTol) {
      throw invalid_argument("linear MDP: ||zeta|| > sqrt(d)");
    }
    // mu_h(S): total-variation-style measure of the whole state space.
    const Eigen::VectorXd mass = mu_[h].cwiseAbs().rowwise().sum();
    if (mass.norm() > sqrt_d + kIdentityTol) {
      throw invalid_argument("linear MDP: ||mu(S)|| > sqrt(d)");
    }
  }
  if (max_reconstruction_error() > kIdentityTol) {
    throw invalid_argument("linear MDP: features do not reproduce r and P");
  }
}

double LinearMdp::max_reconstruction_error() const {
  const int S = core_.num_states();
  const int A = core_.num_actions();
  double worst = 0.0;
  for (int h = 0; h < core_.num_steps(); ++h) {
    const Eigen::VectorXd r = features_[h] * zeta_[h];
    const Eigen::MatrixXd P = features_[h] * mu_[h];
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const int i = s * A + a;
        worst = std::max(worst, std::abs(r(i) - core_.reward(h, s, a)));
        const auto row = core_.transition(h, s, a);
        for (int sp = 0; sp < S; ++sp) {
          worst = std::max(worst, std::abs(P(i, sp) - row[sp]));
        }
      }
    }
  }
  return worst;
}

LinearMdp build_linear_from_tabular(const TabularCore& core) {
  const int S = core.num_states();
  const int A = core.num_actions();
  const int d = core.num_pairs();
  std::vector<Eigen::MatrixXd> features;
  std::vector<Eigen::VectorXd> zeta;
  std::vector<Eigen::MatrixXd> mu;
  for (int h = 0; h < core.num_steps(); ++h) {
    features.push_back(Eigen::MatrixXd::Identity(d, d));
    Eigen::VectorXd z(d);
    Eigen::MatrixXd m(d, S);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const int i = s * A + a;
        z(i) = core.reward(h, s, a);
        const auto row = core.transition(h, s, a);
        for (int sp = 0; sp < S; ++sp) m(i, sp) = row[sp];
      }
    }
    zeta.push_back(std::move(z));
    mu.push_back(std::move(m));
  }
  return LinearMdp(core, std::move(features), std::move(zeta), std::move(mu));
}

}  // namespace vacbench
