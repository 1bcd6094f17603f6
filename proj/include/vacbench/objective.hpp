// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "vacbench/func_approx.hpp"
#include "vacbench/linear_mdp.hpp"
#include "vacbench/mdp.hpp"

namespace vacbench {

inline constexpr double kDefaultRidge = 1e-8;

struct Transition {
  int state;
  int action;
  double reward;
  int next_state;
};

/// Per-stage transition lists D_h. Episodic runs append one tuple per stage
/// per episode; discounted runs append one tuple to stage 0 per round.
class TransitionDataset {
 public:
  explicit TransitionDataset(int num_steps)
      : tuples_(num_steps), episodes_(num_steps) {}

  void add(int h, const Transition& t, long episode);
  void add_trajectory(const Trajectory& traj, long episode);

  int num_steps() const { return static_cast<int>(tuples_.size()); }
  std::size_t size(int h) const { return tuples_[h].size(); }
  bool empty() const;
  std::span<const Transition> step(int h) const { return tuples_[h]; }
  /// Which episode contributed each tuple of stage h.
  std::span<const long> episodes(int h) const { return episodes_[h]; }

 private:
  std::vector<std::vector<Transition>> tuples_;
  std::vector<std::vector<long>> episodes_;
};

/// Inner least-squares fit: the minimizing g_h and the attained value of
/// sum_xi E_{a'}(r + c f_{h+1}(s',a') - phi^T g)^2 (c = gamma when
/// discounted).
struct InnerFit {
  Eigen::VectorXd g;
  double min_value = 0.0;
};

/// Diagnostic bundle for one evaluation of the regularized objective.
struct ObjectiveReport {
  /// kappa * V^pi_f(rho) - alpha * loss, kappa = 1 (episodic) or 1-gamma.
  double value = 0.0;
  double loss_value = 0.0;
  /// Unscaled V^pi_f(rho).
  double fictitious_value = 0.0;
  std::vector<Eigen::VectorXd> fitted_g;
  std::vector<Eigen::VectorXd> grad_theta;
  std::vector<Eigen::VectorXd> grad_omega;

  nlohmann::json to_json() const;
};

/// Evaluates the loss and objective against one dataset snapshot.
///
/// The snapshot is compressed to distinct (s, a, s') tuples with counts, and
/// the ridge-regularized Gram matrix of every stage is factorized once, so
/// repeated evaluations inside an optimizer only pay for targets and sums.
class ObjectiveEngine {
 public:
  ObjectiveEngine(const LinearMdp& lin, const TransitionDataset& data,
                  double ridge = kDefaultRidge);

  /// Policy given as an explicit table. With gradients, `grad_table` holds
  /// the partial derivatives of the objective in each table entry.
  struct TableResult {
    double value = 0.0;
    double loss = 0.0;
    double fictitious_value = 0.0;
    std::vector<Eigen::VectorXd> fitted_g;
    std::vector<double> loss_per_step;
    std::vector<Eigen::VectorXd> grad_theta;
    std::vector<std::vector<double>> grad_table;  // [h][s*A + a]
  };
  TableResult evaluate(const QFunction& f, const PolicyTable& pi, double alpha,
                       bool with_gradients) const;

  ObjectiveReport evaluate(const QFunction& f, const LogLinearPolicy& pi,
                           double alpha, bool with_gradients) const;

  /// Inner fit at stage h, or nullopt when D_h is empty.
  std::optional<InnerFit> fit(const QFunction& f, const PolicyTable& pi,
                              int h) const;

  /// Loss with max_a f_{h+1}(s', a) targets in place of the policy average.
  double mex_loss(const QFunction& f) const;

  /// Unconstrained least-squares weights for targets r + c max_a f_next(s',a)
  /// at stage h, or nullopt when D_h is empty.
  std::optional<Eigen::VectorXd> fit_max_targets(const QFunction& f,
                                                 int h) const;

  const LinearMdp& lin() const { return lin_; }
  bool has_data(int h) const { return !steps_[h].entries.empty(); }

 private:
  struct Entry {
    int state;
    int action;
    int next_state;
    double reward;
    double count;
  };
  struct StepData {
    std::vector<Entry> entries;
    Eigen::LDLT<Eigen::MatrixXd> gram;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> gram_pinv;
    bool use_pinv = false;
  };

  int next_stage(int h) const;
  double target_scale() const;
  double value_scale() const;
  Eigen::VectorXd solve_gram(int h, const Eigen::VectorXd& rhs) const;
  /// Projects an inner solution that leaves the Q ball and falls back to
  /// theta_h when that attains a lower value.
  Eigen::VectorXd constrain_g(int h, Eigen::VectorXd g,
                              const Eigen::VectorXd& theta_h,
                              const std::vector<double>& ybar) const;
  /// Policy-averaged targets r + c * E_{a'} f_next(s', a') per entry.
  std::vector<double> averaged_targets(int h,
                                       const std::vector<Eigen::VectorXd>& q,
                                       const PolicyTable& pi) const;
  Eigen::VectorXd fit_targets(int h, const std::vector<double>& ybar) const;
  std::vector<double> max_targets(int h,
                                  const std::vector<Eigen::VectorXd>& q) const;

  const LinearMdp& lin_;
  std::vector<StepData> steps_;
};

/// Greedy point-mass policy of f at every stage, ties to the lowest action.
PolicyTable greedy_policy(const QFunction& f, const LinearMdp& lin);

/// Chain rule through the softmax: gradient in omega_h from partial
/// derivatives with respect to the policy table of stage h.
Eigen::VectorXd softmax_chain(const LinearMdp& lin, const PolicyTable& pi,
                              int h, const std::vector<double>& grad_table);

std::optional<InnerFit> fit_inner_g(const QFunction& f, const PolicyTable& pi,
                                    const TransitionDataset& data,
                                    const LinearMdp& lin, int h,
                                    double ridge = kDefaultRidge);

double vac_loss(const QFunction& f, const PolicyTable& pi,
                const TransitionDataset& data, const LinearMdp& lin,
                double ridge = kDefaultRidge);
double vac_loss(const QFunction& f, const LogLinearPolicy& pi,
                const TransitionDataset& data, const LinearMdp& lin,
                double ridge = kDefaultRidge);

ObjectiveReport vac_objective(const QFunction& f, const LogLinearPolicy& pi,
                              const TransitionDataset& data,
                              const LinearMdp& lin, double alpha,
                              double ridge = kDefaultRidge);

struct ObjectiveGradient {
  std::vector<Eigen::VectorXd> theta;
  std::vector<Eigen::VectorXd> omega;
};

/// Analytic gradient of vac_objective. The fitted g is held fixed
/// (envelope theorem), which is exact when the inner minimizer is interior.
ObjectiveGradient grad_objective(const QFunction& f, const LogLinearPolicy& pi,
                                 const TransitionDataset& data,
                                 const LinearMdp& lin, double alpha,
                                 double ridge = kDefaultRidge);

double mex_loss(const QFunction& f, const TransitionDataset& data,
                const LinearMdp& lin, double ridge = kDefaultRidge);

}  // namespace vacbench
