// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vacbench/rng.hpp"

namespace vacbench {

enum class Mode { episodic, discounted };

/// Ground-truth finite MDP.
///
/// Steps are 0-based internally: an episodic core has steps 0..H-1 with
/// step-dependent rewards and kernels. A discounted core has a single
/// stationary stage, addressed as step 0.
class TabularCore {
 public:
  /// `reward` is [h][s][a] flattened, `transition` is [h][s][a][s'].
  static TabularCore episodic(int num_states, int num_actions, int horizon,
                              std::vector<double> reward,
                              std::vector<double> transition,
                              std::vector<double> rho);
  /// `reward` is [s][a] flattened, `transition` is [s][a][s'].
  static TabularCore discounted(int num_states, int num_actions, double gamma,
                                std::vector<double> reward,
                                std::vector<double> transition,
                                std::vector<double> rho);

  Mode mode() const { return mode_; }
  bool is_episodic() const { return mode_ == Mode::episodic; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int num_pairs() const { return num_states_ * num_actions_; }
  /// H for episodic cores. Throws for discounted ones.
  int horizon() const;
  /// gamma for discounted cores. Throws for episodic ones.
  double gamma() const;
  /// Number of parameter stages: H (episodic) or 1 (discounted).
  int num_steps() const { return num_steps_; }

  double reward(int h, int s, int a) const {
    return reward_[index(h, s, a)];
  }
  std::span<const double> transition(int h, int s, int a) const {
    return {transition_.data() + index(h, s, a) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }
  std::span<const double> rho() const { return rho_; }

  const std::vector<double>& reward_data() const { return reward_; }
  const std::vector<double>& transition_data() const { return transition_; }

  std::size_t index(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states_ + s) * num_actions_ + a;
  }

  nlohmann::json to_json() const;
  static TabularCore from_json(const nlohmann::json& doc);
  static TabularCore load(const std::string& path);
  void save(const std::string& path) const;

 private:
  TabularCore() = default;
  void validate() const;

  Mode mode_ = Mode::episodic;
  int num_states_ = 0;
  int num_actions_ = 0;
  int num_steps_ = 0;
  int horizon_ = 0;
  double gamma_ = 0.0;
  std::vector<double> reward_;
  std::vector<double> transition_;
  std::vector<double> rho_;
};

/// Size spec for `make_instance`. Fields a kind does not use are ignored.
struct InstanceSpec {
  std::string kind;  // "random", "chain_lock", "two_state"
  Mode mode = Mode::episodic;
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  double gamma = 0.0;
};

/// Instance generators. `random` normalizes i.i.d. uniforms into each
/// transition row and draws rewards uniformly on [0,1]. `chain_lock` has
/// states 0..H; at step h exactly one action (drawn from the seed) advances
/// the chain, every other action resets to state 0, and reward 1 is paid only
/// for the advancing action at state H-1 (the last step on the chain).
/// `two_state` is the fixed 2x2 fixture documented in fixtures/.
TabularCore make_instance(const InstanceSpec& spec, std::uint64_t seed);

/// The advancing action per step of a chain_lock instance built from `seed`.
std::vector<int> chain_lock_key(int horizon, int num_actions,
                                std::uint64_t seed);

/// Explicit stochastic policy: probabilities [h][s][a] for every stage.
class PolicyTable {
 public:
  PolicyTable() = default;
  PolicyTable(int num_steps, int num_states, int num_actions);

  static PolicyTable uniform(const TabularCore& mdp);
  /// Point mass on `actions[h*S + s]`.
  static PolicyTable deterministic(const TabularCore& mdp,
                                   std::span<const int> actions);

  int num_steps() const { return num_steps_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  std::span<double> row(int h, int s) {
    return {probs_.data() + offset(h, s),
            static_cast<std::size_t>(num_actions_)};
  }
  std::span<const double> row(int h, int s) const {
    return {probs_.data() + offset(h, s),
            static_cast<std::size_t>(num_actions_)};
  }
  double operator()(int h, int s, int a) const {
    return probs_[offset(h, s) + a];
  }

  /// Throws unless every row is a probability vector within 1e-10.
  void check_stochastic() const;
  void check_compatible(const TabularCore& mdp) const;

 private:
  std::size_t offset(int h, int s) const {
    return (static_cast<std::size_t>(h) * num_states_ + s) * num_actions_;
  }
  int num_steps_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> probs_;
};

/// Per-stage value tables. Episodic: `v[h]` has S entries and `q[h]` has S*A
/// entries for h = 0..H-1. Discounted: a single stage.
struct ValueTables {
  std::vector<std::vector<double>> v;
  std::vector<std::vector<double>> q;

  double q_at(int h, int s, int a, int num_actions) const {
    return q[h][static_cast<std::size_t>(s) * num_actions + a];
  }
  /// Expected stage-0 value under the initial distribution.
  double at_rho(std::span<const double> rho) const;
};

struct OptimalSolution {
  ValueTables values;
  std::vector<int> greedy;  // [h*S + s], ties to the lowest action index
};

ValueTables exact_policy_values(const TabularCore& mdp, const PolicyTable& pi);
OptimalSolution exact_optimal_values(const TabularCore& mdp);

/// Episodic: one S*A table per step. Discounted: a single normalized
/// occupancy table (1-gamma) sum_h gamma^h P(s_h=s, a_h=a).
std::vector<std::vector<double>> visitation_distributions(
    const TabularCore& mdp, const PolicyTable& pi);

struct Step {
  int state;
  int action;
  double reward;
  int next_state;
};
using Trajectory = std::vector<Step>;

Trajectory rollout(const TabularCore& mdp, const PolicyTable& pi, Rng& rng);

struct DiscountedSample {
  int state;
  int action;
  int next_state;
  /// Index h of the emitted pair; the loop drew h+1 state-action pairs.
  long step_index;
};

inline constexpr long kSamplerIterationCap = 10'000'000;

DiscountedSample sample_discounted(const TabularCore& mdp,
                                   const PolicyTable& pi, Rng& rng);

}  // namespace vacbench
