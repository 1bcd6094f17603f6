// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vacbench/mdp.hpp"

namespace vacbench {

struct CheckResult {
  std::string name;
  bool pass = false;
  double max_error = 0.0;
  nlohmann::json details = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// lambda (delta - Q) + (beta/2) lambda^2 with lambda = (Q - g)/beta equals
/// [(delta - g)^2 - (delta - Q)^2] / (2 beta). `flip_sign` swaps the two
/// squares on the right, which must make the check fail.
CheckResult check_reparam_identity(long samples, std::uint64_t seed,
                                   bool flip_sign = false);

/// On random one-hot instances, P^pi f for random f and pi is interpolated
/// exactly by a parameter inside the Q ball, and so is Q*.
CheckResult check_bellman_completeness(int instances, std::uint64_t seed);

/// 0 <= max_a Q*_h(s,a) - sum_a softmax(B Q*_h(s,.))_a Q*_h(s,a) <=
/// log|A| / B for every stage, state and B.
CheckResult check_model_error_bound(const TabularCore& core,
                                    const std::vector<double>& betas);
/// The same over `instances` random 5x3, H=4 instances.
CheckResult check_model_error_bound(int instances,
                                    const std::vector<double>& betas,
                                    std::uint64_t seed);

/// Population Lagrangian (closed-form inner inf over lambda) against the
/// reparameterized max-target objective (inner sup over g at the conditional
/// mean), under the visitation of the uniform behaviour policy.
CheckResult check_lagrangian_equivalence(const TabularCore& core,
                                         const std::vector<double>& betas,
                                         int samples, std::uint64_t seed);

/// Empirical (s,a) law of the discounted sampler against the exact
/// occupancy, the mean loop length against 1/(1-gamma), and a chi-square
/// goodness of fit of the loop lengths to Geometric(1-gamma).
CheckResult check_sampler_distribution(const TabularCore& core,
                                       const PolicyTable& pi, long draws,
                                       std::uint64_t seed);

struct VerifyOptions {
  std::uint64_t seed = 0;
  bool flip_reparam_sign = false;
};

/// Runs the five checks with their default parameters.
std::vector<CheckResult> run_verify_suite(const VerifyOptions& opts);

/// {name: {pass, maxError, details}} for every check.
nlohmann::json verify_report(const std::vector<CheckResult>& results);

/// Upper quantile of chi-square with `dof` degrees of freedom at level
/// 0.001.
double chi_square_critical_001(int dof);

}  // namespace vacbench
