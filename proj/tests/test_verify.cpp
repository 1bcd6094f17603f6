// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "vacbench/verify.hpp"

using namespace vacbench;
using namespace vacbench::testing;

TEST_CASE("reparameterization identity holds and its fixture is pinned") {
  // lambda = (Q - g)/beta. With delta = Q, beta = 1 and g = Q - 1 the left
  // side is 0 + 1/2 and the right side [(delta-g)^2 - (delta-Q)^2]/2 = 1/2.
  const auto r = check_reparam_identity(10000, 1);
  CHECK(r.pass);
  CHECK(r.max_error <= 1e-9);
  CHECK(r.details["fixture"]["lhs"] == 0.5);
  CHECK(r.details["fixture"]["rhs"] == 0.5);
}

TEST_CASE("mutation: a flipped reparameterization sign is caught") {
  const auto r = check_reparam_identity(10000, 1, true);
  CHECK_FALSE(r.pass);
  CHECK(r.max_error > 1e-3);
  VerifyOptions opts;
  opts.flip_reparam_sign = true;
  bool any_failed = false;
  for (const auto& c : run_verify_suite(opts)) any_failed |= !c.pass;
  CHECK(any_failed);
}

TEST_CASE("Bellman completeness on 50 random triples") {
  const auto r = check_bellman_completeness(50, 2);
  CHECK(r.pass);
  CHECK(r.max_error <= 1e-8);
}

TEST_CASE("model-error bound on random instances and limits") {
  const auto r = check_model_error_bound(10, {1.0, 10.0, 100.0}, 3);
  CHECK(r.pass);
  // Large B makes the softmax policy greedy.
  const auto big = check_model_error_bound(two_state(2), {1e6});
  CHECK(big.pass);
  CHECK(big.details["max_gap"].get<double>() <= 1e-4);
  // A single action leaves no room for a gap.
  InstanceSpec spec;
  spec.kind = "random";
  spec.num_states = 3;
  spec.num_actions = 1;
  spec.horizon = 3;
  const auto single = check_model_error_bound(make_instance(spec, 1), {1.0, 10.0});
  CHECK(single.pass);
  CHECK(single.details["max_gap"].get<double>() == 0.0);
}

TEST_CASE("Lagrangian equivalence at the population level") {
  const auto r = check_lagrangian_equivalence(random_instance(5, 3, 4, 7),
                                              {0.5, 1.0, 2.0}, 100, 4);
  CHECK(r.pass);
  CHECK(r.max_error <= 1e-9);
}

TEST_CASE("sampler distribution checks") {
  const auto core = two_state_discounted(0.9);
  const auto r = check_sampler_distribution(core, PolicyTable::uniform(core),
                                            200000, 5);
  CHECK(r.pass);
  CHECK(r.details["tv"].get<double>() <= 0.02);
  const auto bandit = two_state_discounted(0.0);
  const auto b = check_sampler_distribution(bandit, PolicyTable::uniform(bandit),
                                            100000, 5);
  CHECK(b.pass);
  CHECK(b.details["tv"].get<double>() <= 0.01);
}

TEST_CASE("chi-square critical values at significance 0.001") {
  // Tabulated upper 0.1% points.
  CHECK(std::abs(chi_square_critical_001(10) - 29.588) <= 0.1);
  CHECK(std::abs(chi_square_critical_001(30) - 59.703) <= 0.1);
  CHECK(std::abs(chi_square_critical_001(100) - 149.449) <= 0.2);
}

TEST_CASE("suite report schema and determinism") {
  const auto a = run_verify_suite(VerifyOptions{});
  const auto b = run_verify_suite(VerifyOptions{});
  const auto report = verify_report(a);
  CHECK(report == verify_report(b));
  CHECK(report.size() == 5);
  for (const char* name : {"reparam_identity", "bellman_completeness",
                           "model_error_bound", "lagrangian_equivalence",
                           "sampler_distribution"}) {
    REQUIRE(report.contains(name));
    const auto& entry = report[name];
    CHECK(entry.size() == 3);
    CHECK(entry["pass"].is_boolean());
    CHECK(entry["pass"].get<bool>());
    CHECK(entry["maxError"].is_number());
    CHECK(entry["details"].is_object());
  }
}
