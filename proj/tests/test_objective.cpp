// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "test_util.hpp"
#include "vacbench/error.hpp"
#include "vacbench/objective.hpp"

using namespace vacbench;
using namespace vacbench::testing;

namespace {

// Brute-force inf over g for one stage: lattice search on the visited
// coordinates, refined around the best point.
double grid_inner_min(const std::vector<Transition>& tuples,
                      const std::vector<std::vector<double>>& q,
                      const PolicyTable& pi, int h, int A, double bound) {
  const int steps = static_cast<int>(q.size());
  std::vector<int> coords;
  for (const auto& t : tuples) {
    const int sa = t.state * A + t.action;
    if (std::find(coords.begin(), coords.end(), sa) == coords.end()) coords.push_back(sa);
  }
  auto value = [&](const std::vector<double>& g) {
    double v = 0.0;
    for (const auto& t : tuples) {
      const int sa = t.state * A + t.action;
      const double gv = g[std::find(coords.begin(), coords.end(), sa) - coords.begin()];
      if (h + 1 >= steps) {
        v += (t.reward - gv) * (t.reward - gv);
        continue;
      }
      for (int ap = 0; ap < A; ++ap) {
        const double y = t.reward + q[h + 1][t.next_state * A + ap];
        v += pi(h + 1, t.next_state, ap) * (y - gv) * (y - gv);
      }
    }
    return v;
  };
  const int n = static_cast<int>(coords.size());
  std::vector<double> center(n, 0.0);
  double half = bound;
  double best = 1e300;
  for (int level = 0; level < 8; ++level) {
    const int pts = 41;
    std::vector<int> idx(n, 0);
    std::vector<double> best_g = center;
    while (true) {
      std::vector<double> g(n);
      for (int i = 0; i < n; ++i) {
        g[i] = std::clamp(center[i] - half + 2.0 * half * idx[i] / (pts - 1), -bound, bound);
      }
      const double v = value(g);
      if (v < best) {
        best = v;
        best_g = g;
      }
      int i = 0;
      while (i < n && ++idx[i] == pts) idx[i++] = 0;
      if (i == n) break;
    }
    center = best_g;
    half *= 0.1;
  }
  return best;
}

}  // namespace

TEST_CASE("empty dataset: zero loss and the objective is the value") {
  const auto lin = build_linear_from_tabular(random_instance(3, 2, 3, 4));
  TransitionDataset empty(3);
  Rng rng(1);
  const QFunction f = random_q(lin, rng);
  const LogLinearPolicy pi = random_pi(lin, 1.0, rng);
  CHECK(vac_loss(f, pi, empty, lin) == 0.0);
  CHECK(mex_loss(f, empty, lin) == 0.0);
  const double v = value_of_f_under_pi(f, policy_table(pi, lin), lin);
  for (double alpha : {0.0, 0.3, 10.0}) {
    const auto rep = vac_objective(f, pi, empty, lin, alpha);
    CHECK(rep.value == doctest::Approx(v).epsilon(1e-14));
  }
  // The loss part of the gradient vanishes: the gradient does not depend
  // on alpha.
  const auto g0 = grad_objective(f, pi, empty, lin, 0.0);
  const auto g1 = grad_objective(f, pi, empty, lin, 7.0);
  for (int h = 0; h < 3; ++h) {
    CHECK((g0.theta[h] - g1.theta[h]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((g0.omega[h] - g1.omega[h]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("alpha zero: the objective is the fictitious value") {
  const auto core = random_instance(4, 3, 3, 9);
  const auto lin = build_linear_from_tabular(core);
  const auto data = uniform_data(core, 20, 3);
  Rng rng(2);
  const QFunction f = random_q(lin, rng);
  const LogLinearPolicy pi = random_pi(lin, 1.0, rng);
  CHECK(vac_objective(f, pi, data, lin, 0.0).value ==
        doctest::Approx(value_of_f_under_pi(f, policy_table(pi, lin), lin))
            .epsilon(1e-14));

  const auto grad = grad_objective(f, pi, data, lin, 0.0);
  const auto table = policy_table(pi, lin);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(lin.dim());
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < 3; ++a) {
      expected += core.rho()[s] * table(0, s, a) * lin.phi(0, s, a);
    }
  }
  CHECK((grad.theta[0] - expected).cwiseAbs().maxCoeff() <= 1e-14);
  for (int h = 1; h < 3; ++h) {
    CHECK(grad.theta[h].cwiseAbs().maxCoeff() == 0.0);
    CHECK(grad.omega[h].cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(grad.omega[0].cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("vac_loss matches a grid search over the inner infimum") {
  const auto core = two_state(2);
  const auto lin = build_linear_from_tabular(core);
  TransitionDataset data(2);
  data.add(0, {0, 1, 0.5, 1}, 0);
  data.add(0, {1, 0, 1.0, 1}, 1);
  data.add(1, {1, 1, 0.0, 0}, 0);
  Rng rng(4);
  for (int k = 0; k < 5; ++k) {
    const QFunction f = random_q(lin, rng);
    const PolicyTable pi = random_policy(core, rng);
    const auto q = q_tables(f, lin);
    double expected = 0.0;
    for (int h = 0; h < 2; ++h) {
      std::vector<Transition> tuples(data.step(h).begin(), data.step(h).end());
      double fit_part = 0.0;
      for (const auto& t : tuples) {
        const int sa = t.state * 2 + t.action;
        if (h == 1) {
          fit_part += (t.reward - q[h][sa]) * (t.reward - q[h][sa]);
        } else {
          for (int ap = 0; ap < 2; ++ap) {
            const double y = t.reward + q[1][t.next_state * 2 + ap];
            fit_part += pi(1, t.next_state, ap) * (y - q[h][sa]) * (y - q[h][sa]);
          }
        }
      }
      expected += fit_part - grid_inner_min(tuples, q, pi, h, 2, f_bound(lin, h));
    }
    CHECK(std::abs(vac_loss(f, pi, data, lin) - expected) <= 1e-4);
  }
}

TEST_CASE("vac_loss is nonnegative on random fixtures") {
  Rng rng(5);
  for (int k = 0; k < 30; ++k) {
    const auto core = random_instance(4, 3, 3, 300 + k);
    const auto lin = build_linear_from_tabular(core);
    const auto data = uniform_data(core, 1 + k, k);
    const QFunction f = random_q(lin, rng);
    CHECK(vac_loss(f, random_pi(lin, 2.0, rng), data, lin) >= -1e-9);
    CHECK(mex_loss(f, data, lin) >= -1e-9);
  }
}

TEST_CASE("vac_loss is invariant under tuple permutations") {
  const auto core = random_instance(4, 3, 3, 8);
  const auto lin = build_linear_from_tabular(core);
  const auto data = uniform_data(core, 40, 1);
  TransitionDataset shuffled(3);
  std::mt19937_64 perm_rng(3);
  for (int h = 0; h < 3; ++h) {
    std::vector<Transition> tuples(data.step(h).begin(), data.step(h).end());
    std::shuffle(tuples.begin(), tuples.end(), perm_rng);
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      shuffled.add(h, tuples[i], static_cast<long>(i));
    }
  }
  Rng rng(7);
  for (int k = 0; k < 10; ++k) {
    const QFunction f = random_q(lin, rng);
    const LogLinearPolicy pi = random_pi(lin, 1.0, rng);
    CHECK(vac_loss(f, pi, data, lin) == vac_loss(f, pi, shuffled, lin));
  }
}

TEST_CASE("objective recomposes from primitives") {
  const auto core = random_instance(3, 2, 3, 15);
  const auto lin = build_linear_from_tabular(core);
  const auto data = uniform_data(core, 25, 2);
  const auto st = tabular_stats(data, core);
  Rng rng(8);
  for (int k = 0; k < 10; ++k) {
    const QFunction f = random_q(lin, rng);
    const LogLinearPolicy pi = random_pi(lin, 1.0, rng);
    const auto rep = vac_objective(f, pi, data, lin, 1.0, 0.0);
    const auto q = q_tables(f, lin);
    const auto table = policy_from_primitives(pi, lin);
    const double expected = tabular_objective(q, table, st, core, 1.0);
    CHECK(std::abs(rep.value - expected) <= 1e-10);
    CHECK(std::abs(rep.loss_value - tabular_loss(q, table, st, core)) <= 1e-10);
  }
}

TEST_CASE("discounted objective recomposes with the (1-gamma) scale") {
  const auto core = two_state_discounted(0.9);
  const auto lin = build_linear_from_tabular(core);
  const auto data = uniform_data(core, 30, 5);
  const auto st = tabular_stats(data, core);
  Rng rng(9);
  for (int k = 0; k < 10; ++k) {
    const QFunction f = random_q(lin, rng);
    const LogLinearPolicy pi = random_pi(lin, 1.0, rng);
    const auto rep = vac_objective(f, pi, data, lin, 0.5, 0.0);
    const double expected = tabular_objective(
        q_tables(f, lin), policy_from_primitives(pi, lin), st, core, 0.5);
    CHECK(std::abs(rep.value - expected) <= 1e-10);
  }
}

TEST_CASE("inner fit: single tuple places the mean target") {
  const auto core = two_state(2);
  const auto lin = build_linear_from_tabular(core);
  TransitionDataset data(2);
  data.add(0, {0, 1, 0.5, 1}, 0);
  Rng rng(10);
  const QFunction f = random_q(lin, rng);
  const PolicyTable pi = random_policy(core, rng);
  const auto fit = fit_inner_g(f, pi, data, lin, 0, 0.0);
  REQUIRE(fit.has_value());
  const auto q = q_tables(f, lin);
  double mean = 0.0, second = 0.0;
  for (int ap = 0; ap < 2; ++ap) {
    const double y = 0.5 + q[1][1 * 2 + ap];
    mean += pi(1, 1, ap) * y;
    second += pi(1, 1, ap) * y * y;
  }
  CHECK(std::abs(fit->g[1] - mean) <= 1e-12);
  CHECK(std::abs(fit->min_value - (second - mean * mean)) <= 1e-12);
  CHECK_FALSE(fit_inner_g(f, pi, data, lin, 1, 0.0).has_value());
}

TEST_CASE("inner fit reproduces per-pair empirical means with ridge 0") {
  const auto core = random_instance(4, 3, 3, 16);
  const auto lin = build_linear_from_tabular(core);
  const auto data = uniform_data(core, 30, 8);
  const auto st = tabular_stats(data, core);
  Rng rng(11);
  const QFunction f = random_q(lin, rng);
  const PolicyTable pi = random_policy(core, rng);
  const auto q = q_tables(f, lin);
  for (int h = 0; h < 3; ++h) {
    const auto fit = fit_inner_g(f, pi, data, lin, h, 0.0);
    REQUIRE(fit.has_value());
    for (int sa = 0; sa < 12; ++sa) {
      if (st.count[h][sa] == 0.0) continue;
      double target = st.reward_sum[h][sa];
      if (h + 1 < 3) {
        for (int sp = 0; sp < 4; ++sp) {
          double v = 0.0;
          for (int ap = 0; ap < 3; ++ap) v += pi(h + 1, sp, ap) * q[h + 1][sp * 3 + ap];
          target += st.next_count[h][sa][sp] * v;
        }
      }
      CHECK(std::abs(fit->g[sa] - target / st.count[h][sa]) <= 1e-12);
    }
  }
}

TEST_CASE("inner fit is invariant to duplicating every tuple") {
  const auto core = random_instance(3, 2, 2, 17);
  const auto lin = build_linear_from_tabular(core);
  const auto data = uniform_data(core, 15, 9);
  TransitionDataset doubled(2);
  for (int h = 0; h < 2; ++h) {
    long e = 0;
    for (const auto& t : data.step(h)) {
      doubled.add(h, t, e++);
      doubled.add(h, t, e++);
    }
  }
  Rng rng(12);
  const QFunction f = random_q(lin, rng);
  const PolicyTable pi = random_policy(core, rng);
  for (int h = 0; h < 2; ++h) {
    const auto a = fit_inner_g(f, pi, data, lin, h, 0.0);
    const auto b = fit_inner_g(f, pi, doubled, lin, h, 0.0);
    CHECK((a->g - b->g).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("fitted Q^pi: the inner optimum sits at the Bellman image") {
  const auto core = random_instance(3, 2, 3, 18);
  const auto lin = build_linear_from_tabular(core);
  const auto data = uniform_data(core, 40, 10);
  Rng rng(13);
  const PolicyTable pi = random_policy(core, rng);
  const auto vals = exact_policy_values(core, pi);
  QFunction f = QFunction::zeros(lin);
  for (int h = 0; h < 3; ++h) {
    for (int i = 0; i < 6; ++i) f.theta[h][i] = vals.q[h][i];
  }
  for (int h = 0; h < 3; ++h) {
    // g = P^pi f from the true model, evaluated on the sample.
    Eigen::VectorXd bellman(6);
    for (int s = 0; s < 3; ++s) {
      for (int a = 0; a < 2; ++a) {
        double v = core.reward(h, s, a);
        if (h + 1 < 3) {
          const auto p = core.transition(h, s, a);
          for (int sp = 0; sp < 3; ++sp) v += p[sp] * vals.v[h + 1][sp];
        }
        bellman[s * 2 + a] = v;
      }
    }
    double at_bellman = 0.0;
    for (const auto& t : data.step(h)) {
      const double gv = bellman[t.state * 2 + t.action];
      if (h + 1 >= 3) {
        at_bellman += (t.reward - gv) * (t.reward - gv);
        continue;
      }
      for (int ap = 0; ap < 2; ++ap) {
        const double y = t.reward + vals.q[h + 1][t.next_state * 2 + ap];
        at_bellman += pi(h + 1, t.next_state, ap) * (y - gv) * (y - gv);
      }
    }
    const auto fit = fit_inner_g(f, pi, data, lin, h, 0.0);
    // The sample minimum can only improve on the population Bellman image.
    CHECK(fit->min_value <= at_bellman + 1e-8);
    if (h == 2) CHECK(std::abs(fit->min_value - at_bellman) <= 1e-8);
  }
}

TEST_CASE("greedy policy makes vac_loss equal mex_loss") {
  Rng rng(14);
  for (int k = 0; k < 20; ++k) {
    const auto core = random_instance(4, 3, 3, 400 + k);
    const auto lin = build_linear_from_tabular(core);
    const auto data = uniform_data(core, 10 + k, k);
    const QFunction f = random_q(lin, rng);
    const PolicyTable greedy = greedy_policy(f, lin);
    CHECK(std::abs(vac_loss(f, greedy, data, lin) - mex_loss(f, data, lin)) <= 1e-10);
  }
  const auto core = two_state_discounted(0.9);
  const auto lin = build_linear_from_tabular(core);
  const auto data = uniform_data(core, 50, 1);
  const QFunction f = random_q(lin, rng);
  CHECK(std::abs(vac_loss(f, greedy_policy(f, lin), data, lin) -
                 mex_loss(f, data, lin)) <= 1e-10);
}

TEST_CASE("greedy policy breaks ties toward the lowest index") {
  const auto lin = build_linear_from_tabular(two_state(2));
  const PolicyTable pi = greedy_policy(QFunction::zeros(lin), lin);
  for (int h = 0; h < 2; ++h) {
    for (int s = 0; s < 2; ++s) {
      CHECK(pi(h, s, 0) == 1.0);
      CHECK(pi(h, s, 1) == 0.0);
    }
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(15);
  for (int k = 0; k < 10; ++k) {
    const auto core = random_instance(3, 2, 3, 500 + k);
    const auto lin = build_linear_from_tabular(core);
    const auto data = uniform_data(core, 5 + 3 * k, k);
    QFunction f = random_q(lin, rng);
    for (auto& t : f.theta) t *= 0.5;
    const LogLinearPolicy pi = random_pi(lin, 1.5, rng);
    const double alpha = 2.0 * rng.uniform();
    CHECK(finite_difference_check(f, pi, data, lin, alpha).max_rel_error <= 1e-5);
  }
  const auto core = two_state_discounted(0.9);
  const auto lin = build_linear_from_tabular(core);
  const auto data = uniform_data(core, 40, 3);
  QFunction f = random_q(lin, rng);
  for (auto& t : f.theta) t *= 0.5;
  CHECK(finite_difference_check(f, random_pi(lin, 1.0, rng), data, lin, 0.7)
            .max_rel_error <= 1e-5);
}

TEST_CASE("engine reuse gives the same answers as the free functions") {
  const auto core = random_instance(4, 2, 3, 19);
  const auto lin = build_linear_from_tabular(core);
  const auto data = uniform_data(core, 12, 4);
  const ObjectiveEngine engine(lin, data);
  Rng rng(16);
  const QFunction f = random_q(lin, rng);
  const LogLinearPolicy pi = random_pi(lin, 1.0, rng);
  const auto a = engine.evaluate(f, pi, 0.4, true);
  const auto b = vac_objective(f, pi, data, lin, 0.4);
  CHECK(a.value == b.value);
  const auto j = a.to_json();
  CHECK(j.contains("value"));
  CHECK(j.contains("loss"));
}

TEST_CASE("shape mismatches are rejected") {
  const auto lin = build_linear_from_tabular(random_instance(3, 2, 3, 1));
  const auto other = build_linear_from_tabular(random_instance(3, 2, 2, 1));
  TransitionDataset data(3);
  CHECK_THROWS_AS(vac_loss(QFunction::zeros(other), LogLinearPolicy::zeros(lin),
                           data, lin),
                  Error);
}
