// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vacbench/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>

#include "vacbench/error.hpp"
#include "vacbench/func_approx.hpp"
#include "vacbench/linear_mdp.hpp"

namespace vacbench {

nlohmann::json CheckResult::to_json() const {
  return {{"pass", pass}, {"maxError", max_error}, {"details", details}};
}

namespace {

PolicyTable random_policy(const TabularCore& core, Rng& rng) {
  PolicyTable pi(core.num_steps(), core.num_states(), core.num_actions());
  for (int h = 0; h < core.num_steps(); ++h) {
    for (int s = 0; s < core.num_states(); ++s) {
      auto row = pi.row(h, s);
      double sum = 0.0;
      for (double& p : row) sum += (p = rng.uniform() + 1e-3);
      for (double& p : row) p /= sum;
    }
  }
  return pi;
}

TabularCore random_episodic(int S, int A, int H, std::uint64_t seed) {
  InstanceSpec spec;
  spec.kind = "random";
  spec.num_states = S;
  spec.num_actions = A;
  spec.horizon = H;
  return make_instance(spec, seed);
}

// Weights uniform on [-bound, bound]: for one-hot features this keeps both
// the norm and the sup-norm constraint.
QFunction random_q(const LinearMdp& lin, Rng& rng) {
  QFunction f = QFunction::zeros(lin);
  for (int h = 0; h < lin.num_steps(); ++h) {
    const double bound = f_bound(lin, h);
    for (auto& x : f.theta[h]) x = bound * (2.0 * rng.uniform() - 1.0);
  }
  return f;
}

struct Interp {
  double residual;
  bool in_ball;
  bool in_range;
};

// Exact interpolation of per-pair values by the stage-h features.
Interp interpolate(const LinearMdp& lin, int h, const Eigen::VectorXd& target) {
  const Eigen::MatrixXd& phi = lin.features(h);
  const Eigen::VectorXd theta = phi.completeOrthogonalDecomposition().solve(target);
  const Eigen::VectorXd fit = phi * theta;
  const double tol = 1e-12;
  return {(fit - target).lpNorm<Eigen::Infinity>(),
          theta.norm() <= theta_radius(lin, h) * (1.0 + tol),
          fit.lpNorm<Eigen::Infinity>() <= f_bound(lin, h) * (1.0 + tol)};
}

}  // namespace

CheckResult check_reparam_identity(long samples, std::uint64_t seed,
                                   bool flip_sign) {
  if (samples < 1) throw invalid_argument("reparam: samples must be >= 1");
  CheckResult out{"reparam_identity"};
  auto lhs = [](double delta, double q, double g, double beta) {
    const double lambda = (q - g) / beta;
    return lambda * (delta - q) + 0.5 * beta * lambda * lambda;
  };
  auto rhs = [flip_sign](double delta, double q, double g, double beta) {
    const double a = (delta - g) * (delta - g);
    const double b = (delta - q) * (delta - q);
    return (flip_sign ? b - a : a - b) / (2.0 * beta);
  };

  // Pinned fixture: delta = Q, beta = 1, g = Q - 1 gives 1/2 on both sides.
  const double fixture_lhs = lhs(0.3, 0.3, -0.7, 1.0);
  const double fixture_rhs = rhs(0.3, 0.3, -0.7, 1.0);
  double worst = std::abs(fixture_lhs - fixture_rhs);

  Rng rng(Rng::stream(seed, 0x7e9a).next_u64());
  for (long i = 0; i < samples; ++i) {
    const double delta = 10.0 * rng.uniform() - 5.0;
    const double q = 10.0 * rng.uniform() - 5.0;
    const double g = 10.0 * rng.uniform() - 5.0;
    const double beta = 0.1 + 4.9 * rng.uniform();
    worst = std::max(worst, std::abs(lhs(delta, q, g, beta) -
                                     rhs(delta, q, g, beta)));
  }
  out.max_error = worst;
  out.pass = worst <= 1e-9;
  out.details = {{"samples", samples},
                 {"fixture", {{"lhs", fixture_lhs}, {"rhs", fixture_rhs}}},
                 {"tolerance", 1e-9}};
  return out;
}

CheckResult check_bellman_completeness(int instances, std::uint64_t seed) {
  if (instances < 1) throw invalid_argument("completeness: instances < 1");
  CheckResult out{"bellman_completeness"};
  bool ok = true;
  int failures = 0;
  double worst = 0.0;

  auto record = [&](const Interp& r) {
    worst = std::max(worst, r.residual);
    if (r.residual > 1e-8 || !r.in_ball || !r.in_range) {
      ok = false;
      ++failures;
    }
  };

  for (int i = 0; i < instances; ++i) {
    Rng rng = Rng::stream(seed, 0xbe11 + static_cast<std::uint64_t>(i));
    const int S = 2 + static_cast<int>(rng.next_u64() % 4);
    const int A = 2 + static_cast<int>(rng.next_u64() % 2);
    const int H = 2 + static_cast<int>(rng.next_u64() % 3);
    const TabularCore core = random_episodic(S, A, H, rng.next_u64());
    const LinearMdp lin = build_linear_from_tabular(core);
    const QFunction f = random_q(lin, rng);
    const PolicyTable pi = random_policy(core, rng);

    for (int h = 0; h < H; ++h) {
      Eigen::VectorXd target(S * A);
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          double next = 0.0;
          if (h + 1 < H) {
            const auto row = core.transition(h, s, a);
            for (int sp = 0; sp < S; ++sp) {
              for (int ap = 0; ap < A; ++ap) {
                next += row[sp] * pi(h + 1, sp, ap) *
                        q_eval(f, lin, h + 1, sp, ap);
              }
            }
          }
          target(s * A + a) = core.reward(h, s, a) + next;
        }
      }
      record(interpolate(lin, h, target));
    }

    const auto opt = exact_optimal_values(core);
    for (int h = 0; h < H; ++h) {
      record(interpolate(
          lin, h,
          Eigen::Map<const Eigen::VectorXd>(opt.values.q[h].data(), S * A)));
    }
  }

  // Realizability on a hard-exploration chain as well.
  InstanceSpec chain;
  chain.kind = "chain_lock";
  chain.num_states = 7;
  chain.num_actions = 2;
  chain.horizon = 6;
  const TabularCore core = make_instance(chain, seed);
  const LinearMdp lin = build_linear_from_tabular(core);
  const auto opt = exact_optimal_values(core);
  for (int h = 0; h < core.num_steps(); ++h) {
    record(interpolate(lin, h,
                       Eigen::Map<const Eigen::VectorXd>(
                           opt.values.q[h].data(), core.num_pairs())));
  }

  out.pass = ok;
  out.max_error = worst;
  out.details = {{"instances", instances},
                 {"failures", failures},
                 {"tolerance", 1e-8}};
  return out;
}

CheckResult check_model_error_bound(const TabularCore& core,
                                    const std::vector<double>& betas) {
  CheckResult out{"model_error_bound"};
  const auto opt = exact_optimal_values(core);
  const int A = core.num_actions();
  const double log_a = std::log(static_cast<double>(A));
  double violation = 0.0;
  double min_gap = std::numeric_limits<double>::infinity();
  double max_gap = 0.0;
  double max_ratio = 0.0;
  std::vector<double> logits(A);
  std::vector<double> probs(A);
  for (double B : betas) {
    if (!(B > 0.0)) throw invalid_argument("model error: B must be > 0");
    for (int h = 0; h < core.num_steps(); ++h) {
      for (int s = 0; s < core.num_states(); ++s) {
        for (int a = 0; a < A; ++a) {
          logits[a] = B * opt.values.q_at(h, s, a, A);
        }
        softmax(logits, probs);
        double soft = 0.0;
        for (int a = 0; a < A; ++a) soft += probs[a] * opt.values.q_at(h, s, a, A);
        const double gap = opt.values.v[h][s] - soft;
        const double bound = log_a / B;
        min_gap = std::min(min_gap, gap);
        max_gap = std::max(max_gap, gap);
        if (bound > 0.0) max_ratio = std::max(max_ratio, gap / bound);
        violation = std::max({violation, -gap - 1e-10, gap - bound - 1e-12});
      }
    }
  }
  out.max_error = std::max(0.0, violation);
  out.pass = violation <= 0.0;
  out.details = {{"betas", betas},
                 {"min_gap", min_gap},
                 {"max_gap", max_gap},
                 {"max_gap_over_bound", max_ratio},
                 {"lower_slack", 1e-10}};
  return out;
}

CheckResult check_model_error_bound(int instances,
                                    const std::vector<double>& betas,
                                    std::uint64_t seed) {
  CheckResult out{"model_error_bound"};
  out.pass = true;
  double min_gap = std::numeric_limits<double>::infinity();
  double max_gap = 0.0;
  double max_ratio = 0.0;
  for (int i = 0; i < instances; ++i) {
    const auto core = random_episodic(
        5, 3, 4, Rng::stream(seed, 0x30de + static_cast<std::uint64_t>(i))
                     .next_u64());
    const auto r = check_model_error_bound(core, betas);
    out.pass = out.pass && r.pass;
    out.max_error = std::max(out.max_error, r.max_error);
    min_gap = std::min(min_gap, r.details["min_gap"].get<double>());
    max_gap = std::max(max_gap, r.details["max_gap"].get<double>());
    max_ratio =
        std::max(max_ratio, r.details["max_gap_over_bound"].get<double>());
  }
  out.details = {{"instances", instances},
                 {"betas", betas},
                 {"min_gap", min_gap},
                 {"max_gap", max_gap},
                 {"max_gap_over_bound", max_ratio},
                 {"lower_slack", 1e-10}};
  return out;
}

CheckResult check_lagrangian_equivalence(const TabularCore& core,
                                         const std::vector<double>& betas,
                                         int samples, std::uint64_t seed) {
  if (!core.is_episodic()) {
    throw invalid_argument("lagrangian: needs an episodic instance");
  }
  CheckResult out{"lagrangian_equivalence"};
  const int S = core.num_states();
  const int A = core.num_actions();
  const int H = core.horizon();
  const LinearMdp lin = build_linear_from_tabular(core);
  const auto visits = visitation_distributions(core, PolicyTable::uniform(core));
  const auto rho = core.rho();

  Rng rng = Rng::stream(seed, 0x1a9a);
  double worst = 0.0;
  double worst_ratio = 0.0;
  for (int i = 0; i < samples; ++i) {
    const QFunction f = random_q(lin, rng);
    const Eigen::VectorXd first = q_table(f, lin, 0);
    double value = 0.0;
    for (int s = 0; s < S; ++s) {
      value += rho[s] * first.segment(s * A, A).maxCoeff();
    }

    // Per stage: sum_{s,a} d(s,a) (E[delta|s,a] - f)^2, and the
    // reparameterized form E(delta - f)^2 - E(delta - g*)^2 with g* the
    // conditional mean, both by enumeration over s'.
    double lagrangian = 0.0;
    double reparam = 0.0;
    for (int h = 0; h < H; ++h) {
      const Eigen::VectorXd cur = q_table(f, lin, h);
      Eigen::VectorXd best_next = Eigen::VectorXd::Zero(S);
      if (h + 1 < H) {
        const Eigen::VectorXd next = q_table(f, lin, h + 1);
        for (int sp = 0; sp < S; ++sp) {
          best_next(sp) = next.segment(sp * A, A).maxCoeff();
        }
      }
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          const double w = visits[h][s * A + a];
          if (w == 0.0) continue;
          const auto row = core.transition(h, s, a);
          const double r = core.reward(h, s, a);
          const double q = cur(s * A + a);
          double mean = 0.0;
          for (int sp = 0; sp < S; ++sp) mean += row[sp] * (r + best_next(sp));
          double to_q = 0.0;
          double to_g = 0.0;
          for (int sp = 0; sp < S; ++sp) {
            const double delta = r + best_next(sp);
            to_q += row[sp] * (delta - q) * (delta - q);
            to_g += row[sp] * (delta - mean) * (delta - mean);
          }
          lagrangian += w * (mean - q) * (mean - q);
          reparam += w * (to_q - to_g);
        }
      }
    }

    for (double beta : betas) {
      if (!(beta > 0.0)) throw invalid_argument("lagrangian: beta must be > 0");
      const double via_lambda = value - lagrangian / (2.0 * beta);
      const double via_g = value - reparam / (2.0 * beta);
      worst = std::max(worst, std::abs(via_lambda - via_g));
    }
    // Doubling beta halves the regularizer.
    if (lagrangian > 0.0) {
      const double reg1 = value - (value - lagrangian / 2.0);
      const double reg2 = value - (value - lagrangian / 4.0);
      worst_ratio = std::max(worst_ratio, std::abs(reg2 / reg1 - 0.5));
    }
  }
  out.max_error = worst;
  out.pass = worst <= 1e-9 && worst_ratio <= 1e-12;
  out.details = {{"samples", samples},
                 {"betas", betas},
                 {"tolerance", 1e-9},
                 {"beta_scaling_error", worst_ratio}};
  return out;
}

double chi_square_critical_001(int dof) {
  if (dof < 1) throw invalid_argument("chi-square: dof must be >= 1");
  const boost::math::chi_squared dist(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(dist, 0.001));
}

CheckResult check_sampler_distribution(const TabularCore& core,
                                       const PolicyTable& pi, long draws,
                                       std::uint64_t seed) {
  if (core.is_episodic()) {
    throw invalid_argument("sampler: needs a discounted instance");
  }
  if (draws < 10'000) throw invalid_argument("sampler: draws must be >= 1e4");
  CheckResult out{"sampler_distribution"};
  const int A = core.num_actions();
  const double gamma = core.gamma();
  const auto exact = visitation_distributions(core, pi)[0];

  Rng rng = Rng::stream(seed, 0x5a3b);
  std::vector<double> counts(exact.size(), 0.0);
  std::vector<long> lengths;
  lengths.reserve(draws);
  double total_length = 0.0;
  for (long i = 0; i < draws; ++i) {
    const auto x = sample_discounted(core, pi, rng);
    counts[static_cast<std::size_t>(x.state) * A + x.action] += 1.0;
    lengths.push_back(x.step_index + 1);
    total_length += static_cast<double>(x.step_index + 1);
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    tv += std::abs(counts[i] / draws - exact[i]);
  }
  tv *= 0.5;
  const double mean_length = total_length / draws;
  const double expected_length = 1.0 / (1.0 - gamma);
  const double length_error = std::abs(mean_length / expected_length - 1.0);

  // Geometric(1-gamma) on {1, 2, ...}; the tail is pooled once the expected
  // count of a bin would drop below 5.
  const double n = static_cast<double>(draws);
  std::vector<double> expected;
  double mass = 1.0;
  for (int k = 1;; ++k) {
    const double p = (1.0 - gamma) * std::pow(gamma, k - 1);
    if (n * p < 5.0 || n * (mass - p) < 5.0) {
      expected.push_back(n * mass);
      break;
    }
    expected.push_back(n * p);
    mass -= p;
  }
  std::vector<double> observed(expected.size(), 0.0);
  for (long len : lengths) {
    const auto bin = std::min<std::size_t>(len - 1, expected.size() - 1);
    observed[bin] += 1.0;
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    chi2 += (observed[i] - expected[i]) * (observed[i] - expected[i]) /
            expected[i];
  }
  const int dof = std::max(1, static_cast<int>(expected.size()) - 1);
  const double critical = chi_square_critical_001(dof);
  const bool chi_ok = expected.size() < 2 || chi2 <= critical;

  out.max_error = tv;
  out.pass = tv <= 0.02 && length_error <= 0.02 && chi_ok;
  out.details = {{"draws", draws},
                 {"tv", tv},
                 {"tv_tolerance", 0.02},
                 {"mean_length", mean_length},
                 {"expected_length", expected_length},
                 {"length_relative_error", length_error},
                 {"chi_square", chi2},
                 {"chi_square_dof", dof},
                 {"chi_square_critical", critical}};
  return out;
}

std::vector<CheckResult> run_verify_suite(const VerifyOptions& opts) {
  std::vector<CheckResult> out;
  out.push_back(check_reparam_identity(10'000, opts.seed,
                                       opts.flip_reparam_sign));
  out.push_back(check_bellman_completeness(50, opts.seed));
  out.push_back(check_model_error_bound(10, {1.0, 10.0, 100.0}, opts.seed));
  out.push_back(check_lagrangian_equivalence(
      random_episodic(5, 3, 4, Rng::stream(opts.seed, 0x1a91).next_u64()),
      {0.5, 1.0, 2.0}, 100, opts.seed));
  InstanceSpec two;
  two.kind = "two_state";
  two.mode = Mode::discounted;
  two.gamma = 0.9;
  const TabularCore disc = make_instance(two, opts.seed);
  out.push_back(check_sampler_distribution(disc, PolicyTable::uniform(disc),
                                           200'000, opts.seed));
  return out;
}

nlohmann::json verify_report(const std::vector<CheckResult>& results) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& r : results) doc[r.name] = r.to_json();
  return doc;
}

}  // namespace vacbench
