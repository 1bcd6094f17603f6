// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vacbench/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "vacbench/error.hpp"

namespace vacbench {

namespace {

constexpr double kSumTol = 1e-12;

void check_size(long long value, const char* what) {
  if (value < 1) throw invalid_argument(std::string(what) + " must be >= 1");
  if (value > (1LL << 20)) {
    throw invalid_argument(std::string(what) + " is too large");
  }
}

// Guards against S*A*S*H overflowing memory before allocation.
void check_total(long long s, long long a, long long h) {
  const long long total = s * a * s * h;
  if (total > 50'000'000LL) {
    throw invalid_argument("instance too large: " + std::to_string(total) +
                           " transition entries");
  }
}

bool is_probability_vector(std::span<const double> p, double tol) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

// Row-stochastic S x S kernel under pi at stage h: P^pi(s, s').
Eigen::MatrixXd state_kernel(const TabularCore& mdp, const PolicyTable& pi,
                             int h) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double w = pi(h, s, a);
      if (w == 0.0) continue;
      const auto row = mdp.transition(h, s, a);
      for (int sp = 0; sp < S; ++sp) P(s, sp) += w * row[sp];
    }
  }
  return P;
}

// Q(s,a) = r(s,a) + c * sum_s' P(s'|s,a) next(s').
std::vector<double> backup(const TabularCore& mdp, int h, double c,
                           const std::vector<double>& next) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  std::vector<double> q(static_cast<std::size_t>(S) * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double acc = 0.0;
      if (!next.empty()) {
        const auto row = mdp.transition(h, s, a);
        for (int sp = 0; sp < S; ++sp) acc += row[sp] * next[sp];
      }
      q[static_cast<std::size_t>(s) * A + a] = mdp.reward(h, s, a) + c * acc;
    }
  }
  return q;
}

std::vector<double> average(const std::vector<double>& q,
                            const PolicyTable& pi, int h, int S, int A) {
  std::vector<double> v(S, 0.0);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      v[s] += pi(h, s, a) * q[static_cast<std::size_t>(s) * A + a];
    }
  }
  return v;
}

// Lowest-index argmax per state; also returns the max values.
std::vector<int> greedy_actions(const std::vector<double>& q, int S, int A,
                                std::vector<double>* v) {
  std::vector<int> best(S, 0);
  if (v) v->assign(S, 0.0);
  for (int s = 0; s < S; ++s) {
    const double* row = q.data() + static_cast<std::size_t>(s) * A;
    int arg = 0;
    for (int a = 1; a < A; ++a) {
      if (row[a] > row[arg]) arg = a;
    }
    best[s] = arg;
    if (v) (*v)[s] = row[arg];
  }
  return best;
}

ValueTables discounted_policy_values(const TabularCore& mdp,
                                     const PolicyTable& pi) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const double gamma = mdp.gamma();
  const Eigen::MatrixXd P = state_kernel(mdp, pi, 0);
  Eigen::VectorXd r_pi = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) r_pi(s) += pi(0, s, a) * mdp.reward(0, s, a);
  }
  const Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(S, S) - gamma * P;
  const Eigen::VectorXd V = M.partialPivLu().solve(r_pi);
  ValueTables out;
  out.v.emplace_back(V.data(), V.data() + S);
  out.q.push_back(backup(mdp, 0, gamma, out.v[0]));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// TabularCore

TabularCore TabularCore::episodic(int num_states, int num_actions, int horizon,
                                  std::vector<double> reward,
                                  std::vector<double> transition,
                                  std::vector<double> rho) {
  check_size(num_states, "num_states");
  check_size(num_actions, "num_actions");
  check_size(horizon, "horizon");
  check_total(num_states, num_actions, horizon);
  TabularCore core;
  core.mode_ = Mode::episodic;
  core.num_states_ = num_states;
  core.num_actions_ = num_actions;
  core.num_steps_ = horizon;
  core.horizon_ = horizon;
  core.reward_ = std::move(reward);
  core.transition_ = std::move(transition);
  core.rho_ = std::move(rho);
  core.validate();
  return core;
}

TabularCore TabularCore::discounted(int num_states, int num_actions,
                                    double gamma, std::vector<double> reward,
                                    std::vector<double> transition,
                                    std::vector<double> rho) {
  check_size(num_states, "num_states");
  check_size(num_actions, "num_actions");
  check_total(num_states, num_actions, 1);
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw invalid_argument("gamma must lie in [0, 1)");
  }
  TabularCore core;
  core.mode_ = Mode::discounted;
  core.num_states_ = num_states;
  core.num_actions_ = num_actions;
  core.num_steps_ = 1;
  core.gamma_ = gamma;
  core.reward_ = std::move(reward);
  core.transition_ = std::move(transition);
  core.rho_ = std::move(rho);
  core.validate();
  return core;
}

int TabularCore::horizon() const {
  if (mode_ != Mode::episodic) {
    throw invalid_argument("horizon() called on a discounted instance");
  }
  return horizon_;
}

double TabularCore::gamma() const {
  if (mode_ != Mode::discounted) {
    throw invalid_argument("gamma() called on an episodic instance");
  }
  return gamma_;
}

void TabularCore::validate() const {
  const std::size_t pairs =
      static_cast<std::size_t>(num_steps_) * num_states_ * num_actions_;
  if (reward_.size() != pairs) {
    throw invalid_argument("reward has " + std::to_string(reward_.size()) +
                           " entries, expected " + std::to_string(pairs));
  }
  if (transition_.size() != pairs * num_states_) {
    throw invalid_argument("transition has wrong number of entries");
  }
  if (rho_.size() != static_cast<std::size_t>(num_states_)) {
    throw invalid_argument("rho has wrong number of entries");
  }
  for (std::size_t i = 0; i < reward_.size(); ++i) {
    if (!(reward_[i] >= 0.0 && reward_[i] <= 1.0)) {
      throw invalid_argument("reward entry " + std::to_string(i) +
                             " outside [0,1]");
    }
  }
  for (int h = 0; h < num_steps_; ++h) {
    for (int s = 0; s < num_states_; ++s) {
      for (int a = 0; a < num_actions_; ++a) {
        if (!is_probability_vector(transition(h, s, a), kSumTol)) {
          std::ostringstream msg;
          msg << "transition row (h=" << h << ", s=" << s << ", a=" << a
              << ") is not a probability vector";
          throw invalid_argument(msg.str());
        }
      }
    }
  }
  if (!is_probability_vector(rho_, kSumTol)) {
    throw invalid_argument("rho is not a probability vector");
  }
}

nlohmann::json TabularCore::to_json() const {
  using nlohmann::json;
  const int S = num_states_;
  const int A = num_actions_;
  auto reward_stage = [&](int h) {
    json rows = json::array();
    for (int s = 0; s < S; ++s) {
      json row = json::array();
      for (int a = 0; a < A; ++a) row.push_back(reward(h, s, a));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  auto transition_stage = [&](int h) {
    json rows = json::array();
    for (int s = 0; s < S; ++s) {
      json per_action = json::array();
      for (int a = 0; a < A; ++a) {
        const auto p = transition(h, s, a);
        per_action.push_back(json(std::vector<double>(p.begin(), p.end())));
      }
      rows.push_back(std::move(per_action));
    }
    return rows;
  };

  json doc;
  doc["num_states"] = S;
  doc["num_actions"] = A;
  doc["rho"] = rho_;
  if (mode_ == Mode::episodic) {
    doc["mode"] = "episodic";
    doc["H"] = horizon_;
    json r = json::array();
    json p = json::array();
    for (int h = 0; h < horizon_; ++h) {
      r.push_back(reward_stage(h));
      p.push_back(transition_stage(h));
    }
    doc["reward"] = std::move(r);
    doc["transition"] = std::move(p);
  } else {
    doc["mode"] = "discounted";
    doc["gamma"] = gamma_;
    doc["reward"] = reward_stage(0);
    doc["transition"] = transition_stage(0);
  }
  return doc;
}

namespace {

void flatten_into(const nlohmann::json& node, int depth,
                  const std::vector<std::size_t>& shape, std::size_t level,
                  std::vector<double>& out, const std::string& path) {
  if (level == shape.size()) {
    if (!node.is_number()) throw invalid_argument(path + ": expected number");
    out.push_back(node.get<double>());
    return;
  }
  if (!node.is_array() || node.size() != shape[level]) {
    throw invalid_argument(path + ": expected array of length " +
                           std::to_string(shape[level]));
  }
  for (std::size_t i = 0; i < node.size(); ++i) {
    flatten_into(node[i], depth + 1, shape, level + 1, out,
                 path + "[" + std::to_string(i) + "]");
  }
}

std::vector<double> flatten(const nlohmann::json& node,
                            const std::vector<std::size_t>& shape,
                            const std::string& name) {
  std::vector<double> out;
  flatten_into(node, 0, shape, 0, out, name);
  return out;
}

const nlohmann::json& field(const nlohmann::json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw invalid_argument(std::string("instance: missing field '") + key +
                           "'");
  }
  return *it;
}

}  // namespace

TabularCore TabularCore::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw invalid_argument("instance: expected object");
  const auto mode = field(doc, "mode").get<std::string>();
  const int S = field(doc, "num_states").get<int>();
  const int A = field(doc, "num_actions").get<int>();
  check_size(S, "num_states");
  check_size(A, "num_actions");
  const auto s = static_cast<std::size_t>(S);
  const auto a = static_cast<std::size_t>(A);
  auto rho = flatten(field(doc, "rho"), {s}, "rho");
  if (mode == "episodic") {
    const int H = field(doc, "H").get<int>();
    check_size(H, "H");
    check_total(S, A, H);
    const auto h = static_cast<std::size_t>(H);
    return episodic(S, A, H, flatten(field(doc, "reward"), {h, s, a}, "reward"),
                    flatten(field(doc, "transition"), {h, s, a, s},
                            "transition"),
                    std::move(rho));
  }
  if (mode == "discounted") {
    const double gamma = field(doc, "gamma").get<double>();
    return discounted(S, A, gamma,
                      flatten(field(doc, "reward"), {s, a}, "reward"),
                      flatten(field(doc, "transition"), {s, a, s},
                              "transition"),
                      std::move(rho));
  }
  throw invalid_argument("instance: unknown mode '" + mode + "'");
}

TabularCore TabularCore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open instance file " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, path + ": " + e.what());
  }
  return from_json(doc);
}

void TabularCore::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write instance file " + path);
  out << to_json().dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Generators

std::vector<int> chain_lock_key(int horizon, int num_actions,
                                std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0xc4a1);
  std::vector<int> key(horizon);
  for (int h = 0; h < horizon; ++h) {
    key[h] = static_cast<int>(rng.next_u64() %
                              static_cast<std::uint64_t>(num_actions));
  }
  return key;
}

TabularCore make_instance(const InstanceSpec& spec, std::uint64_t seed) {
  const bool episodic = spec.mode == Mode::episodic;
  if (spec.kind == "two_state") {
    // s0: a0 stays put with reward 0; a1 pays 0.5 and moves to s1 w.p. 0.8.
    // s1: a0 pays 1 and stays; a1 pays 0 and falls back to s0.
    const std::vector<double> r = {0.0, 0.5, 1.0, 0.0};
    const std::vector<double> p = {1.0, 0.0, 0.2, 0.8, 0.0, 1.0, 1.0, 0.0};
    const std::vector<double> rho = {0.5, 0.5};
    if (!episodic) return TabularCore::discounted(2, 2, spec.gamma, r, p, rho);
    const int H = spec.horizon;
    check_size(H, "horizon");
    std::vector<double> rr, pp;
    for (int h = 0; h < H; ++h) {
      rr.insert(rr.end(), r.begin(), r.end());
      pp.insert(pp.end(), p.begin(), p.end());
    }
    return TabularCore::episodic(2, 2, H, rr, pp, rho);
  }

  if (spec.kind == "chain_lock") {
    if (!episodic) throw invalid_argument("chain_lock is episodic only");
    const int H = spec.horizon;
    check_size(H, "horizon");
    if (H < 2) throw invalid_argument("chain_lock needs H >= 2");
    const int A = spec.num_actions;
    check_size(A, "num_actions");
    if (A < 2) throw invalid_argument("chain_lock needs at least 2 actions");
    const int S = H + 1;
    check_total(S, A, H);
    const auto key = chain_lock_key(H, A, seed);
    std::vector<double> r(static_cast<std::size_t>(H) * S * A, 0.0);
    std::vector<double> p(r.size() * S, 0.0);
    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          const std::size_t idx = (static_cast<std::size_t>(h) * S + s) * A + a;
          const int next = (a == key[h]) ? std::min(s + 1, S - 1) : 0;
          p[idx * S + next] = 1.0;
          if (s == H - 1 && a == key[h]) r[idx] = 1.0;
        }
      }
    }
    std::vector<double> rho(S, 0.0);
    rho[0] = 1.0;
    return TabularCore::episodic(S, A, H, std::move(r), std::move(p),
                                 std::move(rho));
  }

  if (spec.kind == "random") {
    const int S = spec.num_states;
    const int A = spec.num_actions;
    check_size(S, "num_states");
    check_size(A, "num_actions");
    const int H = episodic ? spec.horizon : 1;
    check_size(H, "horizon");
    check_total(S, A, H);
    Rng rng(seed);
    std::vector<double> r(static_cast<std::size_t>(H) * S * A);
    std::vector<double> p(r.size() * S);
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] = rng.uniform();
      double sum = 0.0;
      for (int sp = 0; sp < S; ++sp) {
        const double u = rng.uniform() + 1e-3;
        p[i * S + sp] = u;
        sum += u;
      }
      for (int sp = 0; sp < S; ++sp) p[i * S + sp] /= sum;
    }
    std::vector<double> rho(S);
    double sum = 0.0;
    for (auto& x : rho) {
      x = rng.uniform() + 1e-3;
      sum += x;
    }
    for (auto& x : rho) x /= sum;
    if (!episodic) {
      return TabularCore::discounted(S, A, spec.gamma, std::move(r),
                                     std::move(p), std::move(rho));
    }
    return TabularCore::episodic(S, A, H, std::move(r), std::move(p),
                                 std::move(rho));
  }

  throw invalid_argument("unknown instance kind '" + spec.kind + "'");
}

// ---------------------------------------------------------------------------
// PolicyTable

PolicyTable::PolicyTable(int num_steps, int num_states, int num_actions)
    : num_steps_(num_steps),
      num_states_(num_states),
      num_actions_(num_actions),
      probs_(static_cast<std::size_t>(num_steps) * num_states * num_actions,
             0.0) {}

PolicyTable PolicyTable::uniform(const TabularCore& mdp) {
  PolicyTable pi(mdp.num_steps(), mdp.num_states(), mdp.num_actions());
  std::fill(pi.probs_.begin(), pi.probs_.end(), 1.0 / mdp.num_actions());
  return pi;
}

PolicyTable PolicyTable::deterministic(const TabularCore& mdp,
                                       std::span<const int> actions) {
  PolicyTable pi(mdp.num_steps(), mdp.num_states(), mdp.num_actions());
  const int S = mdp.num_states();
  if (actions.size() != static_cast<std::size_t>(mdp.num_steps()) * S) {
    throw invalid_argument("deterministic policy: wrong number of actions");
  }
  for (int h = 0; h < mdp.num_steps(); ++h) {
    for (int s = 0; s < S; ++s) {
      const int a = actions[static_cast<std::size_t>(h) * S + s];
      if (a < 0 || a >= mdp.num_actions()) {
        throw invalid_argument("deterministic policy: action out of range");
      }
      pi.row(h, s)[a] = 1.0;
    }
  }
  return pi;
}

void PolicyTable::check_stochastic() const {
  for (int h = 0; h < num_steps_; ++h) {
    for (int s = 0; s < num_states_; ++s) {
      if (!is_probability_vector(row(h, s), 1e-10)) {
        throw invalid_argument("policy row (h=" + std::to_string(h) +
                               ", s=" + std::to_string(s) +
                               ") is not a probability vector");
      }
    }
  }
}

void PolicyTable::check_compatible(const TabularCore& mdp) const {
  if (num_steps_ != mdp.num_steps() || num_states_ != mdp.num_states() ||
      num_actions_ != mdp.num_actions()) {
    throw invalid_argument("policy shape does not match the instance");
  }
  check_stochastic();
}

// ---------------------------------------------------------------------------
// Exact values

double ValueTables::at_rho(std::span<const double> rho) const {
  double acc = 0.0;
  for (std::size_t s = 0; s < rho.size(); ++s) acc += rho[s] * v[0][s];
  return acc;
}

ValueTables exact_policy_values(const TabularCore& mdp,
                                const PolicyTable& pi) {
  pi.check_compatible(mdp);
  if (!mdp.is_episodic()) return discounted_policy_values(mdp, pi);
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int H = mdp.horizon();
  ValueTables out;
  out.v.resize(H);
  out.q.resize(H);
  std::vector<double> next;  // V_{h+1}; empty means zero
  for (int h = H - 1; h >= 0; --h) {
    out.q[h] = backup(mdp, h, 1.0, next);
    out.v[h] = average(out.q[h], pi, h, S, A);
    next = out.v[h];
  }
  return out;
}

OptimalSolution exact_optimal_values(const TabularCore& mdp) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  OptimalSolution out;
  if (mdp.is_episodic()) {
    const int H = mdp.horizon();
    out.values.v.resize(H);
    out.values.q.resize(H);
    out.greedy.resize(static_cast<std::size_t>(H) * S);
    std::vector<double> next;
    for (int h = H - 1; h >= 0; --h) {
      out.values.q[h] = backup(mdp, h, 1.0, next);
      const auto best = greedy_actions(out.values.q[h], S, A, &out.values.v[h]);
      std::copy(best.begin(), best.end(),
                out.greedy.begin() + static_cast<std::ptrdiff_t>(h) * S);
      next = out.values.v[h];
    }
    return out;
  }

  // Value iteration until the gamma-contraction bound certifies 1e-12, then
  // exact policy iteration from the resulting greedy policy.
  const double gamma = mdp.gamma();
  std::vector<double> v(S, 0.0), v_next;
  for (long iter = 0; iter < 100'000'000; ++iter) {
    const auto q = backup(mdp, 0, gamma, v);
    greedy_actions(q, S, A, &v_next);
    double diff = 0.0;
    for (int s = 0; s < S; ++s) diff = std::max(diff, std::abs(v_next[s] - v[s]));
    v.swap(v_next);
    if (gamma == 0.0 || diff * gamma / (1.0 - gamma) < 1e-12) break;
  }
  std::vector<int> policy =
      greedy_actions(backup(mdp, 0, gamma, v), S, A, nullptr);
  for (int round = 0; round < 1000; ++round) {
    out.values =
        discounted_policy_values(mdp, PolicyTable::deterministic(mdp, policy));
    const auto& q = out.values.q[0];
    bool changed = false;
    for (int s = 0; s < S; ++s) {
      const double* row = q.data() + static_cast<std::size_t>(s) * A;
      int arg = 0;
      for (int a = 1; a < A; ++a) {
        if (row[a] > row[arg]) arg = a;
      }
      // Switch only on a strict improvement to avoid cycling between ties.
      if (arg != policy[s] && row[arg] > row[policy[s]] + 1e-13) {
        policy[s] = arg;
        changed = true;
      }
    }
    if (!changed) break;
  }
  out.greedy = greedy_actions(out.values.q[0], S, A, &out.values.v[0]);
  return out;
}

std::vector<std::vector<double>> visitation_distributions(
    const TabularCore& mdp, const PolicyTable& pi) {
  pi.check_compatible(mdp);
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  auto joint = [&](int h, const std::vector<double>& state_dist) {
    std::vector<double> d(static_cast<std::size_t>(S) * A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        d[static_cast<std::size_t>(s) * A + a] = state_dist[s] * pi(h, s, a);
      }
    }
    return d;
  };

  std::vector<double> rho(mdp.rho().begin(), mdp.rho().end());
  if (!mdp.is_episodic()) {
    // d_s^T (I - gamma P^pi) = (1 - gamma) rho^T
    const double gamma = mdp.gamma();
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S) -
                              gamma * state_kernel(mdp, pi, 0);
    const Eigen::Map<const Eigen::VectorXd> rho_vec(rho.data(), S);
    const Eigen::VectorXd ds =
        M.transpose().partialPivLu().solve((1.0 - gamma) * rho_vec);
    return {joint(0, std::vector<double>(ds.data(), ds.data() + S))};
  }

  const int H = mdp.horizon();
  std::vector<std::vector<double>> out;
  out.reserve(H);
  std::vector<double> state_dist = rho;
  for (int h = 0; h < H; ++h) {
    out.push_back(joint(h, state_dist));
    if (h + 1 == H) break;
    std::vector<double> next(S, 0.0);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const double w = out.back()[static_cast<std::size_t>(s) * A + a];
        if (w == 0.0) continue;
        const auto row = mdp.transition(h, s, a);
        for (int sp = 0; sp < S; ++sp) next[sp] += w * row[sp];
      }
    }
    state_dist.swap(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

Trajectory rollout(const TabularCore& mdp, const PolicyTable& pi, Rng& rng) {
  if (!mdp.is_episodic()) {
    throw invalid_argument("rollout requires an episodic instance");
  }
  const int H = mdp.horizon();
  Trajectory traj;
  traj.reserve(H);
  int s = rng.categorical(mdp.rho());
  for (int h = 0; h < H; ++h) {
    const int a = rng.categorical(pi.row(h, s));
    const int sp = rng.categorical(mdp.transition(h, s, a));
    traj.push_back({s, a, mdp.reward(h, s, a), sp});
    s = sp;
  }
  return traj;
}

DiscountedSample sample_discounted(const TabularCore& mdp,
                                   const PolicyTable& pi, Rng& rng) {
  if (mdp.is_episodic()) {
    throw invalid_argument("sample_discounted requires a discounted instance");
  }
  const double gamma = mdp.gamma();
  int s = rng.categorical(mdp.rho());
  int a = rng.categorical(pi.row(0, s));
  long h = 0;
  bool keep_going = rng.bernoulli(gamma);
  while (keep_going) {
    if (h >= kSamplerIterationCap) {
      throw Error(ErrorKind::runtime,
                  "sample_discounted exceeded the iteration cap");
    }
    s = rng.categorical(mdp.transition(0, s, a));
    a = rng.categorical(pi.row(0, s));
    ++h;
    keep_going = rng.bernoulli(gamma);
  }
  const int sp = rng.categorical(mdp.transition(0, s, a));
  return {s, a, sp, h};
}

}  // namespace vacbench
