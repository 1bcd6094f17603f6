// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vacbench/vacbench.h"

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "vacbench/agents.hpp"
#include "vacbench/harness.hpp"
#include "vacbench/linear_mdp.hpp"

struct vacb_instance {
  vacbench::LinearMdp lin;
};

struct vacb_regret_log {
  vacbench::RegretLog log;
};

namespace {

thread_local std::string last_error;

vacb_status status_of(vacbench::ErrorKind kind) {
  switch (kind) {
    case vacbench::ErrorKind::invalid_argument:
      return VACB_ERR_INVALID_ARGUMENT;
    case vacbench::ErrorKind::io: return VACB_ERR_IO;
    case vacbench::ErrorKind::config: return VACB_ERR_CONFIG;
    case vacbench::ErrorKind::runtime: return VACB_ERR_RUNTIME;
  }
  return VACB_ERR_RUNTIME;
}

template <class F>
vacb_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return VACB_OK;
  } catch (const vacbench::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return VACB_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return VACB_ERR_RUNTIME;
  } catch (const std::exception& e) {
    last_error = e.what();
    return VACB_ERR_RUNTIME;
  }
}

vacb_status null_argument(const char* name) {
  last_error = std::string(name) + " is NULL";
  return VACB_ERR_INVALID_ARGUMENT;
}

std::string or_empty(const char* s) { return s ? s : ""; }

}  // namespace

extern "C" {

const char* vacb_version(void) { return "0.1.0"; }

const char* vacb_last_error(void) { return last_error.c_str(); }

vacb_status vacb_instance_make(const char* kind, vacb_mode mode,
                               int num_states, int num_actions, int horizon,
                               double gamma, uint64_t seed,
                               vacb_instance** out) {
  if (!kind) return null_argument("kind");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    vacbench::InstanceSpec spec;
    spec.kind = kind;
    spec.mode = mode == VACB_DISCOUNTED ? vacbench::Mode::discounted
                                        : vacbench::Mode::episodic;
    spec.num_states = num_states;
    spec.num_actions = num_actions;
    spec.horizon = horizon;
    spec.gamma = gamma;
    *out = new vacb_instance{vacbench::build_linear_from_tabular(
        vacbench::make_instance(spec, seed))};
  });
}

vacb_status vacb_instance_load(const char* path, vacb_instance** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    *out = new vacb_instance{vacbench::build_linear_from_tabular(
        vacbench::TabularCore::load(path))};
  });
}

vacb_status vacb_instance_save(const vacb_instance* inst, const char* path) {
  if (!inst) return null_argument("instance");
  if (!path) return null_argument("path");
  return guarded([&] { inst->lin.core().save(path); });
}

vacb_status vacb_instance_info_get(const vacb_instance* inst,
                                   vacb_instance_info* out) {
  if (!inst) return null_argument("instance");
  if (!out) return null_argument("out");
  return guarded([&] {
    const auto& core = inst->lin.core();
    out->mode = core.is_episodic() ? VACB_EPISODIC : VACB_DISCOUNTED;
    out->num_states = core.num_states();
    out->num_actions = core.num_actions();
    out->horizon = core.is_episodic() ? core.horizon() : 0;
    out->gamma = core.is_episodic() ? 0.0 : core.gamma();
    out->feature_dim = inst->lin.dim();
  });
}

vacb_status vacb_instance_optimal_value(const vacb_instance* inst,
                                        double* out) {
  if (!inst) return null_argument("instance");
  if (!out) return null_argument("out");
  return guarded([&] {
    const auto& core = inst->lin.core();
    *out = vacbench::exact_optimal_values(core).values.at_rho(core.rho());
  });
}

void vacb_instance_free(vacb_instance* inst) { delete inst; }

vacb_status vacb_run_agent(const vacb_instance* inst, const char* agent_json,
                           long T, uint64_t seed, vacb_regret_log** out) {
  if (!inst) return null_argument("instance");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    nlohmann::json doc = agent_json ? nlohmann::json::parse(agent_json)
                                    : nlohmann::json{{"kind", "vac"}};
    if (!doc.is_object()) {
      throw vacbench::invalid_argument("agent spec must be a JSON object");
    }
    vacbench::AgentOptions opts;
    double delta = 0.05;
    if (doc.contains("solver")) {
      opts.solver = vacbench::SolveConfig::from_json(doc.at("solver"));
      doc.erase("solver");
    }
    if (doc.contains("delta")) {
      delta = doc.at("delta").get<double>();
      doc.erase("delta");
    }
    vacbench::AgentSpec spec;
    try {
      spec = vacbench::AgentSpec::from_json(doc);
    } catch (const vacbench::ConfigError& e) {
      throw vacbench::invalid_argument(e.what());
    }
    try {
      auto log = vacbench::run_agent(spec, inst->lin, T, delta, opts, seed);
      *out = new vacb_regret_log{std::move(log)};
    } catch (const vacbench::AgentError& e) {
      *out = new vacb_regret_log{e.partial()};
      throw;
    }
  });
}

size_t vacb_regret_log_length(const vacb_regret_log* log) {
  return log ? log->log.rows.size() : 0;
}

vacb_status vacb_regret_log_row(const vacb_regret_log* log, size_t index,
                                vacb_regret_row* out) {
  if (!log) return null_argument("log");
  if (!out) return null_argument("out");
  if (index >= log->log.rows.size()) {
    last_error = "row index out of range";
    return VACB_ERR_INVALID_ARGUMENT;
  }
  const auto& r = log->log.rows[index];
  *out = {r.t,         r.v_star, r.v_pi,    r.regret_inst, r.regret_cum,
          r.objective, r.loss,   r.wall_ms, r.samples};
  last_error.clear();
  return VACB_OK;
}

vacb_status vacb_regret_log_write_csv(const vacb_regret_log* log,
                                      const char* path) {
  if (!log) return null_argument("log");
  if (!path) return null_argument("path");
  return guarded([&] {
    std::ofstream out(path, std::ios::binary);
    log->log.write_csv(out);
    if (!out) throw vacbench::Error(vacbench::ErrorKind::io,
                                    std::string("cannot write ") + path);
  });
}

void vacb_regret_log_free(vacb_regret_log* log) { delete log; }

int vacb_cmd_run(const char* config_path, int workers, const char* out_dir) {
  if (!config_path) {
    std::cerr << "config error: no config path\n";
    return 2;
  }
  try {
    return vacbench::cmd_run({config_path, workers, or_empty(out_dir)},
                             std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

int vacb_cmd_verify(uint64_t seed, const char* out_dir, int flip_reparam_sign) {
  try {
    return vacbench::cmd_verify({seed, or_empty(out_dir), flip_reparam_sign != 0},
                                std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int vacb_cmd_solve(const char* instance_path, long episodes, uint64_t seed,
                   double alpha, double B, const char* solver_path,
                   const char* out_dir) {
  if (!instance_path) {
    std::cerr << "solve error: no instance path\n";
    return 2;
  }
  try {
    vacbench::SolveCommand cmd;
    cmd.instance_path = instance_path;
    cmd.episodes = episodes;
    cmd.seed = seed;
    cmd.alpha = alpha;
    cmd.B = B;
    cmd.solver_path = or_empty(solver_path);
    cmd.out_dir = or_empty(out_dir);
    return vacbench::cmd_solve(cmd, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // extern "C"
