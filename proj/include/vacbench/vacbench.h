/* Copyright 2026 The vacbench Authors
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef VACBENCH_VACBENCH_H_
#define VACBENCH_VACBENCH_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define VACB_API __declspec(dllexport)
#else
#define VACB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vacb_status {
  VACB_OK = 0,
  VACB_ERR_INVALID_ARGUMENT = 1,
  VACB_ERR_IO = 2,
  VACB_ERR_CONFIG = 3,
  VACB_ERR_RUNTIME = 4
} vacb_status;

typedef enum vacb_mode { VACB_EPISODIC = 0, VACB_DISCOUNTED = 1 } vacb_mode;

/* Opaque handles. Each must be released with its _free function. */
typedef struct vacb_instance vacb_instance;
typedef struct vacb_regret_log vacb_regret_log;

typedef struct vacb_instance_info {
  vacb_mode mode;
  int num_states;
  int num_actions;
  int horizon; /* 0 for discounted instances */
  double gamma; /* 0 for episodic instances */
  int feature_dim; /* of the one-hot embedding */
} vacb_instance_info;

typedef struct vacb_regret_row {
  long t;
  double v_star;
  double v_pi;
  double regret_inst;
  double regret_cum;
  double objective;
  double loss;
  double wall_ms;
  long samples;
} vacb_regret_row;

VACB_API const char* vacb_version(void);

/* Message of the last failing call on this thread, "" if none. */
VACB_API const char* vacb_last_error(void);

/* kind: "random", "chain_lock" or "two_state". `horizon` is read for
 * episodic instances, `gamma` for discounted ones. */
VACB_API vacb_status vacb_instance_make(const char* kind, vacb_mode mode,
                                        int num_states, int num_actions,
                                        int horizon, double gamma,
                                        uint64_t seed, vacb_instance** out);
VACB_API vacb_status vacb_instance_load(const char* path, vacb_instance** out);
VACB_API vacb_status vacb_instance_save(const vacb_instance* inst,
                                        const char* path);
VACB_API vacb_status vacb_instance_info_get(const vacb_instance* inst,
                                            vacb_instance_info* out);
/* V*(rho) from the exact dynamic-programming oracle. */
VACB_API vacb_status vacb_instance_optimal_value(const vacb_instance* inst,
                                                 double* out);
VACB_API void vacb_instance_free(vacb_instance* inst);

/* agent_json: {"kind": "vac"|"vanilla_ac"|"eps_greedy"|"mex", "alpha",
 * "B", "epsilon", "delta", "solver": {...}}. alpha and B default to the
 * theory values. NULL means {"kind": "vac"}. On an agent failure the
 * partial log is still returned through `out` with VACB_ERR_RUNTIME. */
VACB_API vacb_status vacb_run_agent(const vacb_instance* inst,
                                    const char* agent_json, long T,
                                    uint64_t seed, vacb_regret_log** out);
VACB_API size_t vacb_regret_log_length(const vacb_regret_log* log);
VACB_API vacb_status vacb_regret_log_row(const vacb_regret_log* log,
                                         size_t index, vacb_regret_row* out);
VACB_API vacb_status vacb_regret_log_write_csv(const vacb_regret_log* log,
                                               const char* path);
VACB_API void vacb_regret_log_free(vacb_regret_log* log);

/* CLI commands. Each returns the process exit code and prints to the
 * standard streams. */
VACB_API int vacb_cmd_run(const char* config_path, int workers,
                          const char* out_dir);
VACB_API int vacb_cmd_verify(uint64_t seed, const char* out_dir,
                             int flip_reparam_sign);
VACB_API int vacb_cmd_solve(const char* instance_path, long episodes,
                            uint64_t seed, double alpha, double B,
                            const char* solver_path, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* VACBENCH_VACBENCH_H_ */
