#ifndef RAILMAPF_H
#define RAILMAPF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Planner choice for [`rm_solve`].
 */
typedef enum RmPlanner {
  RM_PLANNER_PRIORITIZED = 0,
  RM_PLANNER_LNS = 1,
} RmPlanner;

typedef enum RmStatus {
  RM_STATUS_OK = 0,
  RM_STATUS_NULL_POINTER = 1,
  RM_STATUS_INVALID_ARGUMENT = 2,
  RM_STATUS_PARSE_ERROR = 3,
  /**
   * The episode has already ended.
   */
  RM_STATUS_TERMINATED = 4,
  RM_STATUS_NOT_FOUND = 5,
  RM_STATUS_INTERNAL = 6,
} RmStatus;

typedef struct RmEnv RmEnv;

typedef struct RmPlan RmPlan;

typedef struct RmSim RmSim;

/**
 * Parameters of one slot of the test schedule.
 */
typedef struct RmTestParams {
  uint32_t test;
  uint32_t env;
  uint32_t n_agents;
  uint32_t n_cities;
  uint32_t x_dim;
  uint32_t y_dim;
  uint32_t malfunction_interval;
  uint32_t max_rails_in_city;
  uint32_t max_rails_between_cities;
} RmTestParams;

/**
 * Snapshot of one agent. `phase` is 0 off the grid, 1 on it, 2 done.
 * `row`, `col` and `direction` (0 N, 1 E, 2 S, 3 W) are -1 off the grid.
 */
typedef struct RmAgentState {
  uint32_t phase;
  int64_t row;
  int64_t col;
  int32_t direction;
  uint32_t malfunction_remaining;
  bool deadlocked;
  /**
   * Arrival step, or -1.
   */
  int64_t arrived_at;
} RmAgentState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread; empty if none.
 */
const char *rm_last_error_message(void);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void rm_string_free(char *s);

/**
 * Schedule parameters of environment `env` of test `test`.
 */
enum RmStatus rm_schedule(uint32_t test, uint32_t env, struct RmTestParams *out);

/**
 * Generates the environment for a schedule slot.
 */
enum RmStatus rm_env_generate(uint32_t test, uint32_t env, uint64_t seed, struct RmEnv **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string.
 */
enum RmStatus rm_env_from_json(const char *json, struct RmEnv **out);

/**
 * # Safety
 * `env` must be a live handle.
 */
enum RmStatus rm_env_to_json(const struct RmEnv *env, char **out);

/**
 * # Safety
 * `env` must be a live handle.
 */
enum RmStatus rm_env_n_agents(const struct RmEnv *env, uint32_t *out);

/**
 * Episode step limit of an environment.
 *
 * # Safety
 * `env` must be a live handle.
 */
enum RmStatus rm_t_max(const struct RmEnv *env, uint32_t *out);

/**
 * # Safety
 * `env` must come from this library and not be freed twice.
 */
void rm_env_free(struct RmEnv *env);

/**
 * Starts an episode. The environment handle may be freed afterwards.
 *
 * # Safety
 * `env` must be a live handle.
 */
enum RmStatus rm_sim_new(const struct RmEnv *env, uint64_t seed, struct RmSim **out);

/**
 * Advances one step. `actions` holds one code per agent: 0 do nothing,
 * 1 left, 2 forward, 3 right, 4 stop.
 *
 * # Safety
 * `sim` must be a live handle and `actions` must point to `n` bytes.
 */
enum RmStatus rm_sim_step(struct RmSim *sim, const uint8_t *actions, size_t n);

/**
 * # Safety
 * `sim` must be a live handle.
 */
enum RmStatus rm_sim_t(const struct RmSim *sim, uint32_t *out);

/**
 * # Safety
 * `sim` must be a live handle.
 */
enum RmStatus rm_sim_is_terminated(const struct RmSim *sim, bool *out);

/**
 * # Safety
 * `sim` must be a live handle.
 */
enum RmStatus rm_sim_agent_state(const struct RmSim *sim, uint32_t agent, struct RmAgentState *out);

/**
 * Normalized score of the episode so far.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum RmStatus rm_sim_score(const struct RmSim *sim, double *out);

/**
 * # Safety
 * `sim` must come from this library and not be freed twice.
 */
void rm_sim_free(struct RmSim *sim);

/**
 * Plans paths for every agent. `iterations` and `seed` only matter for
 * [`RmPlanner::Lns`].
 *
 * # Safety
 * `env` must be a live handle.
 */
enum RmStatus rm_solve(const struct RmEnv *env,
                       enum RmPlanner planner,
                       uint32_t iterations,
                       uint64_t seed,
                       struct RmPlan **out);

/**
 * # Safety
 * `plan` must be a live handle.
 */
enum RmStatus rm_plan_to_json(const struct RmPlan *plan, char **out);

/**
 * Sum of arrival times over planned agents.
 *
 * # Safety
 * `plan` must be a live handle.
 */
enum RmStatus rm_plan_cost(const struct RmPlan *plan, uint64_t *out);

/**
 * # Safety
 * `plan` must be a live handle.
 */
enum RmStatus rm_plan_planned(const struct RmPlan *plan, uint32_t *out);

/**
 * # Safety
 * `plan` must come from this library and not be freed twice.
 */
void rm_plan_free(struct RmPlan *plan);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAILMAPF_H */
