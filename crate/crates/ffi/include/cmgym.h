#ifndef CMGYM_H
#define CMGYM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CmgymStatus {
  CMGYM_STATUS_OK = 0,
  CMGYM_STATUS_NULL_POINTER = 1,
  CMGYM_STATUS_INVALID_UTF8 = 2,
  CMGYM_STATUS_CONFIG = 3,
  /**
   * Called out of order, e.g. step before reset.
   */
  CMGYM_STATUS_LIFECYCLE = 4,
  CMGYM_STATUS_UNKNOWN_AGENT = 5,
  CMGYM_STATUS_BAD_ACTION = 6,
  /**
   * The caller's buffer is too small; the required length was written.
   */
  CMGYM_STATUS_BUFFER_TOO_SMALL = 7,
  CMGYM_STATUS_INTERNAL = 8,
  CMGYM_STATUS_PANIC = 9,
} CmgymStatus;

/**
 * Opaque environment handle.
 */
typedef struct CmgymEnv CmgymEnv;

/**
 * Per-agent outcome of the last step.
 */
typedef struct CmgymAgentResult {
  uint64_t agent_id;
  double reward;
  bool done;
  /**
   * -1 while flying; otherwise 0 energy depleted, 1 nav lost, 2 touchdown.
   */
  int32_t terminal;
  /**
   * Vertiport index landed at, or -1.
   */
  int64_t landed_vertiport;
} CmgymAgentResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * call on the same thread; never NULL.
 */
const char *cmgym_last_error(void);

/**
 * Builds an environment from TOML text (NULL or "" for defaults).
 *
 * # Safety
 * `config_toml` must be NULL or a nul-terminated string; `out` must be a
 * valid pointer.
 */
enum CmgymStatus cmgym_env_new(const char *config_toml, struct CmgymEnv **out);

/**
 * # Safety
 * `env` must be NULL or a handle from `cmgym_env_new` not yet freed.
 */
void cmgym_env_free(struct CmgymEnv *env);

/**
 * Length of every observation vector.
 *
 * # Safety
 * `env` must be a live handle.
 */
size_t cmgym_env_observation_len(const struct CmgymEnv *env);

/**
 * Starts a new episode; writes the number of live agents to `n_agents`
 * (may be NULL).
 *
 * # Safety
 * `env` must be a live handle.
 */
enum CmgymStatus cmgym_env_reset(struct CmgymEnv *env, uint64_t seed, size_t *n_agents);

/**
 * Simulation clock in seconds.
 *
 * # Safety
 * `env` must be a live handle.
 */
double cmgym_env_time(const struct CmgymEnv *env);

/**
 * Copies the live agent ids, ascending, into `buf`. `len` receives the
 * count; if it exceeds `cap`, nothing is copied and BufferTooSmall returned.
 *
 * # Safety
 * `buf` must hold `cap` elements (may be NULL when `cap` is 0); `len` valid.
 */
enum CmgymStatus cmgym_env_agent_ids(const struct CmgymEnv *env,
                                     uint64_t *buf,
                                     size_t cap,
                                     size_t *len);

/**
 * Copies agent `id`'s latest observation into `buf`, which must hold
 * `cmgym_env_observation_len` values.
 *
 * # Safety
 * `buf` must hold `cap` doubles.
 */
enum CmgymStatus cmgym_env_observation(const struct CmgymEnv *env,
                                       uint64_t id,
                                       double *buf,
                                       size_t cap);

/**
 * Advances one decision interval. `actions[i]` (an index into the action
 * list) applies to `ids[i]`; agents not listed take NO_ALERT. `n_results`
 * (may be NULL) receives the number of per-agent results.
 *
 * # Safety
 * `ids` and `actions` must hold `n` elements each (may be NULL if `n` is 0).
 */
enum CmgymStatus cmgym_env_step(struct CmgymEnv *env,
                                const uint64_t *ids,
                                const uint32_t *actions,
                                size_t n,
                                size_t *n_results);

/**
 * Copies the last step's per-agent results, ascending by agent id.
 *
 * # Safety
 * `buf` must hold `cap` elements; `len` must be valid.
 */
enum CmgymStatus cmgym_env_step_results(const struct CmgymEnv *env,
                                        struct CmgymAgentResult *buf,
                                        size_t cap,
                                        size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CMGYM_H */
