#ifndef REGRETLAB_H
#define REGRETLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a call.
typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_INVALID_UTF8 = 2,
  RL_STATUS_INVALID_ARGUMENT = 3,
  RL_STATUS_INVALID_MDP = 4,
  RL_STATUS_INVALID_CONFIG = 5,
  RL_STATUS_CONTRACT = 6,
  RL_STATUS_NUMERICAL = 7,
  RL_STATUS_NON_CONVERGENCE = 8,
  RL_STATUS_INSUFFICIENT_DATA = 9,
  RL_STATUS_IO = 10,
  // An output buffer was too small; the required length was written.
  RL_STATUS_BUFFER_TOO_SMALL = 11,
  RL_STATUS_PANIC = 12,
} RlStatus;

// Optimal-gain solver selector, passed as its integer value.
typedef enum RlGainMethod {
  RL_GAIN_METHOD_BRUTE_FORCE = 0,
  RL_GAIN_METHOD_RELATIVE_VI = 1,
} RlGainMethod;

// Result of an experiment run.
typedef struct RlExperiment RlExperiment;

// Continuing or finite-horizon MDP.
typedef struct RlModel RlModel;

// Connectedness flags of an MDP.
typedef struct RlClassification {
  bool ergodic;
  bool unichain;
  bool communicating;
  bool weakly_communicating;
  // False when ergodic/unichain were checked on a policy sample only.
  bool exhaustive;
} RlClassification;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into the library on this thread.
const char *rl_last_error(void);

// Library version as a static NUL-terminated string.
const char *rl_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void rl_string_free(char *s);

// Parses an MDP JSON document.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum RlStatus rl_model_from_json(const char *json, struct RlModel **out);

// Builds a named environment (`heaven_hell`, `two_point_bandit`, `chain`,
// `random`). `params_json` is a JSON object or NULL for defaults.
//
// # Safety
// String arguments must be NUL-terminated or NULL where allowed; `out`
// must be writable.
enum RlStatus rl_model_named(const char *name, const char *params_json, struct RlModel **out);

// # Safety
// `m` must come from this library and not have been freed. NULL is ignored.
void rl_model_free(struct RlModel *m);

// Writes the state count, action count and horizon (0 when continuing).
//
// # Safety
// `m` must be a live handle; out pointers must be writable.
enum RlStatus rl_model_shape(const struct RlModel *m,
                             size_t *n_states,
                             size_t *n_actions,
                             size_t *horizon);

// Serialises the model back to JSON; free the result with
// [`rl_string_free`].
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum RlStatus rl_model_to_json(const struct RlModel *m, char **out);

// # Safety
// `m` must be a live handle; `out` must be writable.
enum RlStatus rl_model_classify(const struct RlModel *m,
                                uint64_t policy_cap,
                                struct RlClassification *out);

// Gain of the stationary policy `actions[0..n_states]` from every start
// state, written to `out[0..n_states]`. `needed` (nullable) receives the
// number of values.
//
// # Safety
// `actions` must hold `n_actions_len` values; `out` must hold `out_len`.
enum RlStatus rl_model_gain(const struct RlModel *m,
                            const size_t *actions,
                            size_t n_actions_len,
                            double *out,
                            size_t out_len,
                            size_t *needed);

// Optimal gain from every start state, written to `out[0..n_states]`.
// `method` is an [`RlGainMethod`] value.
//
// # Safety
// `out` must hold `out_len` values; `needed` may be NULL.
enum RlStatus rl_model_optimal_gain(const struct RlModel *m,
                                    uint32_t method,
                                    double *out,
                                    size_t out_len,
                                    size_t *needed);

// Exact expected optimism of lazy posterior sampling with a reward
// threshold signal on the two-point bandit.
//
// # Safety
// Out pointers must be writable.
enum RlStatus rl_exact_counterexample(size_t h_max,
                                      size_t t,
                                      double p,
                                      double *signed_sum,
                                      double *absolute_sum);

// Exact expected regret of posterior sampling on heaven and hell.
//
// # Safety
// `out` must be writable.
enum RlStatus rl_exact_heaven_hell(size_t t, double p, double *out);

// Runs an experiment described by a JSON config. `jobs` = 0 uses the
// global thread pool. Relative paths in the config resolve against the
// working directory. Outputs are identical for every `jobs`.
//
// # Safety
// `config_json` must be NUL-terminated; `out` must be writable.
enum RlStatus rl_experiment_run(const char *config_json, size_t jobs, struct RlExperiment **out);

// # Safety
// `e` must come from this library and not have been freed. NULL is ignored.
void rl_experiment_free(struct RlExperiment *e);

// Summary as JSON (the contents of `summary.json`); free with
// [`rl_string_free`].
//
// # Safety
// `e` must be a live handle; `out` must be writable.
enum RlStatus rl_experiment_summary_json(const struct RlExperiment *e, char **out);

// Mean cumulative regret at `t = 1..T`.
//
// # Safety
// `out` must hold `out_len` values; `needed` may be NULL.
enum RlStatus rl_experiment_mean_curve(const struct RlExperiment *e,
                                       double *out,
                                       size_t out_len,
                                       size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REGRETLAB_H */
