#ifndef FAITHRL_H
#define FAITHRL_H

/*
 * C API of the faithrl shared library.
 *
 * Every function that can fail returns a status code:
 *   FAITHRL_OK        0  success
 *   FAITHRL_FAILURE   1  runtime failure (I/O, judge transport, aborted filter)
 *   FAITHRL_USAGE     2  bad arguments, bad config, or malformed input files
 *   FAITHRL_NUMERIC   3  numerical failure (non-finite values, undefined THS,
 *                        enumeration overflow)
 * After a non-zero return, faithrl_last_error() describes the failure; after a
 * successful command run, faithrl_last_summary() holds a printable summary.
 * Both are thread-local and overwritten by the next call on the same thread.
 *
 * A faithrl_session carries one experiment configuration (the same dotted-key
 * format the config files use). Sessions are not thread-safe; use one per
 * thread. All paths are UTF-8. Optional path arguments accept NULL or "" to
 * mean "do not write this file".
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#define FAITHRL_OK 0
#define FAITHRL_FAILURE 1
#define FAITHRL_USAGE 2
#define FAITHRL_NUMERIC 3

/* Library semantic version, e.g. "0.1.0". */
const char* faithrl_version(void);

/* Message of the most recent failure on this thread ("" if none). */
const char* faithrl_last_error(void);

/* Printable summary of the most recent successful run on this thread. */
const char* faithrl_last_summary(void);

/* --- scalar helpers -------------------------------------------------------- */

/* Truthful-helpfulness score of (current_x, current_y) against the baseline.
 * Fails with FAITHRL_NUMERIC when baseline_y == 0. */
int faithrl_ths(double baseline_x, double baseline_y, double current_x,
                double current_y, double* out);

/* Outcome codes for faithrl_geometric_reward. */
#define FAITHRL_OUTCOME_CORRECT 0
#define FAITHRL_OUTCOME_MISS 1
#define FAITHRL_OUTCOME_HALLUCINATION 2

/* Geometric reward: correct -> +baseline_y, miss -> 0,
 * hallucination -> -baseline_x. */
int faithrl_geometric_reward(int outcome, double baseline_x, double baseline_y,
                             double* out);

/* Group-relative advantages (population normalization):
 * out[i] = (rewards[i] - mean) / max(stddev, std_floor); exactly zero for a
 * zero-spread group. Requires n >= 2. */
int faithrl_group_advantages(const double* rewards, size_t n, double std_floor,
                             double* out);

/* Faithfulness-aware modulation factor M(advantage, verdict, alpha);
 * verdict is 0 or 1, alpha in [0,1]. */
int faithrl_modulation(double advantage, int verdict, double alpha, double* out);

/* Clipped surrogate min(ratio*A, clip(ratio, 1-eps, 1+eps)*A); ratio > 0. */
int faithrl_clipped_surrogate(double ratio, double advantage, double clip_epsilon,
                              double* out);

/* --- sessions ---------------------------------------------------------------- */

typedef struct faithrl_session faithrl_session;

/* Empty configuration. Returns NULL only on allocation failure. */
faithrl_session* faithrl_session_create(void);

/* Parses a dotted-key config file; NULL on parse failure (see
 * faithrl_last_error). */
faithrl_session* faithrl_session_create_from_file(const char* path);

/* Sets (or overrides) one config key. */
int faithrl_session_set(faithrl_session* session, const char* key, const char* value);

void faithrl_session_destroy(faithrl_session* session);

/* --- commands ---------------------------------------------------------------- */

/* Trains the toy policy per the session config; writes the per-step metrics
 * CSV and (optionally) a run manifest. */
int faithrl_train(faithrl_session* session, const char* metrics_csv_path,
                  const char* manifest_path);

/* Score-only pipeline: instances + trajectories (+ verdicts, or NULL to ask
 * the configured judge for step verdicts) -> modulated-advantage JSON lines. */
int faithrl_score(faithrl_session* session, const char* instances_path,
                  const char* trajectories_path, const char* verdicts_path,
                  const char* scores_path, const char* manifest_path);

/* Unanswerable-instance construction: prune + density + solvability filter. */
int faithrl_prune(faithrl_session* session, const char* instances_path,
                  const char* output_path, const char* report_path,
                  const char* manifest_path);

/* Runs the theorem-1/2/3 verification. *out_holds is set to 1 when the
 * property held, 0 when it was measured and failed (the return code is
 * FAITHRL_OK either way; non-OK means the verification could not run). */
int faithrl_verify(faithrl_session* session, int theorem, const char* report_path,
                   const char* manifest_path, int* out_holds);

/* Aggregates metrics CSVs into a summary table (also left in
 * faithrl_last_summary). */
int faithrl_report(const char* const* csv_paths, size_t n_paths,
                   const char* summary_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FAITHRL_H */
