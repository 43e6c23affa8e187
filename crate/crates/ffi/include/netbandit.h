#ifndef NETBANDIT_H
#define NETBANDIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status code returned by every fallible call.
 */
typedef enum NbStatus {
  NB_STATUS_OK = 0,
  NB_STATUS_NULL_POINTER = 1,
  NB_STATUS_INVALID_ARGUMENT = 2,
  NB_STATUS_CONFIG = 3,
  NB_STATUS_RUNTIME = 4,
  NB_STATUS_IO = 5,
  NB_STATUS_BUFFER_TOO_SMALL = 6,
  NB_STATUS_PANIC = 7,
} NbStatus;

/*
 A list of experiment cells, one per (experiment, policy).
 */
typedef struct NbExperiment NbExperiment;

/*
 A ground-truth interference matrix.
 */
typedef struct NbInstance NbInstance;

/*
 Aggregated regret curves of one cell.
 */
typedef struct NbResult NbResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *nb_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *nb_version(void);

/*
 Random mixed-signal instance.

 # Safety
 `out` must be null or valid for writes.
 */
enum NbStatus nb_instance_mixed_signal(size_t d,
                                       double beta,
                                       double s0,
                                       uint64_t seed,
                                       struct NbInstance **out);

/*
 Circulant instance with `s` entries of `delta` per row.

 # Safety
 `out` must be null or valid for writes.
 */
enum NbStatus nb_instance_circulant(size_t d, size_t s, double delta, struct NbInstance **out);

/*
 Instance from a row-major `d x d` effect matrix.

 # Safety
 `effects` must point to `d * d` readable doubles; `out` must be null or
 valid for writes.
 */
enum NbStatus nb_instance_from_effects(size_t d, const double *effects, struct NbInstance **out);

/*
 # Safety
 `inst` must be null or a live handle; `out` valid for writes.
 */
enum NbStatus nb_instance_dim(const struct NbInstance *inst, size_t *out);

/*
 Copies the column sums `theta` into `buf` (length at least `d`).

 # Safety
 `inst` must be null or a live handle; `buf` valid for `len` writes.
 */
enum NbStatus nb_instance_theta(const struct NbInstance *inst, double *buf, size_t len);

/*
 Writes the optimal action `sign(theta)` (entries +1/-1) into `buf`.

 # Safety
 `inst` must be null or a live handle; `buf` valid for `len` writes.
 */
enum NbStatus nb_instance_oracle_action(const struct NbInstance *inst, int8_t *buf, size_t len);

/*
 Instantaneous regret of playing `action` (length `len`, entries +1/-1).

 # Safety
 `inst` must be null or a live handle; `action` readable for `len` values;
 `out` valid for writes.
 */
enum NbStatus nb_instance_regret(const struct NbInstance *inst,
                                 const int8_t *action,
                                 size_t len,
                                 double *out);

/*
 # Safety
 `inst` must be null or a handle not freed before.
 */
void nb_instance_free(struct NbInstance *inst);

/*
 Loads an experiment file or preset name.

 # Safety
 `path_or_preset` must be null or NUL-terminated; `out` valid for writes.
 */
enum NbStatus nb_experiment_load(const char *path_or_preset, struct NbExperiment **out);

/*
 Parses experiment TOML text; relative paths resolve against the working
 directory.

 # Safety
 `text` must be null or NUL-terminated; `out` valid for writes.
 */
enum NbStatus nb_experiment_parse(const char *text, struct NbExperiment **out);

/*
 Number of cells.

 # Safety
 `exp` must be null or a live handle; `out` valid for writes.
 */
enum NbStatus nb_experiment_cell_count(const struct NbExperiment *exp, size_t *out);

/*
 Overrides replicate count, horizon and base seed of every cell. A zero
 `runs` or `horizon` leaves that field unchanged; so does a null `seed`.

 # Safety
 `exp` must be null or a live handle; `seed` null or readable.
 */
enum NbStatus nb_experiment_override(struct NbExperiment *exp,
                                     size_t runs,
                                     size_t horizon,
                                     const uint64_t *seed);

/*
 Runs cell `index` and returns its aggregated result.

 # Safety
 `exp` must be null or a live handle; `out` valid for writes.
 */
enum NbStatus nb_experiment_run(const struct NbExperiment *exp,
                                size_t index,
                                struct NbResult **out);

/*
 # Safety
 `exp` must be null or a handle not freed before.
 */
void nb_experiment_free(struct NbExperiment *exp);

/*
 Number of rounds in each curve.

 # Safety
 `res` must be null or a live handle; `out` valid for writes.
 */
enum NbStatus nb_result_horizon(const struct NbResult *res, size_t *out);

/*
 Mean cumulative regret per round.

 # Safety
 `res` must be null or a live handle; `buf` valid for `len` writes.
 */
enum NbStatus nb_result_mean(const struct NbResult *res, double *buf, size_t len);

/*
 Standard deviation of cumulative regret per round.

 # Safety
 `res` must be null or a live handle; `buf` valid for `len` writes.
 */
enum NbStatus nb_result_std(const struct NbResult *res, double *buf, size_t len);

/*
 Mean per-individual cumulative regret per round.

 # Safety
 `res` must be null or a live handle; `buf` valid for `len` writes.
 */
enum NbStatus nb_result_per_individual(const struct NbResult *res, double *buf, size_t len);

/*
 Writes the result as CSV, keeping every `stride`-th round.

 # Safety
 `res` must be null or a live handle; `path` null or NUL-terminated.
 */
enum NbStatus nb_result_write_csv(const struct NbResult *res, const char *path, size_t stride);

/*
 # Safety
 `res` must be null or a handle not freed before.
 */
void nb_result_free(struct NbResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETBANDIT_H */
