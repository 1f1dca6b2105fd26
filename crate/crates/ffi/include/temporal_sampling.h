#ifndef TEMPORAL_SAMPLING_H
#define TEMPORAL_SAMPLING_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_NULL_POINTER = 1,
  TS_STATUS_INVALID_UTF8 = 2,
  TS_STATUS_BUFFER_TOO_SMALL = 3,
  TS_STATUS_PARSE = 10,
  TS_STATUS_DUPLICATE_RECORD = 11,
  TS_STATUS_RAGGED_CELL = 12,
  TS_STATUS_SAMPLE_GAP = 13,
  TS_STATUS_MISSING_CELL = 14,
  TS_STATUS_RESERVED_CHECKPOINT = 15,
  TS_STATUS_NOT_GREEDY = 16,
  TS_STATUS_EMPTY_DATASET = 17,
  TS_STATUS_INVALID_BUDGET = 20,
  TS_STATUS_INVALID_COUNTS = 21,
  TS_STATUS_BUDGET_EXCEEDS_SAMPLES = 22,
  TS_STATUS_NOT_ENOUGH_CHECKPOINTS = 23,
  TS_STATUS_INVALID_REPLICATES = 24,
  TS_STATUS_MISSING_REWARD = 25,
  TS_STATUS_SHAPE_MISMATCH = 26,
  TS_STATUS_INVALID_CONFIG = 27,
  TS_STATUS_POOL_MISMATCH = 28,
  TS_STATUS_IO = 30,
  TS_STATUS_PANIC = 99,
} TsStatus;

/*
 Tie rule for majority voting.
 */
typedef enum TsTieRule {
  /*
   Uniformly random among tied answers.
   */
  TS_TIE_RULE_UNIFORM_RANDOM = 0,
  /*
   The tied answer first seen at the latest checkpoint.
   */
  TS_TIE_RULE_PREFER_LATEST = 1,
} TsTieRule;

/*
 Opaque evaluation dataset.
 */
typedef struct TsDataset TsDataset;

/*
 Opaque correctness trajectories (one greedy sample per checkpoint).
 */
typedef struct TsTrajectories TsTrajectories;

/*
 Monte Carlo estimate of an aggregated metric.
 */
typedef struct TsAggregate {
  double value;
  double std_error;
  size_t replicates;
} TsAggregate;

/*
 Forgetting metrics in percent. `p_lost` is meaningful only when
 `has_p_lost` is true.
 */
typedef struct TsForgettingReport {
  double p_ft;
  double p_ecs;
  double p_tfs;
  double p_lost;
  bool has_p_lost;
  double ever_forgotten_pct;
  size_t problems;
  size_t final_correct;
  size_t ever_correct;
  size_t ever_forgotten;
} TsForgettingReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer is
 valid until the next call into this library on the same thread.
 */
const char *ts_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ts_version(void);

/*
 Parses JSONL generation records from a memory buffer.

 # Safety
 `data` must point to `len` readable bytes; `out` must be writable.
 */
enum TsStatus ts_dataset_load_jsonl(const uint8_t *data, size_t len, struct TsDataset **out);

/*
 Loads a JSONL dataset from a file path.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TsStatus ts_dataset_load_path(const char *path, struct TsDataset **out);

/*
 Releases a dataset. NULL is ignored.

 # Safety
 `ds` must come from a `ts_dataset_load_*` call and not be freed twice.
 */
void ts_dataset_free(struct TsDataset *ds);

/*
 Number of problems, or 0 for NULL.

 # Safety
 `ds` must be NULL or a live dataset handle.
 */
size_t ts_dataset_num_problems(const struct TsDataset *ds);

/*
 Number of checkpoints, or 0 for NULL.

 # Safety
 `ds` must be NULL or a live dataset handle.
 */
size_t ts_dataset_num_checkpoints(const struct TsDataset *ds);

/*
 Samples per (problem, checkpoint) cell, or 0 for NULL.

 # Safety
 `ds` must be NULL or a live dataset handle.
 */
size_t ts_dataset_samples_per_cell(const struct TsDataset *ds);

/*
 Writes the per-checkpoint draw counts of budget `k` over `t` checkpoints
 into `allocation`, which must hold `t` values.

 # Safety
 `allocation` must point to `allocation_len` writable values.
 */
enum TsStatus ts_balanced_partition(size_t k, size_t t, size_t *allocation, size_t allocation_len);

/*
 Probability that `kj` draws without replacement from `n` samples, `c` of
 them correct, are all wrong.

 # Safety
 `out` must be writable.
 */
enum TsStatus ts_survival_ratio(size_t n, size_t c, size_t kj, double *out);

/*
 Pass@k at one checkpoint (0 = latest). `per_problem` may be NULL;
 otherwise it must hold one value per problem.

 # Safety
 `ds` must be a live handle; `value` must be writable; `per_problem`, when
 not NULL, must point to `per_problem_len` writable values.
 */
enum TsStatus ts_pass_at_k(const struct TsDataset *ds,
                           size_t k,
                           size_t checkpoint,
                           double *value,
                           double *per_problem,
                           size_t per_problem_len);

/*
 Pass@k|t: budget `k` split over the `t` latest checkpoints.

 # Safety
 Same contract as [`ts_pass_at_k`].
 */
enum TsStatus ts_pass_at_k_given_t(const struct TsDataset *ds,
                                   size_t k,
                                   size_t t,
                                   double *value,
                                   double *per_problem,
                                   size_t per_problem_len);

/*
 Maj@k|t estimated from `replicates` seeded Monte Carlo draws.
 `tie_rule` is a [`TsTieRule`] value.

 # Safety
 `ds` must be a live handle; `out` must be writable.
 */
enum TsStatus ts_majority_at_k_given_t(const struct TsDataset *ds,
                                       size_t k,
                                       size_t t,
                                       size_t replicates,
                                       uint64_t seed,
                                       uint32_t tie_rule,
                                       struct TsAggregate *out);

/*
 BoN@k|t estimated from `replicates` seeded Monte Carlo draws. Every
 record needs a reward.

 # Safety
 `ds` must be a live handle; `out` must be writable.
 */
enum TsStatus ts_best_of_n_at_k_given_t(const struct TsDataset *ds,
                                        size_t k,
                                        size_t t,
                                        size_t replicates,
                                        uint64_t seed,
                                        struct TsAggregate *out);

/*
 Parses greedy trajectory records (optionally with "base" records) from a
 memory buffer.

 # Safety
 `data` must point to `len` readable bytes; `out` must be writable.
 */
enum TsStatus ts_trajectories_load_jsonl(const uint8_t *data,
                                         size_t len,
                                         struct TsTrajectories **out);

/*
 Loads trajectories from a file path.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TsStatus ts_trajectories_load_path(const char *path, struct TsTrajectories **out);

/*
 Releases trajectories. NULL is ignored.

 # Safety
 `traj` must come from a `ts_trajectories_load_*` call and not be freed twice.
 */
void ts_trajectories_free(struct TsTrajectories *traj);

/*
 Forgetting metrics of a trajectory matrix.

 # Safety
 `traj` must be a live handle; `out` must be writable.
 */
enum TsStatus ts_forgetting_report(const struct TsTrajectories *traj,
                                   struct TsForgettingReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEMPORAL_SAMPLING_H */
