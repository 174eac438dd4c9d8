#ifndef GRAPHBAL_H
#define GRAPHBAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GbMethod {
  GB_METHOD_KNN = 0,
  GB_METHOD_CROSSMATCH = 1,
  GB_METHOD_RUNS = 2,
  GB_METHOD_RANKS = 3,
} GbMethod;

typedef enum GbForm {
  /*
   Wald for knn, crossmatch and ranks; min for runs.
   */
  GB_FORM_DEFAULT = 0,
  GB_FORM_WALD = 1,
  GB_FORM_MAX = 2,
  GB_FORM_MIN = 3,
} GbForm;

typedef enum GbPath {
  GB_PATH_GREEDY_EDGE = 0,
  GB_PATH_NN_CHAIN = 1,
  GB_PATH_HILBERT = 2,
  GB_PATH_EXACT = 3,
} GbPath;

typedef enum GbMetric {
  GB_METRIC_EUCLIDEAN = 0,
  GB_METRIC_STANDARDIZED_EUCLIDEAN = 1,
} GbMetric;

/*
 Result code of every fallible call.
 */
typedef enum GbStatus {
  GB_STATUS_OK = 0,
  GB_STATUS_NULL_POINTER = 1,
  GB_STATUS_INVALID_INPUT = 2,
  GB_STATUS_INVALID_LABELS = 3,
  GB_STATUS_CONFIG = 4,
  GB_STATUS_DEGENERATE = 5,
  GB_STATUS_CAPACITY = 6,
  GB_STATUS_DOMAIN = 7,
  GB_STATUS_IO = 8,
  GB_STATUS_PARSE = 9,
  GB_STATUS_PANIC = 10,
} GbStatus;

/*
 Opaque dataset handle.
 */
typedef struct GbDataset GbDataset;

/*
 Opaque test report handle.
 */
typedef struct GbReport GbReport;

/*
 Test options; obtain defaults from `gb_config_default`.
 */
typedef struct GbConfig {
  enum GbMethod method;
  enum GbForm form;
  /*
   Neighbours per unit for knn; 0 means floor(0.1 N).
   */
  size_t k;
  enum GbPath path;
  enum GbMetric metric;
  size_t n_mc;
  size_t permutation_draws;
  uint64_t seed;
} GbConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. Valid until the
 next call into this library on the same thread.
 */
const char *gb_last_error_message(void);

struct GbConfig gb_config_default(void);

/*
 Build a dataset from a row-major `rows` x `cols` covariate matrix and
 1-based group labels covering 1..G.

 # Safety
 `values` must point to `rows * cols` doubles, `labels` to `rows` integers,
 and `out` to writable storage for one pointer.
 */
enum GbStatus gb_dataset_new(const double *values,
                             size_t rows,
                             size_t cols,
                             const int64_t *labels,
                             struct GbDataset **out);

/*
 Read a CSV file; every column except `group_column` is a covariate.
 Labels are numbered 1..G by first appearance.

 # Safety
 `path` and `group_column` must be NUL-terminated strings and `out` writable.
 */
enum GbStatus gb_dataset_from_csv(const char *path,
                                  const char *group_column,
                                  uint64_t seed,
                                  struct GbDataset **out);

/*
 # Safety
 `ds` must come from a `gb_dataset_*` constructor or be NULL.
 */
void gb_dataset_free(struct GbDataset *ds);

/*
 Number of units, or 0 for NULL.

 # Safety
 `ds` must be a live dataset handle or NULL.
 */
size_t gb_dataset_n(const struct GbDataset *ds);

/*
 Number of groups, or 0 for NULL.

 # Safety
 `ds` must be a live dataset handle or NULL.
 */
size_t gb_dataset_num_groups(const struct GbDataset *ds);

/*
 Run one balance test.

 # Safety
 `ds` must be a live dataset handle, `config` readable, and `out` writable.
 */
enum GbStatus gb_balance_test(const struct GbDataset *ds,
                              const struct GbConfig *config,
                              struct GbReport **out);

/*
 # Safety
 `r` must be a live report handle or NULL.
 */
double gb_report_p_value(const struct GbReport *r);

/*
 # Safety
 `r` must be a live report handle or NULL.
 */
double gb_report_statistic(const struct GbReport *r);

/*
 Full report as canonical JSON; release with `gb_string_free`.

 # Safety
 `r` must be a live report handle and `out` writable.
 */
enum GbStatus gb_report_to_json(const struct GbReport *r, char **out);

/*
 # Safety
 `r` must come from `gb_balance_test` or be NULL.
 */
void gb_report_free(struct GbReport *r);

/*
 # Safety
 `s` must come from this library or be NULL.
 */
void gb_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRAPHBAL_H */
