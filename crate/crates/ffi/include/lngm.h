#ifndef LNGM_H
#define LNGM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LngmStatus {
  LNGM_STATUS_OK = 0,
  LNGM_STATUS_NULL_POINTER = 1,
  LNGM_STATUS_INVALID_ARGUMENT = 2,
  LNGM_STATUS_DIMENSION_MISMATCH = 3,
  LNGM_STATUS_NON_FINITE = 4,
  LNGM_STATUS_PARSE_ERROR = 5,
  LNGM_STATUS_OUT_OF_RANGE = 6,
  LNGM_STATUS_NUMERICAL_FAILURE = 7,
  LNGM_STATUS_PANIC = 8,
} LngmStatus;

typedef enum LngmKind {
  LNGM_KIND_EQUALITY = 0,
  LNGM_KIND_INEQUALITY = 1,
} LngmKind;

typedef enum LngmSolveStatus {
  LNGM_SOLVE_STATUS_SOLVED = 0,
  LNGM_SOLVE_STATUS_NOT_JOINTLY_DEFINITE = 1,
  LNGM_SOLVE_STATUS_NUMERICAL_FAILURE = 2,
} LngmSolveStatus;

/**
 * An instance. Create with `lngm_problem_new` or `lngm_problem_from_json`,
 * release with `lngm_problem_free`.
 */
typedef struct LngmProblem LngmProblem;

/**
 * The result of `lngm_solve`. Release with `lngm_report_free`.
 */
typedef struct LngmReport LngmReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *lngm_last_error_message(void);

/**
 * Builds a problem from row-major `n*n` matrices and length-`n` vectors.
 */
enum LngmStatus lngm_problem_new(size_t n,
                                 const double *a0,
                                 const double *b0,
                                 const double *a1,
                                 const double *b1,
                                 double c1,
                                 enum LngmKind kind,
                                 struct LngmProblem **out);

/**
 * Parses a problem from a NUL-terminated JSON document.
 */
enum LngmStatus lngm_problem_from_json(const char *json, struct LngmProblem **out);

/**
 * Releases a problem. Null is ignored.
 */
void lngm_problem_free(struct LngmProblem *problem);

enum LngmStatus lngm_problem_dimension(const struct LngmProblem *problem, size_t *n);

/**
 * Solves with bisection tolerance `eps`. A report is produced whenever the
 * call returns `LNGM_STATUS_OK`, including for pencils that are not jointly
 * definite; inspect it with `lngm_report_status`.
 */
enum LngmStatus lngm_solve(const struct LngmProblem *problem, double eps, struct LngmReport **out);

/**
 * Releases a report. Null is ignored.
 */
void lngm_report_free(struct LngmReport *report);

enum LngmStatus lngm_report_status(const struct LngmReport *report, enum LngmSolveStatus *status);

/**
 * Number of certified local-nonglobal minimizers.
 */
enum LngmStatus lngm_report_count(const struct LngmReport *report, size_t *count);

/**
 * Copies certificate `index`: `x` receives `n` values, `mu` the multiplier
 * and `eta` the secular root (NaN for one-dimensional problems). `eta` may
 * be null.
 */
enum LngmStatus lngm_report_certificate(const struct LngmReport *report,
                                        size_t index,
                                        double *x,
                                        double *mu,
                                        double *eta);

/**
 * The full report as JSON. Release the string with `lngm_string_free`.
 */
enum LngmStatus lngm_report_to_json(const struct LngmReport *report, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 */
void lngm_string_free(char *s);

/**
 * Checks a point (`n` values) and multiplier; `certified` receives 1 or 0.
 */
enum LngmStatus lngm_verify(const struct LngmProblem *problem,
                            const double *x,
                            double mu,
                            int32_t *certified);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LNGM_H */
