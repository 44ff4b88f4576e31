#ifndef BERGMAN_LAB_H
#define BERGMAN_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum BkStatus {
  BK_STATUS_OK = 0,
  BK_STATUS_NULL_POINTER = 1,
  BK_STATUS_INVALID_ARGUMENT = 2,
  BK_STATUS_EMPTY_SUBSPACE = 3,
  BK_STATUS_FIXED_POINT = 4,
  BK_STATUS_NUMERICAL = 5,
  BK_STATUS_UNSUPPORTED = 6,
  BK_STATUS_CONFIG = 7,
  BK_STATUS_IO = 8,
  BK_STATUS_BUFFER_TOO_SMALL = 9,
  BK_STATUS_PANIC = 10,
} BkStatus;

/**
 * Projective examples.
 */
typedef enum BkModel {
  BK_MODEL_CP1_O2 = 0,
  BK_MODEL_CP2_O2_LEVEL_HALF = 1,
} BkModel;

/**
 * Which subspace of sections a kernel is built from.
 */
typedef enum BkSelector {
  BK_SELECTOR_FULL = 0,
  BK_SELECTOR_INVARIANT = 1,
  /**
   * Uses the `weight` argument.
   */
  BK_SELECTOR_WEIGHT = 2,
} BkSelector;

/**
 * Opaque experiment report.
 */
typedef struct BkReport BkReport;

/**
 * Opaque section space at a fixed level.
 */
typedef struct BkSectionSpace BkSectionSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static zero-terminated string.
 */
const char *bk_version(void);

/**
 * Copies the last error message of this thread into `buf`.
 *
 * # Safety
 * `buf` must hold `cap` bytes; `needed` may be null.
 */
enum BkStatus bk_last_error(char *buf, size_t cap, size_t *needed);

/**
 * Builds the space of holomorphic sections at level `p`; `model` is a [`BkModel`] code.
 *
 * # Safety
 * `out` must be a valid pointer; the handle is released with [`bk_section_space_free`].
 */
enum BkStatus bk_section_space_new(int32_t model, uint32_t p, struct BkSectionSpace **out);

/**
 * # Safety
 * `space` must come from [`bk_section_space_new`] and not be used afterwards; null is ignored.
 */
void bk_section_space_free(struct BkSectionSpace *space);

/**
 * Dimension of the full space and of its invariant part.
 *
 * # Safety
 * `space` must be a live handle; either output may be null.
 */
enum BkStatus bk_section_space_dims(const struct BkSectionSpace *space,
                                    size_t *dim,
                                    size_t *invariant_dim);

/**
 * Bergman kernel of the subspace picked by the [`BkSelector`] code at chart points `u`, `v` (each `n` complex numbers,
 * `n` the complex dimension), in the unitary frame. Writes one complex number to `out`.
 *
 * # Safety
 * `u`, `v` must hold `2n` doubles, `out` two.
 */
enum BkStatus bk_bergman_kernel(const struct BkSectionSpace *space,
                                int32_t selector,
                                int64_t weight,
                                const double *u,
                                const double *v,
                                size_t n,
                                double *out);

/**
 * Average of the full kernel over the circle action, with `order` trapezoid nodes.
 *
 * # Safety
 * As for [`bk_bergman_kernel`].
 */
enum BkStatus bk_group_average_kernel(const struct BkSectionSpace *space,
                                      const double *u,
                                      const double *v,
                                      size_t n,
                                      size_t order,
                                      double *out);

/**
 * Rescaled invariant diagonal kernel on the zero level; `rest` holds the `n - 1` chart
 * coordinates after the first.
 *
 * # Safety
 * `rest` must hold `2 * rest_len` doubles, `out` one.
 */
enum BkStatus bk_rescaled_diagonal(int32_t model,
                                   uint32_t p,
                                   const double *rest,
                                   size_t rest_len,
                                   double *out);

/**
 * Second expansion coefficient at the origin of the sphere example: engine value and closed form.
 *
 * # Safety
 * Each output must hold two doubles.
 */
enum BkStatus bk_cp1_second_coefficient(double *engine, double *closed);

/**
 * Runs an experiment from a JSON configuration (same schema as the command line tool).
 *
 * # Safety
 * `config_json` must be zero-terminated UTF-8; release the report with [`bk_report_free`].
 */
enum BkStatus bk_run_experiment(const char *config_json, struct BkReport **out);

/**
 * # Safety
 * `report` must come from [`bk_run_experiment`] and not be used afterwards; null is ignored.
 */
void bk_report_free(struct BkReport *report);

/**
 * Number of rows and whether every verdict passed (1) or not (0).
 *
 * # Safety
 * `report` must be a live handle; either output may be null.
 */
enum BkStatus bk_report_summary(const struct BkReport *report, size_t *rows, int32_t *passed);

/**
 * Serialises the report as CSV (`json == 0`) or JSON into `buf`. With a null or short buffer the
 * call returns `BK_STATUS_BUFFER_TOO_SMALL` and `needed` still receives the size.
 *
 * # Safety
 * `buf` must hold `cap` bytes; `needed` may be null.
 */
enum BkStatus bk_report_write(const struct BkReport *report,
                              int32_t json,
                              char *buf,
                              size_t cap,
                              size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BERGMAN_LAB_H */
