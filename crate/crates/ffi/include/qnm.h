#ifndef QNM_H
#define QNM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 2 to 4 match the exit codes of the `qnm` tool.
 */
typedef enum QnmStatus {
  QNM_STATUS_OK = 0,
  QNM_STATUS_NULL_POINTER = 1,
  QNM_STATUS_INVALID_INPUT = 2,
  QNM_STATUS_NUMERICAL = 3,
  QNM_STATUS_INTERNAL = 4,
  QNM_STATUS_PANIC = 5,
} QnmStatus;

typedef struct QnmBlock QnmBlock;

typedef struct QnmModel QnmModel;

typedef struct QnmSpectrum QnmSpectrum;

typedef struct QnmComplex {
  double re;
  double im;
} QnmComplex;

/**
 * One zero of the Wronskian.
 */
typedef struct QnmZero {
  struct QnmComplex omega;
  size_t multiplicity;
  /**
   * Leading Taylor coefficient of W at the zero.
   */
  struct QnmComplex w_lead;
  double residual;
} QnmZero;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *qnm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qnm_version(void);

/**
 * Parses a model from structured text.
 *
 * # Safety
 * `text` is a NUL-terminated string and `out` is valid for writes.
 */
enum QnmStatus qnm_model_from_str(const char *text, struct QnmModel **out);

/**
 * Loads a model file.
 *
 * # Safety
 * `path` is a NUL-terminated string and `out` is valid for writes.
 */
enum QnmStatus qnm_model_from_file(const char *path, struct QnmModel **out);

/**
 * The built-in cavity with a double pole at `−iγ(K)`.
 *
 * # Safety
 * `out` is valid for writes.
 */
enum QnmStatus qnm_model_double_pole(double k, struct QnmModel **out);

/**
 * # Safety
 * `model` is null or was returned by a `qnm_model_*` constructor and not
 * yet freed.
 */
void qnm_model_free(struct QnmModel *model);

/**
 * `W(ω)`.
 *
 * # Safety
 * `model` is a live handle and `out` is valid for writes.
 */
enum QnmStatus qnm_wronskian(const struct QnmModel *model,
                             struct QnmComplex omega,
                             struct QnmComplex *out);

/**
 * All zeros in the box `[re_min, re_max] × [im_min, im_max]`.
 *
 * # Safety
 * `model` is a live handle and `out` is valid for writes.
 */
enum QnmStatus qnm_spectrum(const struct QnmModel *model,
                            double re_min,
                            double re_max,
                            double im_min,
                            double im_max,
                            struct QnmSpectrum **out);

/**
 * Number of distinct zeros; 0 for a null handle.
 *
 * # Safety
 * `spectrum` is null or a live handle.
 */
size_t qnm_spectrum_len(const struct QnmSpectrum *spectrum);

/**
 * # Safety
 * `spectrum` is a live handle and `out` is valid for writes.
 */
enum QnmStatus qnm_spectrum_zero(const struct QnmSpectrum *spectrum,
                                 size_t index,
                                 struct QnmZero *out);

/**
 * # Safety
 * `spectrum` is null or a live handle.
 */
void qnm_spectrum_free(struct QnmSpectrum *spectrum);

/**
 * Jordan block of size `multiplicity` at the zero `omega`.
 *
 * # Safety
 * `model` is a live handle and `out` is valid for writes.
 */
enum QnmStatus qnm_block_new(const struct QnmModel *model,
                             struct QnmComplex omega,
                             size_t multiplicity,
                             struct QnmBlock **out);

/**
 * Block size; 0 for a null handle.
 *
 * # Safety
 * `block` is null or a live handle.
 */
size_t qnm_block_size(const struct QnmBlock *block);

/**
 * `ω_j` and `W_{j,M}`.
 *
 * # Safety
 * `block` is a live handle; `omega` and `w_lead` are valid for writes.
 */
enum QnmStatus qnm_block_info(const struct QnmBlock *block,
                              struct QnmComplex *omega,
                              struct QnmComplex *w_lead);

/**
 * `f_{j,n}(x)` and `f_{j,n}′(x)`.
 *
 * # Safety
 * `block` is a live handle; `value` and `slope` are valid for writes.
 */
enum QnmStatus qnm_block_field(const struct QnmBlock *block,
                               size_t n,
                               double x,
                               struct QnmComplex *value,
                               struct QnmComplex *slope);

/**
 * `(f_{j,a}, f_{j,b})` as a row-major `M×M` array.
 *
 * # Safety
 * `block` is a live handle and `out` is valid for `len` writes.
 */
enum QnmStatus qnm_block_products(const struct QnmBlock *block, struct QnmComplex *out, size_t len);

/**
 * # Safety
 * `block` is null or a live handle.
 */
void qnm_block_free(struct QnmBlock *block);

/**
 * Critical point of the Pöschl–Teller potential truncated to `[−L, L]`.
 *
 * # Safety
 * `v0` and `omega` are valid for writes.
 */
enum QnmStatus qnm_pt_critical_point(double l, double *v0, struct QnmComplex *omega);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QNM_H */
