#ifndef HGLEARN_H
#define HGLEARN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of constraints, the length of a weight array.
 */
#define HGL_NUM_CONSTRAINTS 12

/**
 * Number of word orders, the length of a distribution array.
 */
#define HGL_NUM_ORDERS 6

typedef enum HglStatus {
  HGL_STATUS_OK = 0,
  HGL_STATUS_NULL_POINTER = 1,
  HGL_STATUS_INVALID_ARGUMENT = 2,
  HGL_STATUS_PARSE = 3,
  HGL_STATUS_IO = 4,
  HGL_STATUS_EMPTY_CORPUS = 5,
  HGL_STATUS_CONFIG = 6,
  HGL_STATUS_INCOMPATIBLE_REGIME = 7,
  /**
   * The model carries strata, not weights.
   */
  HGL_STATUS_NO_WEIGHTS = 8,
  HGL_STATUS_PANIC = 99,
} HglStatus;

/**
 * A sequence of (pattern, order) sentences.
 */
typedef struct HglCorpus HglCorpus;

/**
 * A trained or loaded grammar.
 */
typedef struct HglModel HglModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *hgl_last_error(void);

/**
 * Name of word order `index` (0 = SVO .. 5 = OSV), or null when out of
 * range. The string is static.
 */
const char *hgl_order_name(uint8_t index);

/**
 * Every tabulated sentence once, shuffled by `seed`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum HglStatus hgl_corpus_reference(uint64_t seed, struct HglCorpus **out);

/**
 * `n` sentences drawn from the tabulated distribution.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum HglStatus hgl_corpus_resample(size_t n, uint64_t seed, struct HglCorpus **out);

/**
 * Reads a sentence file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` as for [`hgl_corpus_reference`].
 */
enum HglStatus hgl_corpus_read(const char *path, struct HglCorpus **out);

/**
 * Writes a sentence file.
 *
 * # Safety
 * `corpus` must be a live handle and `path` a NUL-terminated string.
 */
enum HglStatus hgl_corpus_write(const struct HglCorpus *corpus, const char *path);

/**
 * # Safety
 * `corpus` must be a live handle; `out` must be writable.
 */
enum HglStatus hgl_corpus_len(const struct HglCorpus *corpus, size_t *out);

/**
 * # Safety
 * `corpus` must be null or a handle not yet freed.
 */
void hgl_corpus_free(struct HglCorpus *corpus);

/**
 * Perceptron with default settings apart from `epochs` and `seed`.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be writable.
 */
enum HglStatus hgl_train_perceptron(const struct HglCorpus *corpus,
                                    size_t epochs,
                                    uint64_t seed,
                                    struct HglModel **out);

/**
 * GLA with default plasticity and spreading. Nonzero `sot_training`
 * samples noisy rankings during training; zero uses the plain ranking.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be writable.
 */
enum HglStatus hgl_train_gla(const struct HglCorpus *corpus,
                             size_t epochs,
                             uint64_t seed,
                             int sot_training,
                             struct HglModel **out);

/**
 * Batch log-linear fit. `converged` (may be null) receives 1 or 0.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be writable.
 */
enum HglStatus hgl_train_maxent(const struct HglCorpus *corpus,
                                int *converged,
                                struct HglModel **out);

/**
 * Constraint Demotion. `converged` (may be null) receives 1 or 0; a
 * non-converging run still yields its last hierarchy.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be writable.
 */
enum HglStatus hgl_train_cd(const struct HglCorpus *corpus,
                            size_t max_epochs,
                            int *converged,
                            struct HglModel **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum HglStatus hgl_model_load(const char *path, struct HglModel **out);

/**
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum HglStatus hgl_model_save(const struct HglModel *model, const char *path);

/**
 * Copies the 12 weights, S-L .. F-R, into `out`.
 *
 * # Safety
 * `model` must be a live handle; `out` must hold `HGL_NUM_CONSTRAINTS` doubles.
 */
enum HglStatus hgl_model_weights(const struct HglModel *model, double *out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void hgl_model_free(struct HglModel *model);

/**
 * Predicts one order for `pattern` (e.g. `"t f t"`) under the named
 * regime (`hg-ml`, `ot-ml`, `sot-sample`, `noisyhg-sample`,
 * `maxent-argmax`, `maxent-distribution`). `spreading` and `variance`
 * parameterise the noisy regimes. Writes the order index to `out`.
 *
 * # Safety
 * `model` must be a live handle, the strings NUL-terminated, `out` writable.
 */
enum HglStatus hgl_predict(const struct HglModel *model,
                           const char *pattern,
                           const char *regime,
                           double spreading,
                           double variance,
                           uint64_t seed,
                           uint8_t *out);

/**
 * Writes the predicted distribution over the six orders to `out`, exact
 * for `maxent-distribution` and from `samples` draws otherwise.
 *
 * # Safety
 * As for [`hgl_predict`]; `out` must hold `HGL_NUM_ORDERS` doubles.
 */
enum HglStatus hgl_predict_distribution(const struct HglModel *model,
                                        const char *pattern,
                                        const char *regime,
                                        double spreading,
                                        double variance,
                                        size_t samples,
                                        uint64_t seed,
                                        double *out);

/**
 * Fraction of `corpus` predicted correctly.
 *
 * # Safety
 * Handles must be live, `regime` NUL-terminated, `out` writable.
 */
enum HglStatus hgl_accuracy(const struct HglModel *model,
                            const struct HglCorpus *corpus,
                            const char *regime,
                            double spreading,
                            double variance,
                            uint64_t seed,
                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HGLEARN_H */
