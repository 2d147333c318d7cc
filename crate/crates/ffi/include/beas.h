#ifndef BEAS_H
#define BEAS_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Values are stable.
 */
typedef enum BeasStatus {
  BEAS_STATUS_OK = 0,
  BEAS_STATUS_CONFIG = 1,
  BEAS_STATUS_INPUT_SHAPE = 2,
  BEAS_STATUS_INPUT_RANGE = 3,
  BEAS_STATUS_INITIALIZATION = 4,
  BEAS_STATUS_DIVERGENCE = 5,
  BEAS_STATUS_ANCHOR_NOT_FOUND = 6,
  BEAS_STATUS_UNSUPPORTED_FORMAT = 7,
  BEAS_STATUS_DOCUMENT = 8,
  BEAS_STATUS_IO = 9,
  BEAS_STATUS_NULL_POINTER = 10,
  BEAS_STATUS_PANIC = 11,
} BeasStatus;

/**
 * Opaque editing session.
 */
typedef struct BeasSession BeasSession;

/**
 * Result of one interactive step.
 */
typedef struct BeasStepOutcome {
  double displacement;
  uint32_t iterations;
  bool converged;
} BeasStepOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *beas_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next library call on the same thread.
 */
const char *beas_last_error_message(void);

/**
 * Opens a session on row-major `height x width` arrays with values in
 * `[0, 1]`. `config_json` may be NULL for defaults. Runs stage-one
 * smoothing before returning.
 *
 * # Safety
 * `image` and `prob_map` must point to `width * height` doubles; `out` must
 * be writable.
 */
enum BeasStatus beas_session_open(const double *image,
                                  const double *prob_map,
                                  size_t width,
                                  size_t height,
                                  const char *config_json,
                                  struct BeasSession **out);

/**
 * Opens a session on a synthetic phantom. `size` 0 uses the default.
 *
 * # Safety
 * `out` must be writable.
 */
enum BeasStatus beas_session_open_phantom(uint64_t seed,
                                          uint32_t corruption,
                                          uint32_t size,
                                          struct BeasSession **out);

/**
 * Releases a session. NULL is ignored.
 *
 * # Safety
 * `session` must come from an open call and not be used afterwards.
 */
void beas_session_free(struct BeasSession *session);

/**
 * Adds an anchor at image coordinates and stores its id in `out_id`
 * (may be NULL). Does not step.
 *
 * # Safety
 * `session` must be a live handle.
 */
enum BeasStatus beas_session_add_anchor(struct BeasSession *session,
                                        double x,
                                        double y,
                                        uint64_t *out_id);

/**
 * # Safety
 * `session` must be a live handle.
 */
enum BeasStatus beas_session_move_anchor(struct BeasSession *session,
                                         uint64_t anchor_id,
                                         double x,
                                         double y);

/**
 * # Safety
 * `session` must be a live handle.
 */
enum BeasStatus beas_session_remove_anchor(struct BeasSession *session, uint64_t anchor_id);

/**
 * Runs one interactive step. `out` may be NULL.
 *
 * # Safety
 * `session` must be a live handle.
 */
enum BeasStatus beas_session_step(struct BeasSession *session, struct BeasStepOutcome *out);

/**
 * # Safety
 * `session` must be a live handle.
 */
enum BeasStatus beas_session_set_weights(struct BeasSession *session,
                                         double alpha,
                                         double beta,
                                         double gamma);

/**
 * Drops all anchors and restores the stage-one contour.
 *
 * # Safety
 * `session` must be a live handle.
 */
enum BeasStatus beas_session_reset(struct BeasSession *session);

/**
 * Number of contour coefficients, 0 for NULL.
 *
 * # Safety
 * `session` must be a live handle or NULL.
 */
size_t beas_session_n_knots(const struct BeasSession *session);

/**
 * Copies the coefficients into `out`, which holds `len` doubles.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum BeasStatus beas_session_coefficients(const struct BeasSession *session,
                                          double *out,
                                          size_t len);

/**
 * Writes the polar origin as `(x, y)` into `out[0..2]`.
 *
 * # Safety
 * `out` must point to two writable doubles.
 */
enum BeasStatus beas_session_origin(const struct BeasSession *session, double *out);

/**
 * Writes the rasterized contour as row-major bytes (0 or 255) into `out`,
 * which holds `len >= width * height` bytes.
 *
 * # Safety
 * `out` must point to `len` writable bytes.
 */
enum BeasStatus beas_session_mask(const struct BeasSession *session, uint8_t *out, size_t len);

/**
 * Contour document JSON, or NULL on error. Free with [`beas_string_free`].
 *
 * # Safety
 * `session` must be a live handle or NULL.
 */
char *beas_session_contour_json(const struct BeasSession *session);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void beas_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEAS_H */
