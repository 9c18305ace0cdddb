/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef PLURILAB_H
#define PLURILAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PlStatus {
  PL_STATUS_OK = 0,
  PL_STATUS_NULL_POINTER = 1,
  PL_STATUS_INVALID_UTF8 = 2,
  PL_STATUS_INVALID_ARGUMENT = 3,
  PL_STATUS_PARSE = 4,
  PL_STATUS_NUMERICAL = 5,
  PL_STATUS_INTERNAL = 6,
  PL_STATUS_PANIC = 7,
} PlStatus;

typedef enum PlVerdict {
  PL_VERDICT_PASS = 0,
  PL_VERDICT_FAIL = 1,
  PL_VERDICT_INCONCLUSIVE = 2,
} PlVerdict;

/**
 * Grid samples of a closed-form function.
 */
typedef struct PlField PlField;

/**
 * Closed singular set.
 */
typedef struct PlSet PlSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *pl_last_error(void);

/**
 * Samples `expr` on the grid of `points_per_axis^(2n)` nodes covering the
 * ball of radius `2 delta` around `center` (`2n` doubles, or null for the origin).
 *
 * # Safety
 * `expr` must be a valid C string, `center` null or `2n` readable doubles,
 * `out_field` a writable pointer.
 */
enum PlStatus pl_field_from_expr(const char *expr,
                                 size_t n,
                                 const double *center,
                                 double delta,
                                 size_t points_per_axis,
                                 struct PlField **out_field);

/**
 * # Safety
 * `field` must come from [`pl_field_from_expr`] and not be freed twice.
 */
void pl_field_free(struct PlField *field);

/**
 * # Safety
 * `field` must be a live handle and `out_count` writable.
 */
enum PlStatus pl_field_node_count(const struct PlField *field, size_t *out_count);

/**
 * Copies the node values in row-major order into `buffer`, which must hold
 * exactly the node count.
 *
 * # Safety
 * `field` must be a live handle and `buffer` hold `len` writable doubles.
 */
enum PlStatus pl_field_values(const struct PlField *field, double *buffer, size_t len);

/**
 * Mean-value test on every node whose circles fit; radii `h` and `2h`.
 *
 * # Safety
 * `field` must be a live handle and `out_verdict` writable.
 */
enum PlStatus pl_certify_subharmonic(const struct PlField *field,
                                     uint64_t seed,
                                     enum PlVerdict *out_verdict);

/**
 * Complex-line mean-value test; nodes within `margin` of `set` are skipped.
 * A null `set` tests every node.
 *
 * # Safety
 * `field` must be a live handle, `set` null or a live handle, `out_verdict` writable.
 */
enum PlStatus pl_certify_psh(const struct PlField *field,
                             const struct PlSet *set,
                             double margin,
                             uint64_t seed,
                             enum PlVerdict *out_verdict);

/**
 * Parses a singular set from its JSON form.
 *
 * # Safety
 * `json` must be a valid C string and `out_set` writable.
 */
enum PlStatus pl_set_from_json(const char *json, struct PlSet **out_set);

/**
 * # Safety
 * `set` must come from [`pl_set_from_json`] and not be freed twice.
 */
void pl_set_free(struct PlSet *set);

/**
 * Whether the point (`len` real coordinates) lies within `margin` of the set.
 *
 * # Safety
 * `set` must be a live handle, `coords` hold `len` doubles, `out_inside` writable.
 */
enum PlStatus pl_set_contains(const struct PlSet *set,
                              const double *coords,
                              size_t len,
                              double margin,
                              bool *out_inside);

/**
 * Runs the extension pipeline on a JSON scenario; `params_json` may be null
 * for the defaults. The report is written to `out_json` as JSON.
 *
 * # Safety
 * String arguments must be valid C strings (or null where allowed) and
 * `out_json` writable.
 */
enum PlStatus pl_run_scenario(const char *scenario_json, const char *params_json, char **out_json);

/**
 * Catalog entries and the scenario table for dimension `n`, as JSON.
 *
 * # Safety
 * `out_json` must be writable.
 */
enum PlStatus pl_catalog_json(size_t n, char **out_json);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void pl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLURILAB_H */
