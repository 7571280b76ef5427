#ifndef HYPERDOMINO_H
#define HYPERDOMINO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Answer of `hd_solve_ball`.
 */
typedef enum HdSolveResult {
  HD_SOLVE_RESULT_SAT = 0,
  HD_SOLVE_RESULT_UNSAT = 1,
  HD_SOLVE_RESULT_EXHAUSTED = 2,
} HdSolveResult;

/**
 * Result code of every fallible call.
 */
typedef enum HdStatus {
  HD_STATUS_OK = 0,
  HD_STATUS_NULL_POINTER = 1,
  HD_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed tile set, patch or machine text.
   */
  HD_STATUS_PARSE = 3,
  /**
   * A well-formed request the library rejected.
   */
  HD_STATUS_DOMAIN = 4,
  /**
   * Internal panic caught at the boundary.
   */
  HD_STATUS_PANIC = 5,
} HdStatus;

/**
 * Opaque Turing machine.
 */
typedef struct HdMachine HdMachine;

/**
 * Opaque patch of placed tiles.
 */
typedef struct HdPatch HdPatch;

/**
 * Opaque tile set.
 */
typedef struct HdTileSet HdTileSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next
 * failing call on the same thread; never null.
 */
const char *hd_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void hd_string_free(char *s);

/**
 * The 21 mantilla tiles.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum HdStatus hd_tileset_mantilla(struct HdTileSet **out);

/**
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum HdStatus hd_tileset_parse(const char *src, struct HdTileSet **out);

/**
 * # Safety
 * `ts` must be a live tile set handle; `out` must be valid for writes.
 */
enum HdStatus hd_tileset_to_text(const struct HdTileSet *ts, char **out);

/**
 * Number of tile types, or 0 for a null handle.
 *
 * # Safety
 * `ts` must be null or a live tile set handle.
 */
size_t hd_tileset_len(const struct HdTileSet *ts);

/**
 * # Safety
 * `ts` must be null or a handle from this library, not yet freed.
 */
void hd_tileset_free(struct HdTileSet *ts);

/**
 * Grows a mantilla patch containing the ball of the given radius.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum HdStatus hd_grow_mantilla(uint64_t seed, uint32_t radius, struct HdPatch **out);

/**
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum HdStatus hd_patch_parse(const char *src, struct HdPatch **out);

/**
 * # Safety
 * `p` must be a live patch handle; `out` must be valid for writes.
 */
enum HdStatus hd_patch_to_text(const struct HdPatch *p, char **out);

/**
 * Number of placements, or 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live patch handle.
 */
size_t hd_patch_len(const struct HdPatch *p);

/**
 * # Safety
 * `p` must be null or a handle from this library, not yet freed.
 */
void hd_patch_free(struct HdPatch *p);

/**
 * Counts the matching violations of `p` under `ts`.
 *
 * # Safety
 * Handles must be live; `violations` must be valid for writes.
 */
enum HdStatus hd_check_patch(const struct HdTileSet *ts,
                             const struct HdPatch *p,
                             size_t *violations);

/**
 * Tiles Ball(Center, radius). On `Sat`, `*tiling` receives the patch when
 * `tiling` is not null; otherwise it is left untouched.
 *
 * # Safety
 * `ts` must be live; `result` must be valid for writes; `tiling` null or
 * valid for writes.
 */
enum HdStatus hd_solve_ball(const struct HdTileSet *ts,
                            uint32_t radius,
                            uint64_t budget,
                            enum HdSolveResult *result,
                            struct HdPatch **tiling);

/**
 * Parses a machine description.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be valid for writes.
 */
enum HdStatus hd_machine_parse(const char *name, const char *src, struct HdMachine **out);

/**
 * One of the bundled machines: writer, zigzag, counter, halting3, halting4.
 *
 * # Safety
 * `name` must be NUL-terminated; `out` must be valid for writes.
 */
enum HdStatus hd_machine_shipped(const char *name, struct HdMachine **out);

/**
 * # Safety
 * `m` must be null or a handle from this library, not yet freed.
 */
void hd_machine_free(struct HdMachine *m);

/**
 * The configurations of the first `steps` steps, one per line.
 *
 * # Safety
 * `m` must be live; `out` must be valid for writes.
 */
enum HdStatus hd_run_tm(const struct HdMachine *m, uint32_t steps, char **out);

/**
 * Runs the reduction at the given radii and returns the text report.
 *
 * # Safety
 * `m` must be live; `radii` must point to `n_radii` values; `out` must be
 * valid for writes.
 */
enum HdStatus hd_reduce(const struct HdMachine *m,
                        const uint32_t *radii,
                        size_t n_radii,
                        uint64_t seed,
                        uint32_t max_depth,
                        uint64_t budget,
                        char **out);

/**
 * SVG picture of `p` in the default style.
 *
 * # Safety
 * Handles must be live; `out` must be valid for writes.
 */
enum HdStatus hd_render_svg(const struct HdPatch *p, const struct HdTileSet *ts, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERDOMINO_H */
