#ifndef ROADWATCH_H
#define ROADWATCH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum RwStatus {
  RW_STATUS_OK = 0,
  RW_STATUS_NULL_POINTER = 1,
  RW_STATUS_INVALID_ARGUMENT = 2,
  RW_STATUS_CONFIG = 3,
  RW_STATUS_NUMERIC = 4,
  RW_STATUS_IO = 5,
  RW_STATUS_RULES = 6,
  RW_STATUS_BUFFER_TOO_SMALL = 7,
  RW_STATUS_PANIC = 8,
} RwStatus;

/**
 * Where kinematics for classification come from.
 */
typedef enum RwPipeline {
  RW_PIPELINE_IN_VEHICLE = 0,
  RW_PIPELINE_ROADSIDE = 1,
} RwPipeline;

/**
 * Driver class codes.
 */
typedef enum RwBehavior {
  RW_BEHAVIOR_SAFE = 0,
  RW_BEHAVIOR_DISTRACTED = 1,
  RW_BEHAVIOR_AGGRESSIVE = 2,
} RwBehavior;

/**
 * Opaque experiment configuration.
 */
typedef struct RwConfig RwConfig;

/**
 * Opaque roadside estimate.
 */
typedef struct RwEstimate RwEstimate;

/**
 * Opaque ground-truth trace.
 */
typedef struct RwTrace RwTrace;

/**
 * Label of one vehicle.
 */
typedef struct RwLabel {
  uint32_t vehicle_id;
  enum RwBehavior behavior;
} RwLabel;

/**
 * Headline numbers of an evaluation.
 */
typedef struct RwSummary {
  double in_vehicle_accuracy;
  double roadside_accuracy;
  double tracking_error_rate;
  double estimation_error_rate;
  uint64_t vehicles;
} RwSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *rw_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rw_version(void);

/**
 * Creates the default configuration.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RwStatus rw_config_default(struct RwConfig **out);

/**
 * Parses a TOML configuration.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RwStatus rw_config_from_toml(const char *toml, struct RwConfig **out);

/**
 * Sets the master seed, run count and scenarios per run.
 *
 * # Safety
 * `cfg` must come from `rw_config_*`.
 */
enum RwStatus rw_config_set_size(struct RwConfig *cfg,
                                 uint64_t seed,
                                 size_t runs,
                                 size_t scenarios);

/**
 * # Safety
 * `cfg` must come from `rw_config_*` or be null.
 */
void rw_config_free(struct RwConfig *cfg);

/**
 * Simulates scenario `index` of run `run`.
 *
 * # Safety
 * `cfg` must come from `rw_config_*` and `out` must be valid.
 */
enum RwStatus rw_simulate(const struct RwConfig *cfg,
                          size_t run,
                          size_t index,
                          struct RwTrace **out);

/**
 * Loads a ground-truth trace CSV.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` valid.
 */
enum RwStatus rw_trace_load(const char *path, struct RwTrace **out);

/**
 * Writes a ground-truth trace CSV.
 *
 * # Safety
 * `trace` must be a live handle and `path` NUL-terminated.
 */
enum RwStatus rw_trace_save(const struct RwTrace *trace, const char *path);

/**
 * Number of records (vehicle-frames); 0 for null.
 *
 * # Safety
 * `trace` must be a live handle or null.
 */
size_t rw_trace_len(const struct RwTrace *trace);

/**
 * # Safety
 * `trace` must come from this library or be null.
 */
void rw_trace_free(struct RwTrace *trace);

/**
 * Observes a trace through the configured camera and noise, with the
 * given channel seed, and re-estimates kinematics.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum RwStatus rw_observe(const struct RwConfig *cfg,
                         const struct RwTrace *trace,
                         uint64_t seed,
                         struct RwEstimate **out);

/**
 * Number of estimated records; 0 for null.
 *
 * # Safety
 * `est` must be a live handle or null.
 */
size_t rw_estimate_len(const struct RwEstimate *est);

/**
 * # Safety
 * `est` must come from this library or be null.
 */
void rw_estimate_free(struct RwEstimate *est);

/**
 * Labels every vehicle of a trace. With `Roadside` the trace is first
 * observed with channel seed `seed`. Writes up to `capacity` labels into
 * `buf` and the required count into `out_len`; returns
 * `BufferTooSmall` (with `out_len` set) if `capacity` is short.
 *
 * # Safety
 * Handles must be live; `buf` must hold `capacity` labels.
 */
enum RwStatus rw_classify(const struct RwConfig *cfg,
                          const struct RwTrace *trace,
                          enum RwPipeline pipeline,
                          uint64_t seed,
                          struct RwLabel *buf,
                          size_t capacity,
                          size_t *out_len);

/**
 * Runs the full experiment and reports headline numbers.
 *
 * # Safety
 * `cfg` must be live and `out` valid.
 */
enum RwStatus rw_evaluate(const struct RwConfig *cfg, struct RwSummary *out);

/**
 * Projects a ground point through the configured camera.
 *
 * # Safety
 * `cfg` must be live; `u` and `v` valid.
 */
enum RwStatus rw_project_to_image(const struct RwConfig *cfg,
                                  double x,
                                  double y,
                                  double *u,
                                  double *v);

/**
 * Maps an image point back to the ground plane.
 *
 * # Safety
 * `cfg` must be live; `x` and `y` valid.
 */
enum RwStatus rw_ipm_to_ground(const struct RwConfig *cfg,
                               double u,
                               double v,
                               double *x,
                               double *y);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROADWATCH_H */
