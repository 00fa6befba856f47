#ifndef RISEFLIGHT_H
#define RISEFLIGHT_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Controller selector for benchmark configurations.
 */
typedef enum {
  RfController_Rise = 0,
  RfController_Asmc = 1,
} RfController;

/**
 * Status codes returned across the C boundary.
 */
typedef enum {
  RfStatus_Ok = 0,
  RfStatus_InvalidArgument = 1,
  RfStatus_ParseError = 2,
  RfStatus_Diverged = 3,
  RfStatus_IoError = 4,
  RfStatus_InternalPanic = 5,
} RfStatus;

/**
 * Opaque scenario configuration handle.
 */
typedef struct RfConfig RfConfig;

/**
 * Opaque run-trace handle.
 */
typedef struct RfTrace RfTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the description of the most recent error on this thread. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *rf_last_error_message(void);

/**
 * Creates a benchmark scenario configuration for the chosen controller.
 * `noise_scale = 0` disables the disturbance. Returns null on failure.
 */
RfConfig *rf_config_benchmark(RfController controller, double noise_scale, uint64_t seed);

/**
 * Parses a scenario configuration from JSON. Returns null on failure.
 *
 * # Safety
 * `json` must be a valid NUL-terminated C string.
 */
RfConfig *rf_config_from_json(const char *json);

/**
 * Serializes a configuration to JSON. Free with `rf_string_free`.
 *
 * # Safety
 * `config` must be a live handle from this library.
 */
char *rf_config_to_json(const RfConfig *config);

/**
 * Overrides the disturbance seed of a configuration.
 *
 * # Safety
 * `config` must be a live handle from this library.
 */
RfStatus rf_config_set_seed(RfConfig *config, uint64_t seed);

/**
 * Overrides the run duration in seconds.
 *
 * # Safety
 * `config` must be a live handle from this library.
 */
RfStatus rf_config_set_duration(RfConfig *config, double duration);

/**
 * Runs the scenario to completion. Returns a trace handle, or null with the
 * error recorded (divergence included).
 *
 * # Safety
 * `config` must be a live handle from this library.
 */
RfTrace *rf_run(const RfConfig *config);

/**
 * Number of logged records in a trace.
 *
 * # Safety
 * `trace` must be a live handle from this library.
 */
uintptr_t rf_trace_len(const RfTrace *trace);

/**
 * Copies `(t, x, y, z, mass_estimate)` of record `index` into `out[0..5]`.
 *
 * # Safety
 * `trace` must be a live handle; `out` must point to at least 5 doubles.
 */
RfStatus rf_trace_sample(const RfTrace *trace, uintptr_t index, double *out);

/**
 * Writes the trace as CSV to `path` (atomic replace).
 *
 * # Safety
 * `trace` must be a live handle; `path` a NUL-terminated C string.
 */
RfStatus rf_trace_write_csv(const RfTrace *trace, const char *path);

/**
 * Computes run metrics and returns them as a JSON string. Free with
 * `rf_string_free`.
 *
 * # Safety
 * `trace` must be a live handle from this library.
 */
char *rf_trace_metrics_json(const RfTrace *trace);

/**
 * Frees a configuration handle. Null is accepted.
 *
 * # Safety
 * `config` must be a handle from this library, not yet freed.
 */
void rf_config_free(RfConfig *config);

/**
 * Frees a trace handle. Null is accepted.
 *
 * # Safety
 * `trace` must be a handle from this library, not yet freed.
 */
void rf_trace_free(RfTrace *trace);

/**
 * Frees a string returned by this library. Null is accepted.
 *
 * # Safety
 * `s` must be a string returned by this library, not yet freed.
 */
void rf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RISEFLIGHT_H */
