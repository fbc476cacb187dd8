#ifndef JBESIM_H
#define JBESIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JbesimStatus {
  JBESIM_STATUS_OK = 0,
  JBESIM_STATUS_NULL_ARGUMENT = 1,
  JBESIM_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad configuration value or unparsable TOML.
   */
  JBESIM_STATUS_CONFIG = 3,
  /**
   * A simulation invariant was violated.
   */
  JBESIM_STATUS_SIMULATION = 4,
  JBESIM_STATUS_IO = 5,
  /**
   * Unknown enum value passed across the boundary.
   */
  JBESIM_STATUS_INVALID_ARGUMENT = 6,
  JBESIM_STATUS_PANIC = 7,
} JbesimStatus;

typedef enum JbesimScheme {
  JBESIM_SCHEME_JB = 0,
  JBESIM_SCHEME_JBE = 1,
} JbesimScheme;

typedef enum JbesimScenario {
  JBESIM_SCENARIO_SLOWDOWN = 0,
  JBESIM_SCENARIO_STOPPING = 1,
  JBESIM_SCENARIO_STABILITY = 2,
  JBESIM_SCENARIO_BASELINE = 3,
} JbesimScenario;

/**
 * Opaque simulation configuration.
 */
typedef struct JbesimConfig JbesimConfig;

/**
 * Opaque result of one run.
 */
typedef struct JbesimResult JbesimResult;

/**
 * Headline numbers of a finished run.
 */
typedef struct JbesimSummary {
  /**
   * Smallest intra-platoon gap (m).
   */
  double min_distance;
  double inter_platoon_min_distance;
  /**
   * 1 if any intra-platoon gap closed.
   */
  uint8_t crashed;
  /**
   * Seconds; negative when there was no crash.
   */
  double crash_time;
  double avg_cbr;
  uint32_t protocol_failures;
  uint32_t retransmissions;
  uint64_t beacons_sent;
  uint32_t vehicles;
} JbesimSummary;

/**
 * Inputs for a one-off CACC evaluation with the default gains.
 */
typedef struct JbesimCaccInput {
  double ego_speed;
  double front_speed;
  double front_acceleration;
  double leader_speed;
  double leader_acceleration;
  double radar_distance;
} JbesimCaccInput;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or "" if none.
 */
const char *jbesim_last_error(void);

/**
 * Static version string.
 */
const char *jbesim_version(void);

/**
 * Parses a TOML config (NULL or "" for defaults) into `*out`.
 *
 * # Safety
 * `toml` must be NULL or a NUL-terminated string; `out` must be writable.
 */
enum JbesimStatus jbesim_config_new(const char *toml, struct JbesimConfig **out);

/**
 * # Safety
 * `config` must be NULL or come from `jbesim_config_new`, freed at most once.
 */
void jbesim_config_free(struct JbesimConfig *config);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum JbesimStatus jbesim_config_set_seed(struct JbesimConfig *config, uint64_t seed);

/**
 * Layout preset: "desk", "low" or "high".
 *
 * # Safety
 * `config` must be a live handle and `density` a NUL-terminated string.
 */
enum JbesimStatus jbesim_config_set_density(struct JbesimConfig *config, const char *density);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum JbesimStatus jbesim_config_set_duration(struct JbesimConfig *config, double seconds);

/**
 * Runs one experiment to completion and stores a result handle in `*out`.
 * Enum arguments are plain ints so out-of-range values are caught here.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum JbesimStatus jbesim_run(const struct JbesimConfig *config,
                             int32_t scenario,
                             int32_t scheme,
                             struct JbesimResult **out);

/**
 * # Safety
 * `result` must be NULL or come from `jbesim_run`, freed at most once.
 */
void jbesim_result_free(struct JbesimResult *result);

/**
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum JbesimStatus jbesim_result_summary(const struct JbesimResult *result,
                                        struct JbesimSummary *out);

/**
 * Copies up to `capacity` per-second CBR values into `buf` and stores the
 * full series length in `*len`. Pass `buf = NULL` to query the length.
 *
 * # Safety
 * `buf` must hold `capacity` doubles when non-NULL; `len` must be writable.
 */
enum JbesimStatus jbesim_result_cbr_series(const struct JbesimResult *result,
                                           double *buf,
                                           size_t capacity,
                                           size_t *len);

/**
 * Writes the CSV set into `dir` (created if missing).
 *
 * # Safety
 * `result` must be a live handle and `dir` a NUL-terminated path.
 */
enum JbesimStatus jbesim_result_write(const struct JbesimResult *result, const char *dir);

/**
 * Beacon interval (s) for jerk `delta_u` with the default JB parameters.
 *
 * # Safety
 * `out` must be writable.
 */
enum JbesimStatus jbesim_jb_interval(double delta_u, double *out);

/**
 * CACC command (m/s^2), before actuator limits, with the default gains.
 *
 * # Safety
 * `input` must be readable and `out` writable.
 */
enum JbesimStatus jbesim_path_cacc(const struct JbesimCaccInput *input, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JBESIM_H */
