#ifndef APDSYNC_H
#define APDSYNC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ApdStatus {
  APD_STATUS_OK = 0,
  APD_STATUS_NULL_POINTER = 1,
  APD_STATUS_INVALID_UTF8 = 2,
  APD_STATUS_CONFIG_ERROR = 3,
  APD_STATUS_NUMERICAL_ERROR = 4,
  APD_STATUS_BUFFER_TOO_SMALL = 5,
  APD_STATUS_WRONG_KIND = 6,
  APD_STATUS_PANIC = 7,
} ApdStatus;

typedef enum ApdRegimeKind {
  APD_REGIME_KIND_PERIODIC = 0,
  APD_REGIME_KIND_CHAOTIC = 1,
  APD_REGIME_KIND_UNDETERMINED = 2,
} ApdRegimeKind;

typedef enum ApdSeries {
  APD_SERIES_TIME = 0,
  APD_SERIES_SIGMA1_X = 1,
  APD_SERIES_SIGMA2_X = 2,
  APD_SERIES_E_SIGMA = 3,
  APD_SERIES_E_NB = 4,
} ApdSeries;

/**
 * Parsed configuration.
 */
typedef struct ApdConfig ApdConfig;

/**
 * Finished scenario run.
 */
typedef struct ApdRun ApdRun;

typedef struct ApdSyncReport {
  double e_avg;
  /**
   * NaN when the oscillators never synchronize.
   */
  double t_sync_s;
  enum ApdRegimeKind regime;
  /**
   * Period for `Periodic`, 0 otherwise.
   */
  uint32_t period;
  /**
   * NaN when no estimate was made.
   */
  double lyapunov_per_s;
  double sigma1_x;
  double sigma1_p;
  double sigma2_x;
  double sigma2_p;
} ApdSyncReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the length needed including the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t apd_last_error_message(char *buf, size_t len);

/**
 * Static, NUL-terminated version string.
 */
const char *apd_version(void);

/**
 * Parses a JSON configuration document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ApdStatus apd_config_parse(const char *json, struct ApdConfig **out);

/**
 * # Safety
 * `cfg` must be null or a handle from [`apd_config_parse`] not yet freed.
 */
void apd_config_free(struct ApdConfig *cfg);

/**
 * 1 if the configuration describes a sweep, 0 for a single scenario or null.
 *
 * # Safety
 * `cfg` must be null or a live handle.
 */
int32_t apd_config_is_sweep(const struct ApdConfig *cfg);

/**
 * Runs a single-scenario configuration.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer.
 */
enum ApdStatus apd_scenario_run(const struct ApdConfig *cfg, struct ApdRun **out);

/**
 * # Safety
 * `run` must be null or a handle from [`apd_scenario_run`] not yet freed.
 */
void apd_run_free(struct ApdRun *run);

/**
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum ApdStatus apd_run_report(const struct ApdRun *run, struct ApdSyncReport *out);

/**
 * Number of recorded moment samples, 0 for null.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
size_t apd_run_len(const struct ApdRun *run);

/**
 * Copies one recorded series into `buf`, which must hold [`apd_run_len`] values.
 *
 * # Safety
 * `run` must be a live handle and `buf` point to `len` writable doubles.
 */
enum ApdStatus apd_run_copy_series(const struct ApdRun *run,
                                   enum ApdSeries kind,
                                   double *buf,
                                   size_t len);

/**
 * Bose-Einstein occupation at angular frequency `omega_rad_s` and temperature `temperature_k`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ApdStatus apd_thermal_occupation(double omega_rad_s, double temperature_k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* APDSYNC_H */
