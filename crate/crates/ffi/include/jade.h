#ifndef JADE_H
#define JADE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum JadeStatus {
  JADE_STATUS_OK = 0,
  JADE_STATUS_IO = 1,
  JADE_STATUS_INVALID = 2,
  JADE_STATUS_PARSE = 3,
  JADE_STATUS_ESTIMATION = 4,
  JADE_STATUS_ROOTS_NOT_CONVERGED = 5,
  JADE_STATUS_NULL_POINTER = 6,
  JADE_STATUS_INVALID_UTF8 = 7,
  JADE_STATUS_BUFFER_TOO_SMALL = 8,
  JADE_STATUS_OUT_OF_RANGE = 9,
  JADE_STATUS_PANIC = 10,
} JadeStatus;

/**
 * Estimation report handle.
 */
typedef struct JadeReport JadeReport;

/**
 * Scenario configuration handle.
 */
typedef struct JadeScenario JadeScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *jade_version(void);

/**
 * Message of the most recent failure on the calling thread, or null if no
 * call has failed yet. The pointer stays valid until the next failing call
 * on the same thread.
 */
const char *jade_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library that has not been
 * freed yet.
 */
void jade_string_free(char *s);

/**
 * New handle holding the default scenario. Release with [`jade_scenario_free`].
 */
struct JadeScenario *jade_scenario_default(void);

/**
 * Parses a scenario from TOML text into a new handle.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum JadeStatus jade_scenario_from_toml(const char *text, struct JadeScenario **out);

/**
 * Reads a scenario TOML file into a new handle.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum JadeStatus jade_scenario_from_file(const char *path, struct JadeScenario **out);

/**
 * Releases a scenario handle. Null is ignored.
 *
 * # Safety
 * `scenario` must be null or a live handle from this library.
 */
void jade_scenario_free(struct JadeScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum JadeStatus jade_scenario_set_seed(struct JadeScenario *scenario, uint64_t seed);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum JadeStatus jade_scenario_set_snapshots(struct JadeScenario *scenario, size_t snapshots);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum JadeStatus jade_scenario_set_noise_var(struct JadeScenario *scenario, double noise_var);

/**
 * Checks the scenario without running it.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum JadeStatus jade_scenario_validate(const struct JadeScenario *scenario);

/**
 * Serializes the scenario as TOML. Free the result with [`jade_string_free`].
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum JadeStatus jade_scenario_to_toml(const struct JadeScenario *scenario, char **out);

/**
 * Samples the scenario's pulse. The sample count is always stored in
 * `len_out`; the buffers are written only when `capacity` is large enough,
 * otherwise `JADE_STATUS_BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * `scenario` must be a live handle, `len_out` valid, and `t_out` and `g_out`
 * must each point to at least `capacity` doubles.
 */
enum JadeStatus jade_scenario_pulse(const struct JadeScenario *scenario,
                                    double *t_out,
                                    double *g_out,
                                    size_t capacity,
                                    size_t *len_out);

/**
 * Synthesizes the scenario's records and estimates angles and delays.
 * Release the report with [`jade_report_free`].
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum JadeStatus jade_run(const struct JadeScenario *scenario, struct JadeReport **out);

/**
 * Releases a report handle. Null is ignored.
 *
 * # Safety
 * `report` must be null or a live handle from this library.
 */
void jade_report_free(struct JadeReport *report);

/**
 * Number of estimated paths, or 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t jade_report_path_count(const struct JadeReport *report);

/**
 * Angle of path `index` in degrees. Paths are sorted by angle.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum JadeStatus jade_report_theta_deg(const struct JadeReport *report, size_t index, double *out);

/**
 * Median over snapshots of the fitted phase slope of path `index`.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum JadeStatus jade_report_slope_median(const struct JadeReport *report,
                                         size_t index,
                                         double *out);

/**
 * Mean over snapshots of the fitted phase slope of path `index`.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum JadeStatus jade_report_slope_mean(const struct JadeReport *report, size_t index, double *out);

/**
 * Full report as JSON. Free the result with [`jade_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum JadeStatus jade_report_to_json(const struct JadeReport *report, char **out);

/**
 * Unwraps `len` principal-value phases from `input` into `output`. The two
 * buffers may be the same.
 *
 * # Safety
 * `input` and `output` must each point to `len` doubles.
 */
enum JadeStatus jade_unwrap_phase(const double *input, double *output, size_t len);

/**
 * Fits `order` exponentials to the correlation lags `0..lags` given as real
 * and imaginary parts. Writes the direction sines and amplitudes, sorted by
 * direction sine, into `s_out` and `amplitude_out` (`order` entries each).
 *
 * # Safety
 * `lag_re` and `lag_im` must point to `lags` doubles; `s_out` and
 * `amplitude_out` to `order` doubles.
 */
enum JadeStatus jade_svd_prony(const double *lag_re,
                               const double *lag_im,
                               size_t lags,
                               size_t order,
                               double delta,
                               double *s_out,
                               double *amplitude_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JADE_H */
