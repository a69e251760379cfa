#ifndef TWOSIR_H
#define TWOSIR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum TwosirStatus {
  TwosirStatus_Ok = 0,
  TwosirStatus_NullArgument = 1,
  TwosirStatus_InvalidConfig = 2,
  TwosirStatus_NumericalFailure = 3,
  TwosirStatus_IoFailure = 4,
  TwosirStatus_InvalidArgument = 5,
} TwosirStatus;

/**
 * Opaque simulation configuration handle.
 */
typedef struct TwosirConfig TwosirConfig;

/**
 * Opaque simulation record handle.
 */
typedef struct TwosirRecord TwosirRecord;

/**
 * Flat summary of one run, mirroring the sweep-table columns.
 */
typedef struct TwosirSummary {
  double total_population;
  double total_recovered;
  double peak_infected;
  double rest_infected_pct;
  double lockdown_days;
  double lockdown_pct;
} TwosirSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Short static description of a status code.
 */
const char *twosir_status_message(enum TwosirStatus status);

/**
 * Copies the detailed message of this thread's last error into `buf`
 * (NUL-terminated, truncated to `len`); returns the full length of the
 * message not counting the terminator. Passing a null or empty buffer
 * just queries the length.
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes, or be null.
 */
uintptr_t twosir_last_error(char *buf, uintptr_t len);

/**
 * New configuration with the built-in baseline values. Never fails.
 */
struct TwosirConfig *twosir_config_default(void);

/**
 * Parses a configuration file (the `key = value` format) into a new
 * handle written to `out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for a
 * single pointer write.
 */
enum TwosirStatus twosir_config_parse(const char *path, struct TwosirConfig **out);

/**
 * Serializes a configuration to a file in the same format
 * `twosir_config_parse` reads.
 *
 * # Safety
 * `cfg` must be a live handle; `path` a NUL-terminated string.
 */
enum TwosirStatus twosir_config_write(const struct TwosirConfig *cfg, const char *path);

/**
 * Sets both regions' migration probabilities.
 *
 * # Safety
 * `cfg` must be a live handle from this library.
 */
enum TwosirStatus twosir_config_set_lambda(struct TwosirConfig *cfg,
                                           double lambda_1,
                                           double lambda_2);

/**
 * Sets the simulated horizon in days (must stay an integer number of
 * steps; checked when the simulation runs).
 *
 * # Safety
 * `cfg` must be a live handle from this library.
 */
enum TwosirStatus twosir_config_set_t_final(struct TwosirConfig *cfg, double t_final);

/**
 * Releases a configuration handle. Null is a no-op.
 *
 * # Safety
 * `cfg` must have come from this library and not been freed before.
 */
void twosir_config_free(struct TwosirConfig *cfg);

/**
 * Runs the simulation; on success writes a new record handle to `out`.
 *
 * # Safety
 * `cfg` must be a live handle; `out` valid for a pointer write.
 */
enum TwosirStatus twosir_run(const struct TwosirConfig *cfg, struct TwosirRecord **out);

/**
 * Computes the summary metrics of a record.
 *
 * # Safety
 * `record` must be a live handle; `out` valid for a struct write.
 */
enum TwosirStatus twosir_record_summary(const struct TwosirRecord *record,
                                        struct TwosirSummary *out);

/**
 * Number of recorded frames (at least 1: the initial state).
 *
 * # Safety
 * `record` must be a live handle or null (returns 0).
 */
uintptr_t twosir_record_frame_count(const struct TwosirRecord *record);

/**
 * Writes the per-frame time-series CSV of a record.
 *
 * # Safety
 * `record` must be a live handle; `path` a NUL-terminated string.
 */
enum TwosirStatus twosir_record_write_timeseries(const struct TwosirRecord *record,
                                                 const char *path);

/**
 * Writes the space-time heatmap CSV of one compartment ('S', 'I' or 'R').
 *
 * # Safety
 * `record` must be a live handle; `path` a NUL-terminated string.
 */
enum TwosirStatus twosir_record_write_heatmap(const struct TwosirRecord *record,
                                              char compartment,
                                              const char *path);

/**
 * Releases a record handle. Null is a no-op.
 *
 * # Safety
 * `record` must have come from this library and not been freed before.
 */
void twosir_record_free(struct TwosirRecord *record);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWOSIR_H */
