#ifndef NOCLICK_H
#define NOCLICK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NoclickStatus {
  NOCLICK_STATUS_OK = 0,
  NOCLICK_STATUS_NULL_POINTER = 1,
  NOCLICK_STATUS_INVALID_UTF8 = 2,
  NOCLICK_STATUS_CONFIG = 3,
  NOCLICK_STATUS_INVALID_ARGUMENT = 4,
  NOCLICK_STATUS_NUMERICAL = 5,
  NOCLICK_STATUS_IO = 6,
  NOCLICK_STATUS_OUT_OF_RANGE = 7,
  NOCLICK_STATUS_PANIC = 8,
} NoclickStatus;

typedef enum NoclickProtocol {
  NOCLICK_PROTOCOL_XY = 0,
  NOCLICK_PROTOCOL_SSH = 1,
} NoclickProtocol;

typedef enum NoclickParam {
  NOCLICK_PARAM_KAPPA = 0,
  NOCLICK_PARAM_H = 1,
  NOCLICK_PARAM_H_EV = 2,
  NOCLICK_PARAM_GAMMA = 3,
} NoclickParam;

typedef struct NoclickConfig NoclickConfig;

typedef struct NoclickRecord NoclickRecord;

/**
 * One time-series sample. Oracle fields are NaN when the oracle is off.
 */
typedef struct NoclickRow {
  double t;
  double s_n;
  double ds_n;
  double z_residual;
  double oracle_s_n;
  double oracle_ds_n;
} NoclickRow;

/**
 * Crossing summary. `t_m` is NaN without a crossing; `verdict` is -1 when
 * no criterion was available, else 0 consistent, 1 inconsistent, 2 mixed.
 */
typedef struct NoclickCrossing {
  bool crossed;
  double t_m;
  uint32_t crossings;
  bool equal_curves;
  int32_t verdict;
} NoclickCrossing;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t noclick_last_error(char *buf, size_t len);

/**
 * Version of the output schema, static storage.
 */
const char *noclick_schema(void);

/**
 * New config with default grids and no parameters set. `protocol` is a
 * [`NoclickProtocol`] value.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
enum NoclickStatus noclick_config_new(uint32_t protocol, uint32_t ell, struct NoclickConfig **out);

/**
 * Parses a JSON run configuration (same schema as the CLI `--config`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum NoclickStatus noclick_config_from_json(const char *json, struct NoclickConfig **out);

/**
 * Sets one physical parameter (a [`NoclickParam`] value); `second`
 * selects the crossing partner.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum NoclickStatus noclick_config_set_param(struct NoclickConfig *cfg,
                                            bool second,
                                            uint32_t param,
                                            double value);

/**
 * Sets `t_max`, `dt`, the momentum count and the α-node count
 * (0 keeps the default for `n_alpha`).
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum NoclickStatus noclick_config_set_grid(struct NoclickConfig *cfg,
                                           double t_max,
                                           double dt,
                                           uint32_t nk,
                                           uint32_t n_alpha);

/**
 * Switches to a ring of `l` sites (0 means thermodynamic) and toggles the
 * exact-diagonalization oracle.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum NoclickStatus noclick_config_set_finite(struct NoclickConfig *cfg, uint32_t l, bool oracle);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum NoclickStatus noclick_config_set_renyi(struct NoclickConfig *cfg, uint32_t n);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void noclick_config_free(struct NoclickConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum NoclickStatus noclick_run_timeseries(const struct NoclickConfig *cfg,
                                          struct NoclickRecord **out);

/**
 * Runs both parameter sets of `cfg` and analyses their crossing.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum NoclickStatus noclick_run_crossing(const struct NoclickConfig *cfg,
                                        struct NoclickRecord **out);

/**
 * Number of rows; `series` 1 selects the crossing partner (0 when absent).
 *
 * # Safety
 * `rec` must be null or a live handle.
 */
size_t noclick_record_len(const struct NoclickRecord *rec, uint32_t series);

/**
 * # Safety
 * `rec` must be a live handle; `out` must be writable.
 */
enum NoclickStatus noclick_record_row(const struct NoclickRecord *rec,
                                      uint32_t series,
                                      size_t index,
                                      struct NoclickRow *out);

/**
 * Largest |Gaussian − exact| over the series; NaN without the oracle.
 *
 * # Safety
 * `rec` must be null or a live handle.
 */
double noclick_record_oracle_deviation(const struct NoclickRecord *rec);

/**
 * # Safety
 * `rec` must be a live handle; `out` must be writable.
 */
enum NoclickStatus noclick_record_crossing(const struct NoclickRecord *rec,
                                           struct NoclickCrossing *out);

/**
 * CSV v1 of one series; free with [`noclick_string_free`].
 *
 * # Safety
 * `rec` must be a live handle; `out` must be writable.
 */
enum NoclickStatus noclick_record_to_csv(const struct NoclickRecord *rec,
                                         uint32_t series,
                                         char **out);

/**
 * Full JSON record; free with [`noclick_string_free`].
 *
 * # Safety
 * `rec` must be a live handle; `out` must be writable.
 */
enum NoclickStatus noclick_record_to_json(const struct NoclickRecord *rec, char **out);

/**
 * # Safety
 * `rec` must be null or a handle not yet freed.
 */
void noclick_record_free(struct NoclickRecord *rec);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void noclick_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOCLICK_H */
