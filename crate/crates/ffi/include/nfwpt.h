#ifndef NFWPT_H
#define NFWPT_H

/* Generated by cbindgen from crates/ffi/src. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define NFWPT_STRATEGY_SISO 0

#define NFWPT_STRATEGY_RPS 1

#define NFWPT_STRATEGY_BF 2

#define NFWPT_STRATEGY_GBF 3

typedef enum {
  NFWPT_STATUS_OK = 0,
  NFWPT_STATUS_NULL_POINTER = 1,
  NFWPT_STATUS_INVALID_ARGUMENT = 2,
  NFWPT_STATUS_IO = 3,
  NFWPT_STATUS_SINGULARITY = 4,
  NFWPT_STATUS_PANIC = 5,
} NfwptStatus;

/**
 * A simulated or loaded received-power field.
 */
typedef struct NfwptField NfwptField;

/**
 * A scenario loaded from a configuration, plus its seed and strategy settings.
 */
typedef struct NfwptScenario NfwptScenario;

/**
 * Result of a phase-error sweep.
 */
typedef struct NfwptSweep NfwptSweep;

/**
 * Focal-spot summary of a field around a target.
 */
typedef struct {
  double target_dbm;
  double area_m2;
  double equivalent_diameter_m;
  double cut_width_x_m;
  double cut_width_y_m;
  double wavelength_m;
  size_t cells;
} NfwptSpot;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *nfwpt_last_error(void);

/**
 * Creates a scenario with the built-in default configuration.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
NfwptStatus nfwpt_scenario_new_default(NfwptScenario **out);

/**
 * Loads a scenario from a TOML configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
NfwptStatus nfwpt_scenario_load(const char *path, NfwptScenario **out);

/**
 * # Safety
 * `scenario` must be NULL or a handle from this library not yet freed.
 */
void nfwpt_scenario_free(NfwptScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
NfwptStatus nfwpt_scenario_num_antennas(const NfwptScenario *scenario, size_t *out);

/**
 * Seed configured for this scenario.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
NfwptStatus nfwpt_scenario_seed(const NfwptScenario *scenario, uint64_t *out);

/**
 * Simulates the time-averaged field of one strategy (`NFWPT_STRATEGY_*`).
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
NfwptStatus nfwpt_simulate_field(const NfwptScenario *scenario,
                                 uint32_t strategy,
                                 uint64_t seed,
                                 NfwptField **out);

/**
 * # Safety
 * `field` must be NULL or a handle from this library not yet freed.
 */
void nfwpt_field_free(NfwptField *field);

/**
 * Grid size; values are stored row-major with x varying fastest.
 *
 * # Safety
 * `field` must be a live handle; `nx` and `ny` must be writable.
 */
NfwptStatus nfwpt_field_dims(const NfwptField *field, size_t *nx, size_t *ny);

/**
 * Copies the field's dBm values into `buf`, which must hold `nx * ny` doubles.
 *
 * # Safety
 * `field` must be a live handle; `buf` must point to `len` writable doubles.
 */
NfwptStatus nfwpt_field_values(const NfwptField *field, double *buf, size_t len);

/**
 * Value of the grid cell nearest `(x, y)`, dBm.
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable.
 */
NfwptStatus nfwpt_field_value_near(const NfwptField *field, double x, double y, double *out);

/**
 * # Safety
 * `field` must be a live handle; `path` must be a NUL-terminated string.
 */
NfwptStatus nfwpt_field_save_csv(const NfwptField *field, const char *path);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
NfwptStatus nfwpt_field_load_csv(const char *path, NfwptField **out);

/**
 * Focal spot of `field` around the target `(x, y)` on its plane, using the
 * connected region within `threshold_db` of the target value.
 *
 * # Safety
 * `field` must be a live handle; `out` must be writable.
 */
NfwptStatus nfwpt_field_spot(const NfwptField *field,
                             double x,
                             double y,
                             double threshold_db,
                             NfwptSpot *out);

/**
 * Runs the phase-error sweep at the scenario's target over `n` standard
 * deviations (radians) with `realizations` draws each.
 *
 * # Safety
 * `scenario` must be a live handle; `sigmas_rad` must point to `n` doubles;
 * `out` must be writable.
 */
NfwptStatus nfwpt_sweep_sigma(const NfwptScenario *scenario,
                              const double *sigmas_rad,
                              size_t n,
                              size_t realizations,
                              uint64_t seed,
                              NfwptSweep **out);

/**
 * # Safety
 * `sweep` must be NULL or a handle from this library not yet freed.
 */
void nfwpt_sweep_free(NfwptSweep *sweep);

/**
 * Number of σ values in the sweep.
 *
 * # Safety
 * `sweep` must be a live handle; `out` must be writable.
 */
NfwptStatus nfwpt_sweep_len(const NfwptSweep *sweep, size_t *out);

/**
 * Copies the per-σ median target power (dBm) into `buf`.
 *
 * # Safety
 * `sweep` must be a live handle; `buf` must point to `len` writable doubles.
 */
NfwptStatus nfwpt_sweep_p50_dbm(const NfwptSweep *sweep, double *buf, size_t len);

/**
 * Ideal (σ = 0) beamforming power at the target, dBm.
 *
 * # Safety
 * `sweep` must be a live handle; `out` must be writable.
 */
NfwptStatus nfwpt_sweep_bf_dbm(const NfwptSweep *sweep, double *out);

/**
 * Gain in dB of power `a_dbm` over `b_dbm`.
 *
 * # Safety
 * `out` must be writable.
 */
NfwptStatus nfwpt_gain_db(double a_dbm, double b_dbm, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NFWPT_H */
