#ifndef TWINSENSE_H
#define TWINSENSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TsConvention {
  TS_CONVENTION_POWER = 0,
  TS_CONVENTION_AMPLITUDE = 1,
} TsConvention;

typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_INVALID_ARGUMENT = 1,
  TS_STATUS_NULL_POINTER = 2,
  TS_STATUS_UNATTAINABLE = 3,
  TS_STATUS_CONFIG = 4,
  TS_STATUS_IO = 5,
  TS_STATUS_NUMERICAL = 6,
  TS_STATUS_PANIC = 7,
} TsStatus;

typedef struct TsModeLayout TsModeLayout;

typedef struct TsScenario TsScenario;

typedef struct TsTwinBeam TsTwinBeam;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. Valid until the next
 * call into the library from the same thread.
 */
const char *ts_last_error(void);

/**
 * Shot-noise displacement PSD (m²/Hz) at `power` (W) and `wavelength` (m).
 */
enum TsStatus ts_snl_psd(double power, double wavelength, double *out);

/**
 * Back-action displacement PSD (m²/Hz) for a lever of stiffness
 * `spring_constant` (N/m) and quality factor `quality_factor`.
 */
enum TsStatus ts_back_action_psd(double power,
                                 double wavelength,
                                 double spring_constant,
                                 double quality_factor,
                                 double *out);

/**
 * Power (W) at which back action equals the optical floor squeezed by
 * `squeezing_db`.
 */
enum TsStatus ts_crossing_power(double spring_constant,
                                double quality_factor,
                                double wavelength,
                                double squeezing_db,
                                double *out);

/**
 * Minimum resolvable displacement (m) in bandwidth `rbw` (Hz).
 */
enum TsStatus ts_min_displacement(double power,
                                  double wavelength,
                                  double rbw,
                                  double squeezing_db,
                                  enum TsConvention convention,
                                  double *out);

/**
 * Ideal intensity-difference noise `1/(2G−1)` relative to shot noise.
 */
enum TsStatus ts_ideal_twin_noise(double gain, double *out);

/**
 * Detector layout: `isolated` of `total` (W) on single halves, plus
 * `n_split` straddling modes given by `split_powers` (W) and `overlaps`.
 * The arrays may be null when `n_split` is zero.
 *
 * # Safety
 * The arrays must hold `n_split` values; `out` must be writable.
 */
enum TsStatus ts_layout_new(double total,
                            double isolated,
                            const double *split_powers,
                            const double *overlaps,
                            size_t n_split,
                            double detector_efficiency,
                            struct TsModeLayout **out);

/**
 * Differential noise of `layout` at `gain`, relative to shot noise.
 *
 * # Safety
 * `layout` must come from [`ts_layout_new`].
 */
enum TsStatus ts_layout_noise(const struct TsModeLayout *layout, double gain, double *out);

/**
 * Source gain for which `layout` shows `squeezing_db` of squeezing.
 *
 * # Safety
 * `layout` must come from [`ts_layout_new`].
 */
enum TsStatus ts_layout_gain_for_squeezing(const struct TsModeLayout *layout,
                                           double squeezing_db,
                                           double *out);

/**
 * # Safety
 * `layout` must come from [`ts_layout_new`] or be null; it is invalid afterwards.
 */
void ts_layout_free(struct TsModeLayout *layout);

/**
 * Twin beams from a coherent seed of `seed_rate` photons/s amplified with `gain`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TsStatus ts_twin_beam_new(double seed_rate,
                               double gain,
                               double wavelength,
                               struct TsTwinBeam **out);

/**
 * New state after power transmissions `probe` and `conj`.
 *
 * # Safety
 * `state` must come from this library; `out` must be writable.
 */
enum TsStatus ts_twin_beam_apply_loss(const struct TsTwinBeam *state,
                                      double probe,
                                      double conj,
                                      struct TsTwinBeam **out);

/**
 * Intensity-difference noise relative to the shot noise of the total rate.
 *
 * # Safety
 * `state` must come from this library.
 */
enum TsStatus ts_twin_beam_noise(const struct TsTwinBeam *state, double *out);

/**
 * # Safety
 * `state` must come from this library or be null; it is invalid afterwards.
 */
void ts_twin_beam_free(struct TsTwinBeam *state);

/**
 * Runs scenario `name` (`fig3a`, `fig3b`, `fig3c`, `fig4`). `config_toml`
 * is a run configuration document or null for the defaults.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be writable.
 */
enum TsStatus ts_scenario_run(const char *name, const char *config_toml, struct TsScenario **out);

/**
 * 1 when every anchor of the scenario passed, else 0.
 *
 * # Safety
 * `scenario` must come from [`ts_scenario_run`].
 */
enum TsStatus ts_scenario_passed(const struct TsScenario *scenario, int32_t *out);

/**
 * Anchor report as a JSON string; release with [`ts_string_free`].
 *
 * # Safety
 * `scenario` must come from [`ts_scenario_run`].
 */
enum TsStatus ts_scenario_report_json(const struct TsScenario *scenario, char **out);

/**
 * Writes the scenario's CSV tables and anchor report into `dir`.
 *
 * # Safety
 * `scenario` must come from [`ts_scenario_run`]; `dir` must be NUL-terminated.
 */
enum TsStatus ts_scenario_write(const struct TsScenario *scenario, const char *dir);

/**
 * # Safety
 * `scenario` must come from [`ts_scenario_run`] or be null.
 */
void ts_scenario_free(struct TsScenario *scenario);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void ts_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWINSENSE_H */
