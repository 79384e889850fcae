//! C ABI over the twinsense library.
//!
//! Every fallible function returns a [`TsStatus`] and writes its result
//! through an out-pointer. On failure the out-pointer is left untouched and
//! [`ts_last_error`] describes the problem. Handles are opaque, created by a
//! `*_new` or `*_run` function and released by the matching `*_free`.
//! Panics never cross the boundary; they surface as `TS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use twinsense::config::RunConfig;
use twinsense::experiments::{run_scenario, ScenarioOutput};
use twinsense::mechanics::{self, CantileverParams, DisplacementConvention};
use twinsense::quanta::{ideal_twin_noise, Gain, LossChannel, TwinBeamState};
use twinsense::spatial::{gain_for_squeezing, split_detector_noise, ModeLayout, SplitMode};
use twinsense::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Unattainable = 3,
    Config = 4,
    Io = 5,
    Numerical = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsConvention {
    Power = 0,
    Amplitude = 1,
}

pub struct TsModeLayout(ModeLayout);

pub struct TsTwinBeam(TwinBeamState);

pub struct TsScenario(ScenarioOutput);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> TsStatus {
    match e {
        Error::Config(m) if m.starts_with("null ") => TsStatus::NullPointer,
        Error::Unattainable { .. } => TsStatus::Unattainable,
        Error::Config(_) | Error::Quantity { .. } | Error::UnknownVariant { .. } => TsStatus::Config,
        Error::Io(_) => TsStatus::Io,
        Error::NotPositiveSemidefinite { .. }
        | Error::InsufficientSamples { .. }
        | Error::PeakAtEdge { .. }
        | Error::Undersampled { .. } => TsStatus::Numerical,
        _ => TsStatus::InvalidArgument,
    }
}

/// Runs `f`, stores its value through `out`, and maps errors and panics.
fn guard<T>(out: *mut T, f: impl FnOnce() -> twinsense::Result<T>) -> TsStatus {
    if out.is_null() {
        set_error("null output pointer");
        return TsStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => {
            // SAFETY: checked non-null above; the caller owns the storage.
            unsafe { out.write(v) };
            TsStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            TsStatus::Panic
        }
    }
}

fn handle<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn borrow<'a, T>(p: *const T) -> twinsense::Result<&'a T> {
    p.as_ref().ok_or_else(|| Error::Config("null handle".into()))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> twinsense::Result<&'a str> {
    if p.is_null() {
        return Err(Error::Config(format!("null {what}")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::Config(format!("{what} is not UTF-8")))
}

/// Message for the most recent failure on this thread. Valid until the next
/// call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ts_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Shot-noise displacement PSD (m²/Hz) at `power` (W) and `wavelength` (m).
#[no_mangle]
pub extern "C" fn ts_snl_psd(power: f64, wavelength: f64, out: *mut f64) -> TsStatus {
    guard(out, || mechanics::snl_psd(power, wavelength))
}

/// Back-action displacement PSD (m²/Hz) for a lever of stiffness
/// `spring_constant` (N/m) and quality factor `quality_factor`.
#[no_mangle]
pub extern "C" fn ts_back_action_psd(
    power: f64,
    wavelength: f64,
    spring_constant: f64,
    quality_factor: f64,
    out: *mut f64,
) -> TsStatus {
    guard(out, || {
        let p = lever(spring_constant, quality_factor)?;
        mechanics::back_action_psd(power, wavelength, &p)
    })
}

/// Power (W) at which back action equals the optical floor squeezed by
/// `squeezing_db`.
#[no_mangle]
pub extern "C" fn ts_crossing_power(
    spring_constant: f64,
    quality_factor: f64,
    wavelength: f64,
    squeezing_db: f64,
    out: *mut f64,
) -> TsStatus {
    guard(out, || {
        let p = lever(spring_constant, quality_factor)?;
        mechanics::crossing_power(&p, wavelength, squeezing_db)
    })
}

fn lever(spring_constant: f64, quality_factor: f64) -> twinsense::Result<CantileverParams> {
    CantileverParams::new(
        spring_constant,
        quality_factor,
        CantileverParams::default().mode_frequency,
        CantileverParams::default().fundamental_frequency,
        CantileverParams::default().temperature,
    )
}

/// Minimum resolvable displacement (m) in bandwidth `rbw` (Hz).
#[no_mangle]
pub extern "C" fn ts_min_displacement(
    power: f64,
    wavelength: f64,
    rbw: f64,
    squeezing_db: f64,
    convention: TsConvention,
    out: *mut f64,
) -> TsStatus {
    let convention = match convention {
        TsConvention::Power => DisplacementConvention::Power,
        TsConvention::Amplitude => DisplacementConvention::Amplitude,
    };
    guard(out, || {
        mechanics::min_displacement(power, wavelength, rbw, squeezing_db, convention).map(|m| m.value)
    })
}

/// Ideal intensity-difference noise `1/(2G−1)` relative to shot noise.
#[no_mangle]
pub extern "C" fn ts_ideal_twin_noise(gain: f64, out: *mut f64) -> TsStatus {
    guard(out, || Gain::new(gain).map(ideal_twin_noise))
}

/// Detector layout: `isolated` of `total` (W) on single halves, plus
/// `n_split` straddling modes given by `split_powers` (W) and `overlaps`.
/// The arrays may be null when `n_split` is zero.
///
/// # Safety
/// The arrays must hold `n_split` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_layout_new(
    total: f64,
    isolated: f64,
    split_powers: *const f64,
    overlaps: *const f64,
    n_split: usize,
    detector_efficiency: f64,
    out: *mut *mut TsModeLayout,
) -> TsStatus {
    guard(out, || {
        let modes = if n_split == 0 {
            Vec::new()
        } else {
            if split_powers.is_null() || overlaps.is_null() {
                return Err(Error::Config("null split-mode array".into()));
            }
            let p = std::slice::from_raw_parts(split_powers, n_split);
            let o = std::slice::from_raw_parts(overlaps, n_split);
            p.iter()
                .zip(o)
                .map(|(&power, &overlap)| SplitMode { power, overlap })
                .collect()
        };
        ModeLayout::new(total, isolated, modes, detector_efficiency).map(|l| handle(TsModeLayout(l)))
    })
}

/// Differential noise of `layout` at `gain`, relative to shot noise.
///
/// # Safety
/// `layout` must come from [`ts_layout_new`].
#[no_mangle]
pub unsafe extern "C" fn ts_layout_noise(layout: *const TsModeLayout, gain: f64, out: *mut f64) -> TsStatus {
    guard(out, || split_detector_noise(&borrow(layout)?.0, Gain::new(gain)?))
}

/// Source gain for which `layout` shows `squeezing_db` of squeezing.
///
/// # Safety
/// `layout` must come from [`ts_layout_new`].
#[no_mangle]
pub unsafe extern "C" fn ts_layout_gain_for_squeezing(
    layout: *const TsModeLayout,
    squeezing_db: f64,
    out: *mut f64,
) -> TsStatus {
    guard(out, || gain_for_squeezing(&borrow(layout)?.0, squeezing_db).map(Gain::value))
}

/// # Safety
/// `layout` must come from [`ts_layout_new`] or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ts_layout_free(layout: *mut TsModeLayout) {
    if !layout.is_null() {
        drop(Box::from_raw(layout));
    }
}

/// Twin beams from a coherent seed of `seed_rate` photons/s amplified with `gain`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_twin_beam_new(
    seed_rate: f64,
    gain: f64,
    wavelength: f64,
    out: *mut *mut TsTwinBeam,
) -> TsStatus {
    guard(out, || {
        TwinBeamState::amplify(seed_rate, Gain::new(gain)?, wavelength).map(|s| handle(TsTwinBeam(s)))
    })
}

/// New state after power transmissions `probe` and `conj`.
///
/// # Safety
/// `state` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_twin_beam_apply_loss(
    state: *const TsTwinBeam,
    probe: f64,
    conj: f64,
    out: *mut *mut TsTwinBeam,
) -> TsStatus {
    guard(out, || {
        let s = borrow(state)?;
        let next = s.0.apply_loss(LossChannel::new(probe)?, LossChannel::new(conj)?);
        Ok(handle(TsTwinBeam(next)))
    })
}

/// Intensity-difference noise relative to the shot noise of the total rate.
///
/// # Safety
/// `state` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn ts_twin_beam_noise(state: *const TsTwinBeam, out: *mut f64) -> TsStatus {
    guard(out, || borrow(state)?.0.intensity_difference_noise())
}

/// # Safety
/// `state` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn ts_twin_beam_free(state: *mut TsTwinBeam) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Runs scenario `name` (`fig3a`, `fig3b`, `fig3c`, `fig4`). `config_toml`
/// is a run configuration document or null for the defaults.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_scenario_run(
    name: *const c_char,
    config_toml: *const c_char,
    out: *mut *mut TsScenario,
) -> TsStatus {
    guard(out, || {
        let name = text(name, "scenario name")?;
        let config = if config_toml.is_null() {
            RunConfig::default()
        } else {
            RunConfig::from_toml(text(config_toml, "configuration")?)?
        };
        run_scenario(name, &config.reproduction()?).map(|o| handle(TsScenario(o)))
    })
}

/// 1 when every anchor of the scenario passed, else 0.
///
/// # Safety
/// `scenario` must come from [`ts_scenario_run`].
#[no_mangle]
pub unsafe extern "C" fn ts_scenario_passed(scenario: *const TsScenario, out: *mut i32) -> TsStatus {
    guard(out, || Ok(i32::from(borrow(scenario)?.0.report.passed())))
}

/// Anchor report as a JSON string; release with [`ts_string_free`].
///
/// # Safety
/// `scenario` must come from [`ts_scenario_run`].
#[no_mangle]
pub unsafe extern "C" fn ts_scenario_report_json(scenario: *const TsScenario, out: *mut *mut c_char) -> TsStatus {
    guard(out, || {
        let json = borrow(scenario)?.0.report.to_json();
        CString::new(json)
            .map(CString::into_raw)
            .map_err(|e| Error::Io(e.to_string()))
    })
}

/// Writes the scenario's CSV tables and anchor report into `dir`.
///
/// # Safety
/// `scenario` must come from [`ts_scenario_run`]; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ts_scenario_write(scenario: *const TsScenario, dir: *const c_char) -> TsStatus {
    let mut unit = ();
    guard(&mut unit, || {
        let s = borrow(scenario)?;
        s.0.write_to(Path::new(text(dir, "directory")?)).map(|_| ())
    })
}

/// # Safety
/// `scenario` must come from [`ts_scenario_run`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ts_scenario_free(scenario: *mut TsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
