//! C ABI over `nfwpt-core`.
//!
//! Every entry point returns an [`NfwptStatus`] and writes results through
//! out-pointers. Objects are opaque handles created by `*_new`/`*_load`/
//! `nfwpt_simulate_*` calls and released with the matching `*_free`. On any
//! non-OK status, [`nfwpt_last_error`] returns a message for the calling
//! thread. Panics never cross the boundary; they are reported as
//! [`NfwptStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nfwpt_core::engine::dbm_to_watts;
use nfwpt_core::io::{load_field_csv, save_field_csv};
use nfwpt_core::{
    gain_db, load_config, simulate_field, spot_region, sweep_sigma, Error, PowerField, Position3D, Scenario,
    SimConfig, StrategyKind, SweepResult,
};

pub const NFWPT_STRATEGY_SISO: u32 = 0;
pub const NFWPT_STRATEGY_RPS: u32 = 1;
pub const NFWPT_STRATEGY_BF: u32 = 2;
pub const NFWPT_STRATEGY_GBF: u32 = 3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfwptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Singularity = 4,
    Panic = 5,
}

/// Focal-spot summary of a field around a target.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NfwptSpot {
    pub target_dbm: f64,
    pub area_m2: f64,
    pub equivalent_diameter_m: f64,
    pub cut_width_x_m: f64,
    pub cut_width_y_m: f64,
    pub wavelength_m: f64,
    pub cells: usize,
}

/// A scenario loaded from a configuration, plus its seed and strategy settings.
pub struct NfwptScenario {
    config: SimConfig,
    scenario: Scenario,
}

/// A simulated or loaded received-power field.
pub struct NfwptField(PowerField);

/// Result of a phase-error sweep.
pub struct NfwptSweep(SweepResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NfwptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NfwptStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            NfwptStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            let status = match e.exit_code() {
                3 => NfwptStatus::Io,
                4 => NfwptStatus::Singularity,
                _ => NfwptStatus::InvalidArgument,
            };
            set_last_error(e.to_string());
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            NfwptStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidArgument("path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

fn strategy_arg(code: u32) -> Result<StrategyKind, Failure> {
    match code {
        NFWPT_STRATEGY_SISO => Ok(StrategyKind::Siso),
        NFWPT_STRATEGY_RPS => Ok(StrategyKind::Rps),
        NFWPT_STRATEGY_BF => Ok(StrategyKind::Bf),
        NFWPT_STRATEGY_GBF => Ok(StrategyKind::Gbf),
        other => Err(Error::InvalidArgument(format!("unknown strategy code {other}")).into()),
    }
}

fn new_scenario(config: SimConfig) -> Result<Box<NfwptScenario>, Failure> {
    let scenario = config.scenario()?;
    Ok(Box::new(NfwptScenario { config, scenario }))
}

/// Message for the most recent failure on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nfwpt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a scenario with the built-in default configuration.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_scenario_new_default(out: *mut *mut NfwptScenario) -> NfwptStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        *slot = Box::into_raw(new_scenario(SimConfig::default())?);
        Ok(())
    })
}

/// Loads a scenario from a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_scenario_load(path: *const c_char, out: *mut *mut NfwptScenario) -> NfwptStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        let cfg = load_config(path_arg(path)?)?;
        *slot = Box::into_raw(new_scenario(cfg)?);
        Ok(())
    })
}

/// # Safety
/// `scenario` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_scenario_free(scenario: *mut NfwptScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_scenario_num_antennas(scenario: *const NfwptScenario, out: *mut usize) -> NfwptStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        *self::out(out, "out")? = s.scenario.array.len();
        Ok(())
    })
}

/// Seed configured for this scenario.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_scenario_seed(scenario: *const NfwptScenario, out: *mut u64) -> NfwptStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        *self::out(out, "out")? = s.config.seed;
        Ok(())
    })
}

/// Simulates the time-averaged field of one strategy (`NFWPT_STRATEGY_*`).
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_simulate_field(
    scenario: *const NfwptScenario,
    strategy: u32,
    seed: u64,
    out: *mut *mut NfwptField,
) -> NfwptStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let slot = self::out(out, "out")?;
        let kind = strategy_arg(strategy)?;
        let field = simulate_field(&s.scenario, &s.config.strategy_config(kind), seed)?;
        *slot = Box::into_raw(Box::new(NfwptField(field)));
        Ok(())
    })
}

/// # Safety
/// `field` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_field_free(field: *mut NfwptField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Grid size; values are stored row-major with x varying fastest.
///
/// # Safety
/// `field` must be a live handle; `nx` and `ny` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_field_dims(field: *const NfwptField, nx: *mut usize, ny: *mut usize) -> NfwptStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        *out(nx, "nx")? = f.nx();
        *out(ny, "ny")? = f.ny();
        Ok(())
    })
}

/// Copies the field's dBm values into `buf`, which must hold `nx * ny` doubles.
///
/// # Safety
/// `field` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_field_values(field: *const NfwptField, buf: *mut f64, len: usize) -> NfwptStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        let n = f.values_dbm.len();
        if len < n {
            return Err(Error::InvalidArgument(format!("buffer holds {len} values, field has {n}")).into());
        }
        ptr::copy_nonoverlapping(f.values_dbm.as_ptr(), buf, n);
        Ok(())
    })
}

/// Value of the grid cell nearest `(x, y)`, dBm.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_field_value_near(
    field: *const NfwptField,
    x: f64,
    y: f64,
    out: *mut f64,
) -> NfwptStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        if !f.plane.contains_xy(x, y) {
            return Err(Error::InvalidArgument(format!("({x}, {y}) lies outside the plane")).into());
        }
        *self::out(out, "out")? = f.value_near(x, y);
        Ok(())
    })
}

/// # Safety
/// `field` must be a live handle; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_field_save_csv(field: *const NfwptField, path: *const c_char) -> NfwptStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        save_field_csv(f, path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_field_load_csv(path: *const c_char, out: *mut *mut NfwptField) -> NfwptStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        let f = load_field_csv(path_arg(path)?)?;
        *slot = Box::into_raw(Box::new(NfwptField(f)));
        Ok(())
    })
}

/// Focal spot of `field` around the target `(x, y)` on its plane, using the
/// connected region within `threshold_db` of the target value.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_field_spot(
    field: *const NfwptField,
    x: f64,
    y: f64,
    threshold_db: f64,
    out: *mut NfwptSpot,
) -> NfwptStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        let slot = self::out(out, "out")?;
        let spot = spot_region(f, Position3D::new(x, y, f.plane.z()), threshold_db)?;
        *slot = NfwptSpot {
            target_dbm: spot.target_dbm,
            area_m2: spot.area_m2,
            equivalent_diameter_m: spot.equivalent_diameter_m,
            cut_width_x_m: spot.cut_width_x_m,
            cut_width_y_m: spot.cut_width_y_m,
            wavelength_m: f.wavelength(),
            cells: spot.cells(),
        };
        Ok(())
    })
}

/// Runs the phase-error sweep at the scenario's target over `n` standard
/// deviations (radians) with `realizations` draws each.
///
/// # Safety
/// `scenario` must be a live handle; `sigmas_rad` must point to `n` doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_sweep_sigma(
    scenario: *const NfwptScenario,
    sigmas_rad: *const f64,
    n: usize,
    realizations: usize,
    seed: u64,
    out: *mut *mut NfwptSweep,
) -> NfwptStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let slot = self::out(out, "out")?;
        if sigmas_rad.is_null() {
            return Err(Failure::Null("sigmas_rad"));
        }
        let sigmas = std::slice::from_raw_parts(sigmas_rad, n);
        let mut opts = s.config.sweep_options();
        opts.realizations = realizations;
        let result = sweep_sigma(&s.scenario, sigmas, &opts, seed)?;
        *slot = Box::into_raw(Box::new(NfwptSweep(result)));
        Ok(())
    })
}

/// # Safety
/// `sweep` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_sweep_free(sweep: *mut NfwptSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// Number of σ values in the sweep.
///
/// # Safety
/// `sweep` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_sweep_len(sweep: *const NfwptSweep, out: *mut usize) -> NfwptStatus {
    guard(|| {
        *self::out(out, "out")? = deref(sweep, "sweep")?.0.sigmas.len();
        Ok(())
    })
}

/// Copies the per-σ median target power (dBm) into `buf`.
///
/// # Safety
/// `sweep` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_sweep_p50_dbm(sweep: *const NfwptSweep, buf: *mut f64, len: usize) -> NfwptStatus {
    guard(|| {
        let s = &deref(sweep, "sweep")?.0;
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        if len < s.p50_dbm.len() {
            return Err(Error::InvalidArgument(format!("buffer holds {len} values, sweep has {}", s.p50_dbm.len())).into());
        }
        ptr::copy_nonoverlapping(s.p50_dbm.as_ptr(), buf, s.p50_dbm.len());
        Ok(())
    })
}

/// Ideal (σ = 0) beamforming power at the target, dBm.
///
/// # Safety
/// `sweep` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_sweep_bf_dbm(sweep: *const NfwptSweep, out: *mut f64) -> NfwptStatus {
    guard(|| {
        *self::out(out, "out")? = deref(sweep, "sweep")?.0.bf_dbm;
        Ok(())
    })
}

/// Gain in dB of power `a_dbm` over `b_dbm`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nfwpt_gain_db(a_dbm: f64, b_dbm: f64, out: *mut f64) -> NfwptStatus {
    guard(|| {
        let slot = self::out(out, "out")?;
        *slot = gain_db(dbm_to_watts(a_dbm), dbm_to_watts(b_dbm))?;
        Ok(())
    })
}
