//! C interface. Every function returns an [`SsdStatus`]; on anything other
//! than `SSD_STATUS_OK` a message is available from [`ssd_last_error`] on the
//! same thread. Handles are opaque and must be released with their `_free`
//! function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ssd_core::assurance::{freq_power, two_prior_assurance, PriorSize};
use ssd_core::cli::ScenarioConfig;
use ssd_core::sizing::{assurance_curve, min_sample_size, NStar, SizingResult};
use ssd_core::statkit::{std_normal_cdf, std_normal_quantile};
use ssd_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsdStatus {
    Ok = 0,
    /// Argument outside its domain, or an incomplete scenario.
    InvalidArgument = 1,
    /// A numeric routine broke down.
    Numeric = 2,
    /// Singular posterior precision.
    Rank = 3,
    NullPointer = 4,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 5,
    /// The search finished without reaching the target; the result handle
    /// is still valid.
    NotAchieved = 6,
    /// Index past the end of a curve.
    OutOfRange = 7,
    Panic = 8,
}

/// A validated scenario, built from the same JSON the command line reads.
pub struct SsdScenario {
    config: ScenarioConfig,
}

/// Outcome of a curve evaluation or sample-size search.
pub struct SsdSizing {
    result: SizingResult,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SsdCurvePoint {
    pub n: usize,
    pub assurance: f64,
    pub std_error: f64,
    pub replicates: usize,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> SsdStatus {
    match err.root() {
        Error::Numeric(_) => SsdStatus::Numeric,
        Error::Rank(_) => SsdStatus::Rank,
        _ => SsdStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> SsdStatus) -> SsdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SsdStatus::Panic
        }
    }
}

fn fail(err: Error) -> SsdStatus {
    set_error(err.to_string());
    status_of(&err)
}

macro_rules! nonnull {
    ($($p:ident),+) => {
        $( if $p.is_null() {
            set_error(concat!("`", stringify!($p), "` is null"));
            return SsdStatus::NullPointer;
        } )+
    };
}

fn write_f64(out: *mut f64, r: ssd_core::Result<f64>) -> SsdStatus {
    match r {
        Ok(v) => {
            unsafe { *out = v };
            SsdStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Message for the last failure on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ssd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ssd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn ssd_std_normal_cdf(x: f64, out: *mut f64) -> SsdStatus {
    guard(|| {
        nonnull!(out);
        write_f64(out, std_normal_cdf(x))
    })
}

/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn ssd_std_normal_quantile(p: f64, out: *mut f64) -> SsdStatus {
    guard(|| {
        nonnull!(out);
        write_f64(out, std_normal_quantile(p))
    })
}

/// Frequentist power `Φ(√n·Δ/σ + z_α)` at sample size `n`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn ssd_freq_power(delta: f64, sigma: f64, n: f64, alpha: f64, out: *mut f64) -> SsdStatus {
    guard(|| {
        nonnull!(out);
        write_f64(out, freq_power(delta, sigma, n, alpha))
    })
}

/// Closed-form assurance with separate analysis (`n_a`) and design (`n_d`)
/// prior sizes. An infinite `n_d` gives a point design prior.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn ssd_two_prior_assurance(
    delta: f64,
    sigma: f64,
    n: f64,
    n_a: f64,
    n_d: f64,
    alpha: f64,
    out: *mut f64,
) -> SsdStatus {
    guard(|| {
        nonnull!(out);
        let nd = if n_d == f64::INFINITY {
            PriorSize::Infinite
        } else {
            PriorSize::Finite(n_d)
        };
        write_f64(out, two_prior_assurance(delta, sigma, n, n_a, nd, alpha))
    })
}

/// Parse and validate a scenario from JSON. On success `*out` owns a new
/// handle; otherwise it is set to null.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_scenario_from_json(json: *const c_char, out: *mut *mut SsdScenario) -> SsdStatus {
    guard(|| {
        nonnull!(json, out);
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            set_error("scenario JSON is not valid UTF-8");
            return SsdStatus::InvalidUtf8;
        };
        match ScenarioConfig::from_json(text).and_then(|c| c.resolve()) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(SsdScenario { config }));
                SsdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must be null or a handle from [`ssd_scenario_from_json`] not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssd_scenario_free(scenario: *mut SsdScenario) {
    if !scenario.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(scenario))));
    }
}

/// Assurance at sample size `n`. `out_stderr` may be null.
///
/// # Safety
/// `scenario` must be a live handle; `out_value` must be writable;
/// `out_stderr` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_scenario_assurance(
    scenario: *const SsdScenario,
    n: usize,
    seed: u64,
    out_value: *mut f64,
    out_stderr: *mut f64,
) -> SsdStatus {
    guard(|| {
        nonnull!(scenario, out_value);
        let cfg = &(*scenario).config;
        let res = cfg
            .evaluator()
            .and_then(|e| e.evaluate(n, &cfg.settings(seed)).map_err(|err| err.at_n(n)));
        match res {
            Ok(est) => {
                *out_value = est.delta_hat;
                if !out_stderr.is_null() {
                    *out_stderr = est.stderr;
                }
                SsdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

unsafe fn run_grid(scenario: *const SsdScenario, seed: u64, search: bool, out: *mut *mut SsdSizing) -> SsdStatus {
    nonnull!(scenario, out);
    *out = ptr::null_mut();
    let mut cfg = (*scenario).config.clone();
    let res = cfg.resolve_grid().and_then(|_| {
        let gamma = match (search, cfg.gamma) {
            (_, Some(g)) => g,
            (false, None) => 0.5,
            (true, None) => return Err(Error::Config("missing field `gamma`".into())),
        };
        let engine = cfg.evaluator()?;
        let req = cfg.sizing_request(seed, gamma)?;
        if search {
            min_sample_size(engine.as_ref(), &req)
        } else {
            assurance_curve(engine.as_ref(), &req)
        }
    });
    match res {
        Ok(result) => {
            let achieved = matches!(result.n_star, NStar::Achieved { .. });
            *out = Box::into_raw(Box::new(SsdSizing { result }));
            if achieved || !search {
                SsdStatus::Ok
            } else {
                set_error("target assurance not reached on the grid");
                SsdStatus::NotAchieved
            }
        }
        Err(e) => fail(e),
    }
}

/// Smallest sample size reaching the scenario's `gamma`. Returns
/// `SSD_STATUS_NOT_ACHIEVED` with a valid handle when no grid point gets
/// there.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_scenario_size(
    scenario: *const SsdScenario,
    seed: u64,
    out: *mut *mut SsdSizing,
) -> SsdStatus {
    guard(|| run_grid(scenario, seed, true, out))
}

/// Assurance over the scenario grid without a search.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_scenario_curve(
    scenario: *const SsdScenario,
    seed: u64,
    out: *mut *mut SsdSizing,
) -> SsdStatus {
    guard(|| run_grid(scenario, seed, false, out))
}

/// # Safety
/// `sizing` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssd_sizing_free(sizing: *mut SsdSizing) {
    if !sizing.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(sizing))));
    }
}

/// Writes `n*`, or returns `SSD_STATUS_NOT_ACHIEVED` and leaves `out` alone.
///
/// # Safety
/// `sizing` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_sizing_n_star(sizing: *const SsdSizing, out: *mut usize) -> SsdStatus {
    guard(|| {
        nonnull!(sizing, out);
        match (*sizing).result.n_star {
            NStar::Achieved { n } => {
                *out = n;
                SsdStatus::Ok
            }
            NStar::NotAchieved { .. } => {
                set_error("target assurance not reached on the grid");
                SsdStatus::NotAchieved
            }
        }
    })
}

/// Largest assurance observed anywhere in the run.
///
/// # Safety
/// `sizing` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_sizing_max_assurance(sizing: *const SsdSizing, out: *mut f64) -> SsdStatus {
    guard(|| {
        nonnull!(sizing, out);
        let r = &(*sizing).result;
        *out = r
            .curve
            .iter()
            .chain(&r.refinement)
            .map(|p| p.assurance)
            .fold(0.0, f64::max);
        SsdStatus::Ok
    })
}

/// Number of coarse grid points. Null gives 0.
///
/// # Safety
/// `sizing` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssd_sizing_curve_len(sizing: *const SsdSizing) -> usize {
    if sizing.is_null() {
        0
    } else {
        (*sizing).result.curve.len()
    }
}

/// Number of bisection probes. Null gives 0.
///
/// # Safety
/// `sizing` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssd_sizing_refinement_len(sizing: *const SsdSizing) -> usize {
    if sizing.is_null() {
        0
    } else {
        (*sizing).result.refinement.len()
    }
}

unsafe fn point_at(
    sizing: *const SsdSizing,
    index: usize,
    refinement: bool,
    out: *mut SsdCurvePoint,
) -> SsdStatus {
    nonnull!(sizing, out);
    let r = &(*sizing).result;
    let pts = if refinement { &r.refinement } else { &r.curve };
    match pts.get(index) {
        Some(p) => {
            *out = SsdCurvePoint {
                n: p.n,
                assurance: p.assurance,
                std_error: p.stderr,
                replicates: p.replicates,
                seed: p.seed,
            };
            SsdStatus::Ok
        }
        None => {
            set_error(format!("index {index} out of range ({} points)", pts.len()));
            SsdStatus::OutOfRange
        }
    }
}

/// # Safety
/// `sizing` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_sizing_curve_point(
    sizing: *const SsdSizing,
    index: usize,
    out: *mut SsdCurvePoint,
) -> SsdStatus {
    guard(|| point_at(sizing, index, false, out))
}

/// # Safety
/// `sizing` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssd_sizing_refinement_point(
    sizing: *const SsdSizing,
    index: usize,
    out: *mut SsdCurvePoint,
) -> SsdStatus {
    guard(|| point_at(sizing, index, true, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_carry_messages() {
        let mut v = 0.0;
        let s = unsafe { ssd_std_normal_quantile(1.5, &mut v) };
        assert_eq!(s, SsdStatus::InvalidArgument);
        let msg = unsafe { CStr::from_ptr(ssd_last_error()) }.to_str().unwrap().to_string();
        assert!(msg.contains("domain"), "{msg}");
    }

    #[test]
    fn null_out_is_reported() {
        assert_eq!(unsafe { ssd_std_normal_cdf(0.0, ptr::null_mut()) }, SsdStatus::NullPointer);
    }

    #[test]
    fn panics_are_caught() {
        assert_eq!(guard(|| panic!("boom")), SsdStatus::Panic);
        let msg = unsafe { CStr::from_ptr(ssd_last_error()) }.to_str().unwrap().to_string();
        assert!(msg.contains("boom"));
    }
}
