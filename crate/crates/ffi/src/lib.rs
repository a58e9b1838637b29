//! C ABI over the `fracdelta` toolkit.
//!
//! Rationals cross the boundary as NUL-terminated `p/q` (or decimal) strings.
//! Every function returns an [`FdStatus`]; results come back through out
//! pointers, which are left untouched on failure. Strings and handles returned
//! by this library must be released with the matching `*_free` function. The
//! message for the most recent failure on the calling thread is available from
//! [`fd_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fracdelta::analysis::{Classifier, EntryRule, OrbitClassification};
use fracdelta::map::{orbit, BoundaryRule, MapParams, NumericMode, OrbitValues};
use fracdelta::prover::{prove_interval, ProverConfig, ProverResult};
use fracdelta::theorem::theorem_pipeline;
use fracdelta::{ProverError, Rational};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    CheckFailed = 4,
    Exhausted = 5,
    Io = 6,
    Panic = 7,
}

/// Branch taken by a value exactly on the threshold.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdBoundaryRule {
    High = 0,
    Low = 1,
}

/// An exact orbit.
pub struct FdOrbit {
    values: Vec<Rational>,
}

/// The outcome of one prover run.
pub struct FdProof {
    result: ProverResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Error(FdStatus, String);

impl From<ProverError> for Error {
    fn from(e: ProverError) -> Self {
        let status = match &e {
            ProverError::InvalidRange { .. } => FdStatus::InvalidArgument,
            ProverError::Io { .. } | ProverError::Checkpoint { .. } => FdStatus::Io,
            x if x.is_exhaustion() => FdStatus::Exhausted,
            _ => FdStatus::CheckFailed,
        };
        Error(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Error>) -> FdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FdStatus::Ok
        }
        Ok(Err(Error(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FdStatus::Panic
        }
    }
}

fn null(what: &str) -> Error {
    Error(FdStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn rational_arg(p: *const c_char, what: &str) -> Result<Rational, Error> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| Error(FdStatus::Parse, format!("{what} is not UTF-8")))?;
    s.parse().map_err(|e| Error(FdStatus::Parse, format!("{what}: {e}")))
}

fn out<T>(p: *mut T, what: &str) -> Result<(), Error> {
    if p.is_null() {
        Err(null(what))
    } else {
        Ok(())
    }
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior NUL").into_raw()
}

fn params(rule: FdBoundaryRule) -> MapParams {
    let rule = match rule {
        FdBoundaryRule::High => BoundaryRule::HighAtThreshold,
        FdBoundaryRule::Low => BoundaryRule::LowAtThreshold,
    };
    MapParams { rule, ..MapParams::delta() }
}

/// Message for the last failure on this thread; empty after a success. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static version string.
#[no_mangle]
pub extern "C" fn fd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Write `delta(x)` as a new `p/q` string to `*result`.
///
/// # Safety
/// `x` must be a valid C string and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fd_delta(x: *const c_char, rule: FdBoundaryRule, result: *mut *mut c_char) -> FdStatus {
    guard(|| {
        out(result, "result")?;
        let x = rational_arg(x, "x")?;
        *result = c_string(fracdelta::map::delta(&x, &params(rule)).to_string());
        Ok(())
    })
}

/// Exact orbit `x_0..x_steps` of `seed`.
///
/// # Safety
/// `seed` must be a valid C string and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fd_orbit_new(
    seed: *const c_char,
    steps: usize,
    rule: FdBoundaryRule,
    result: *mut *mut FdOrbit,
) -> FdStatus {
    guard(|| {
        out(result, "result")?;
        let seed = rational_arg(seed, "seed")?;
        let o = orbit(&seed, steps, &params(rule), NumericMode::Exact)
            .map_err(|e| Error(FdStatus::InvalidArgument, e.to_string()))?;
        let OrbitValues::Exact(values) = o.values else { unreachable!("exact mode") };
        *result = Box::into_raw(Box::new(FdOrbit { values }));
        Ok(())
    })
}

/// Number of stored values (`steps + 1`), or 0 for a null handle.
///
/// # Safety
/// `orbit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fd_orbit_len(orbit: *const FdOrbit) -> usize {
    orbit.as_ref().map_or(0, |o| o.values.len())
}

/// Value `index` as a new `p/q` string.
///
/// # Safety
/// `orbit` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fd_orbit_value(orbit: *const FdOrbit, index: usize, result: *mut *mut c_char) -> FdStatus {
    guard(|| {
        out(result, "result")?;
        let o = orbit.as_ref().ok_or_else(|| null("orbit"))?;
        let v = o.values.get(index).ok_or_else(|| Error(FdStatus::InvalidArgument, format!("index {index} out of range")))?;
        *result = c_string(v.to_string());
        Ok(())
    })
}

/// Value `index` rounded to the nearest double.
///
/// # Safety
/// `orbit` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fd_orbit_value_f64(orbit: *const FdOrbit, index: usize, result: *mut f64) -> FdStatus {
    guard(|| {
        out(result, "result")?;
        let o = orbit.as_ref().ok_or_else(|| null("orbit"))?;
        let v = o.values.get(index).ok_or_else(|| Error(FdStatus::InvalidArgument, format!("index {index} out of range")))?;
        *result = v.to_f64();
        Ok(())
    })
}

/// # Safety
/// `orbit` must be null or a live handle, which is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn fd_orbit_free(orbit: *mut FdOrbit) {
    if !orbit.is_null() {
        drop(Box::from_raw(orbit));
    }
}

/// Stopping time of `seed` (entry into the listed start of the 29-cycle):
/// writes the entry index and phase, or `-1` for both when the orbit reaches
/// zero. Returns `Exhausted` when `budget` steps decide nothing.
///
/// # Safety
/// `seed` must be a valid C string; `stopping_time` and `phase` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fd_classify(
    seed: *const c_char,
    budget: usize,
    stopping_time: *mut i64,
    phase: *mut i64,
) -> FdStatus {
    guard(|| {
        out(stopping_time, "stopping_time")?;
        out(phase, "phase")?;
        let seed = rational_arg(seed, "seed")?;
        let c = Classifier { entry: EntryRule::ListedStart, ..Classifier::default() };
        match c.classify(&seed, budget) {
            OrbitClassification::EntersCycle { stopping_time: t, phase: p, .. } => {
                *stopping_time = t as i64;
                *phase = p as i64;
            }
            OrbitClassification::ConvergesToZero { .. } => {
                *stopping_time = -1;
                *phase = -1;
            }
            OrbitClassification::Undetermined { budget } => {
                return Err(Error(FdStatus::Exhausted, format!("undetermined after {budget} steps")));
            }
        }
        Ok(())
    })
}

/// Extend `[a_in, b_in)` to `b_out`. A run stopped by `extension_cap`
/// still produces a handle and returns `Exhausted`.
///
/// # Safety
/// The strings must be valid C strings and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fd_prove(
    a_in: *const c_char,
    b_in: *const c_char,
    b_out: *const c_char,
    extension_cap: usize,
    result: *mut *mut FdProof,
) -> FdStatus {
    guard(|| {
        out(result, "result")?;
        let (a, b, t) = (rational_arg(a_in, "a_in")?, rational_arg(b_in, "b_in")?, rational_arg(b_out, "b_out")?);
        let config = ProverConfig { extension_cap, ..ProverConfig::default() };
        let r = prove_interval(&a, &b, &t, &config)?;
        let reached = r.reached();
        *result = Box::into_raw(Box::new(FdProof { result: r }));
        if reached {
            Ok(())
        } else {
            Err(Error(FdStatus::Exhausted, format!("extension cap {extension_cap} reached")))
        }
    })
}

/// Extensions performed, or 0 for a null handle.
///
/// # Safety
/// `proof` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fd_proof_extensions(proof: *const FdProof) -> usize {
    proof.as_ref().map_or(0, |p| p.result.state.extensions)
}

/// Whether the run reached its target.
///
/// # Safety
/// `proof` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fd_proof_reached(proof: *const FdProof) -> bool {
    proof.as_ref().is_some_and(|p| p.result.reached())
}

/// Final certified bound as a new `p/q` string.
///
/// # Safety
/// `proof` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fd_proof_final_bound(proof: *const FdProof, result: *mut *mut c_char) -> FdStatus {
    guard(|| {
        out(result, "result")?;
        let p = proof.as_ref().ok_or_else(|| null("proof"))?;
        *result = c_string(p.result.final_bound().to_string());
        Ok(())
    })
}

/// Bound the last extension started from, as a double.
///
/// # Safety
/// `proof` must be a live handle and `result` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fd_proof_last_start(proof: *const FdProof, result: *mut f64) -> FdStatus {
    guard(|| {
        out(result, "result")?;
        let p = proof.as_ref().ok_or_else(|| null("proof"))?;
        *result = p.result.last_start().to_f64();
        Ok(())
    })
}

/// # Safety
/// `proof` must be null or a live handle, which is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn fd_proof_free(proof: *mut FdProof) {
    if !proof.is_null() {
        drop(Box::from_raw(proof));
    }
}

/// Run the full certification of `[0, upper]`; `CheckFailed` or `Exhausted`
/// when it does not pass.
///
/// # Safety
/// `upper` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn fd_theorem(upper: *const c_char) -> FdStatus {
    guard(|| {
        let upper = rational_arg(upper, "upper")?;
        if upper < 20 {
            return Err(Error(FdStatus::InvalidArgument, format!("upper {upper} must be at least 20")));
        }
        let r = theorem_pipeline(&upper, &ProverConfig::default());
        match (r.passed, r.exhausted) {
            (true, _) => Ok(()),
            (false, true) => Err(Error(FdStatus::Exhausted, r.failure.unwrap_or_default())),
            (false, false) => Err(Error(FdStatus::CheckFailed, r.failure.unwrap_or_default())),
        }
    })
}

#[cfg(test)]
mod tests {
    use std::ptr;

    use super::*;

    #[test]
    fn null_pointers_are_reported() {
        let mut s = ptr::null_mut();
        let st = unsafe { fd_delta(ptr::null(), FdBoundaryRule::High, &mut s) };
        assert_eq!(st, FdStatus::NullPointer);
        assert!(s.is_null());
        let msg = unsafe { CStr::from_ptr(fd_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "x is null");
    }

    #[test]
    fn bad_text_is_a_parse_error() {
        let mut s = ptr::null_mut();
        let st = unsafe { fd_delta(c"1/0".as_ptr(), FdBoundaryRule::High, &mut s) };
        assert_eq!(st, FdStatus::Parse);
    }
}
