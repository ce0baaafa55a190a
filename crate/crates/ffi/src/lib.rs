//! C interface.
//!
//! Problems and reports are opaque heap handles created and released by
//! this library. Every function returns an [`LngmStatus`]; on failure
//! [`lngm_last_error_message`] describes the error. Matrices are passed
//! row-major. No function unwinds across the boundary: a panic is caught and
//! reported as `LNGM_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lngm::instance::instance_from_json;
use lngm::solver::{solve, SolveOptions, SolveStatus};
use lngm::verifier::Tolerances;
use lngm::{check_strict_lngm, ConstraintKind, Error, ProblemInstance, SolveReport};
use nalgebra::DVector;

/// An instance. Create with `lngm_problem_new` or `lngm_problem_from_json`,
/// release with `lngm_problem_free`.
pub struct LngmProblem {
    inner: ProblemInstance,
}

/// The result of `lngm_solve`. Release with `lngm_report_free`.
pub struct LngmReport {
    inner: SolveReport,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LngmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    ParseError = 5,
    OutOfRange = 6,
    NumericalFailure = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LngmSolveStatus {
    Solved = 0,
    NotJointlyDefinite = 1,
    NumericalFailure = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LngmKind {
    Equality = 0,
    Inequality = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> LngmStatus {
    match err {
        Error::DimensionMismatch(_) => LngmStatus::DimensionMismatch,
        Error::NonFinite(_) => LngmStatus::NonFinite,
        Error::InvalidArgument(_) => LngmStatus::InvalidArgument,
        Error::Parse(_) => LngmStatus::ParseError,
        _ => LngmStatus::NumericalFailure,
    }
}

fn fail(err: Error) -> LngmStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn guard(f: impl FnOnce() -> LngmStatus) -> LngmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == LngmStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => {
            set_error("internal panic");
            LngmStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(concat!("null pointer: ", stringify!($p)));
            return LngmStatus::NullPointer;
        })+
    };
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn lngm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a problem from row-major `n*n` matrices and length-`n` vectors.
#[no_mangle]
pub unsafe extern "C" fn lngm_problem_new(
    n: usize,
    a0: *const f64,
    b0: *const f64,
    a1: *const f64,
    b1: *const f64,
    c1: f64,
    kind: LngmKind,
    out: *mut *mut LngmProblem,
) -> LngmStatus {
    guard(|| {
        non_null!(a0, b0, a1, b1, out);
        if n == 0 {
            return fail(Error::DimensionMismatch("n must be at least 1".into()));
        }
        let Some(nn) = n.checked_mul(n) else {
            return fail(Error::InvalidArgument("n is too large".into()));
        };
        let (a0, b0, a1, b1) = unsafe {
            (
                std::slice::from_raw_parts(a0, nn),
                std::slice::from_raw_parts(b0, n),
                std::slice::from_raw_parts(a1, nn),
                std::slice::from_raw_parts(b1, n),
            )
        };
        let kind = match kind {
            LngmKind::Equality => ConstraintKind::Equality,
            LngmKind::Inequality => ConstraintKind::Inequality,
        };
        match ProblemInstance::from_rows(n, a0, b0, a1, b1, c1, kind) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(LngmProblem { inner })) };
                LngmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parses a problem from a NUL-terminated JSON document.
#[no_mangle]
pub unsafe extern "C" fn lngm_problem_from_json(json: *const c_char, out: *mut *mut LngmProblem) -> LngmStatus {
    guard(|| {
        non_null!(json, out);
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => return fail(Error::InvalidArgument("input is not UTF-8".into())),
        };
        match instance_from_json(text) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(LngmProblem { inner })) };
                LngmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a problem. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lngm_problem_free(problem: *mut LngmProblem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn lngm_problem_dimension(problem: *const LngmProblem, n: *mut usize) -> LngmStatus {
    guard(|| {
        non_null!(problem, n);
        unsafe { *n = (*problem).inner.n() };
        LngmStatus::Ok
    })
}

/// Solves with bisection tolerance `eps`. A report is produced whenever the
/// call returns `LNGM_STATUS_OK`, including for pencils that are not jointly
/// definite; inspect it with `lngm_report_status`.
#[no_mangle]
pub unsafe extern "C" fn lngm_solve(problem: *const LngmProblem, eps: f64, out: *mut *mut LngmReport) -> LngmStatus {
    guard(|| {
        non_null!(problem, out);
        if !(eps > 0.0 && eps.is_finite()) {
            return fail(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        let inner = solve(unsafe { &(*problem).inner }, &SolveOptions::with_eps(eps));
        unsafe { *out = Box::into_raw(Box::new(LngmReport { inner })) };
        LngmStatus::Ok
    })
}

/// Releases a report. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lngm_report_free(report: *mut LngmReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn lngm_report_status(report: *const LngmReport, status: *mut LngmSolveStatus) -> LngmStatus {
    guard(|| {
        non_null!(report, status);
        let s = match unsafe { &(*report).inner }.status {
            SolveStatus::Solved => LngmSolveStatus::Solved,
            SolveStatus::NotJointlyDefinite => LngmSolveStatus::NotJointlyDefinite,
            SolveStatus::NumericalFailure => LngmSolveStatus::NumericalFailure,
        };
        unsafe { *status = s };
        LngmStatus::Ok
    })
}

/// Number of certified local-nonglobal minimizers.
#[no_mangle]
pub unsafe extern "C" fn lngm_report_count(report: *const LngmReport, count: *mut usize) -> LngmStatus {
    guard(|| {
        non_null!(report, count);
        unsafe { *count = (*report).inner.certificates.len() };
        LngmStatus::Ok
    })
}

/// Copies certificate `index`: `x` receives `n` values, `mu` the multiplier
/// and `eta` the secular root (NaN for one-dimensional problems). `eta` may
/// be null.
#[no_mangle]
pub unsafe extern "C" fn lngm_report_certificate(
    report: *const LngmReport,
    index: usize,
    x: *mut f64,
    mu: *mut f64,
    eta: *mut f64,
) -> LngmStatus {
    guard(|| {
        non_null!(report, x, mu);
        let r = unsafe { &(*report).inner };
        let Some(c) = r.certificates.get(index) else {
            set_error(format!(
                "certificate index {index} out of range ({})",
                r.certificates.len()
            ));
            return LngmStatus::OutOfRange;
        };
        unsafe {
            ptr::copy_nonoverlapping(c.x_star.as_ptr(), x, c.x_star.len());
            *mu = c.mu_star;
            if !eta.is_null() {
                *eta = c.eta_star.unwrap_or(f64::NAN);
            }
        }
        LngmStatus::Ok
    })
}

/// The full report as JSON. Release the string with `lngm_string_free`.
#[no_mangle]
pub unsafe extern "C" fn lngm_report_to_json(report: *const LngmReport, out: *mut *mut c_char) -> LngmStatus {
    guard(|| {
        non_null!(report, out);
        let text = match serde_json::to_string(unsafe { &(*report).inner }) {
            Ok(t) => t,
            Err(e) => return fail(Error::Parse(e)),
        };
        match CString::new(text) {
            Ok(s) => {
                unsafe { *out = s.into_raw() };
                LngmStatus::Ok
            }
            Err(_) => fail(Error::InvalidArgument("report contains NUL".into())),
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lngm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Checks a point (`n` values) and multiplier; `certified` receives 1 or 0.
#[no_mangle]
pub unsafe extern "C" fn lngm_verify(
    problem: *const LngmProblem,
    x: *const f64,
    mu: f64,
    certified: *mut i32,
) -> LngmStatus {
    guard(|| {
        non_null!(problem, x, certified);
        let inst = unsafe { &(*problem).inner };
        let x = DVector::from_column_slice(unsafe { std::slice::from_raw_parts(x, inst.n()) });
        match check_strict_lngm(inst, &x, mu, &Tolerances::default()) {
            Ok(v) => {
                unsafe { *certified = i32::from(v.certified()) };
                LngmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
