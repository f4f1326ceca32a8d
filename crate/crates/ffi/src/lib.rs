//! C ABI over `posetgame`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every call returns a [`PgStatus`]. On failure
//! the message is kept per thread and readable with
//! [`pg_last_error_message`]. Strings handed out by the library are freed
//! with [`pg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use posetgame::error::ErrorKind;
use posetgame::game::{compute_ne, critical_components, equilibrium_quantities, pure_ne_check, verify_ne};
use posetgame::greedy::SolveOptions;
use posetgame::io::{self, Render};
use posetgame::network::DEFAULT_PATH_CAP;
use posetgame::poset::DEFAULT_CHAIN_CAP;
use posetgame::{ChainConstraintProblem, Error, FlowNetwork};
use serde_json::Value;

/// Include per-round solver state in the solution.
pub const PG_FLAG_TRACE: u32 = 1;
/// Write decimals instead of exact fractions.
pub const PG_FLAG_DECIMAL: u32 = 2;
/// Reject explicit chain values and use the affine solver only.
pub const PG_FLAG_AFFINE: u32 = 4;

/// Result of every call. The first five values match the CLI exit status.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgStatus {
    Ok = 0,
    MalformedInput = 1,
    ConditionsViolated = 2,
    ResourceLimit = 3,
    Internal = 4,
    NullArgument = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

impl From<ErrorKind> for PgStatus {
    fn from(kind: ErrorKind) -> Self {
        match kind {
            ErrorKind::MalformedInput => PgStatus::MalformedInput,
            ErrorKind::ConditionsViolated => PgStatus::ConditionsViolated,
            ErrorKind::ResourceLimit => PgStatus::ResourceLimit,
            ErrorKind::Internal => PgStatus::Internal,
        }
    }
}

/// A parsed chain-constraint problem.
pub struct PgProblem {
    inner: ChainConstraintProblem,
}

/// A validated flow network.
pub struct PgNetwork {
    inner: FlowNetwork,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(PgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.kind().into(), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PgStatus::NullArgument, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PgStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            PgStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure(PgStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_json(out: *mut *mut c_char, v: &Value) -> Result<(), Failure> {
    let s = serde_json::to_string(v).expect("json values serialize");
    let c = CString::new(s).map_err(|e| Failure(PgStatus::Internal, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn render(flags: u32) -> Render {
    Render { decimals: (flags & PG_FLAG_DECIMAL != 0).then_some(12), ..Render::default() }
}

/// Parses a problem document. On success `*out` owns a new handle.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pg_problem_from_json(json: *const c_char, out: *mut *mut PgProblem) -> PgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = read_str(json, "json")?;
        let inner = io::parse_problem(text, DEFAULT_CHAIN_CAP)?;
        *out = Box::into_raw(Box::new(PgProblem { inner }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`pg_problem_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn pg_problem_free(problem: *mut PgProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Checks the chain slack and conservation conditions. Returns
/// `PG_STATUS_CONDITIONS_VIOLATED` when either fails; both flags are
/// written in that case too.
///
/// # Safety
/// Pointers must be valid; the output flags may be null.
#[no_mangle]
pub unsafe extern "C" fn pg_problem_check(
    problem: *const PgProblem,
    necessary_ok: *mut bool,
    conservation_ok: *mut bool,
) -> PgStatus {
    guard(|| {
        let p = handle(problem, "problem")?;
        let report = p.inner.verify_conditions().map_err(Error::from)?;
        if !necessary_ok.is_null() {
            *necessary_ok = report.necessary_ok;
        }
        if !conservation_ok.is_null() {
            *conservation_ok = report.conservation_ok;
        }
        if report.ok() {
            Ok(())
        } else {
            Err(Failure(PgStatus::ConditionsViolated, format!("{} violated condition(s)", report.violations.len())))
        }
    })
}

/// Solves the problem and writes the solution document to `*out_json`.
///
/// # Safety
/// `problem` and `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_problem_solve(
    problem: *const PgProblem,
    flags: u32,
    out_json: *mut *mut c_char,
) -> PgStatus {
    guard(|| {
        let p = handle(problem, "problem")?;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        *out_json = ptr::null_mut();
        let opts =
            SolveOptions { trace: flags & PG_FLAG_TRACE != 0, check_invariants: false, chain_cap: DEFAULT_CHAIN_CAP };
        let sol = io::solve_problem(&p.inner, &opts, flags & PG_FLAG_AFFINE != 0)?;
        write_json(out_json, &io::solution_json(&p.inner, &sol, &render(flags))?)
    })
}

/// Parses a network document. On success `*out` owns a new handle.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pg_network_from_json(json: *const c_char, out: *mut *mut PgNetwork) -> PgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let inner = io::parse_network(read_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(PgNetwork { inner }));
        Ok(())
    })
}

/// # Safety
/// `network` must come from [`pg_network_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn pg_network_free(network: *mut PgNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

unsafe fn with_network(
    network: *const PgNetwork,
    out_json: *mut *mut c_char,
    f: impl FnOnce(&FlowNetwork) -> Result<Value, Failure>,
) -> PgStatus {
    guard(|| {
        let n = handle(network, "network")?;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        *out_json = ptr::null_mut();
        let v = f(&n.inner)?;
        write_json(out_json, &v)
    })
}

/// Computes a mixed equilibrium.
///
/// # Safety
/// `network` and `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_network_solve_ne(
    network: *const PgNetwork,
    flags: u32,
    out_json: *mut *mut c_char,
) -> PgStatus {
    with_network(network, out_json, |net| {
        let eq = compute_ne(net).map_err(Error::from)?;
        Ok(io::equilibrium_json(net, &eq, &render(flags)))
    })
}

/// Computes best-response gaps for a profile document. `*is_ne` is set when
/// neither player can gain; the report is written either way.
///
/// # Safety
/// All pointers except `is_ne` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_network_verify_ne(
    network: *const PgNetwork,
    profile_json: *const c_char,
    flags: u32,
    is_ne: *mut bool,
    out_json: *mut *mut c_char,
) -> PgStatus {
    with_network(network, out_json, |net| {
        let r = render(flags);
        let profile = io::parse_profile(read_str(profile_json, "profile_json")?, net, &r.empty_key)?;
        let report = verify_ne(net, &profile, DEFAULT_PATH_CAP).map_err(Error::from)?;
        if !is_ne.is_null() {
            *is_ne = report.is_ne;
        }
        Ok(io::ne_report_json(net, &report, &r))
    })
}

/// Paths and edges used by some equilibrium.
///
/// # Safety
/// `network` and `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_network_critical(network: *const PgNetwork, out_json: *mut *mut c_char) -> PgStatus {
    with_network(network, out_json, |net| {
        let crit = critical_components(net, DEFAULT_PATH_CAP).map_err(Error::from)?;
        Ok(io::critical_json(net, &crit))
    })
}

/// Flow, cost and interdiction totals at the computed equilibrium.
///
/// # Safety
/// `network` and `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_network_quantities(
    network: *const PgNetwork,
    flags: u32,
    out_json: *mut *mut c_char,
) -> PgStatus {
    with_network(network, out_json, |net| {
        let eq = compute_ne(net).map_err(Error::from)?;
        Ok(io::quantities_json(&equilibrium_quantities(&eq, net), &render(flags)))
    })
}

/// Looks for an equilibrium in which the interdictor stays idle.
///
/// # Safety
/// `network` and `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pg_network_pure_ne(
    network: *const PgNetwork,
    flags: u32,
    out_json: *mut *mut c_char,
) -> PgStatus {
    with_network(network, out_json, |net| {
        let pure = pure_ne_check(net, DEFAULT_PATH_CAP).map_err(Error::from)?;
        Ok(io::pure_json(net, &pure, &render(flags)))
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn pg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn pg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
