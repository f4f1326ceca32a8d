use std::ffi::{c_char, CStr, CString};
use std::ptr;

use posetgame_ffi::*;
use serde_json::Value;

const BOWTIE: &str = include_str!("../../core/tests/data/bowtie.json");
const BOWTIE_AFFINE: &str = include_str!("../../core/tests/data/bowtie_affine.json");
const BROKEN_SWAP: &str = include_str!("../../core/tests/data/broken_swap.json");
const TWO_ROUTE: &str = include_str!("../../core/tests/data/two_route.json");

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> Value {
    assert!(!s.is_null());
    let v = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
    pg_string_free(s);
    v
}

unsafe fn last_error() -> String {
    let p = pg_last_error_message();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

unsafe fn problem(json: &str) -> *mut PgProblem {
    let mut p = ptr::null_mut();
    assert_eq!(pg_problem_from_json(c(json).as_ptr(), &mut p), PgStatus::Ok);
    p
}

unsafe fn network(json: &str) -> *mut PgNetwork {
    let mut n = ptr::null_mut();
    assert_eq!(pg_network_from_json(c(json).as_ptr(), &mut n), PgStatus::Ok);
    n
}

#[test]
fn solve_problem_through_handles() {
    unsafe {
        for (json, solver) in [(BOWTIE, "general"), (BOWTIE_AFFINE, "affine")] {
            let p = problem(json);
            let (mut nec, mut cons) = (false, false);
            assert_eq!(pg_problem_check(p, &mut nec, &mut cons), PgStatus::Ok);
            assert!(nec && cons);
            let mut out = ptr::null_mut();
            assert_eq!(pg_problem_solve(p, PG_FLAG_TRACE, &mut out), PgStatus::Ok);
            let v = take(out);
            assert_eq!(v["total"], "4/5");
            assert_eq!(v["solver"], solver);
            assert!(v["trace"].is_array());
            pg_problem_free(p);
        }
    }
}

#[test]
fn affine_flag_rejects_explicit_values() {
    unsafe {
        let p = problem(BOWTIE);
        let mut out = ptr::null_mut();
        assert_eq!(pg_problem_solve(p, PG_FLAG_AFFINE, &mut out), PgStatus::MalformedInput);
        assert!(out.is_null());
        assert!(last_error().contains("affine"));
        pg_problem_free(p);
    }
}

#[test]
fn violated_conditions_are_reported() {
    unsafe {
        let p = problem(BROKEN_SWAP);
        let (mut nec, mut cons) = (false, true);
        assert_eq!(pg_problem_check(p, &mut nec, &mut cons), PgStatus::ConditionsViolated);
        assert!(nec);
        assert!(!cons);
        let mut out = ptr::null_mut();
        assert_eq!(pg_problem_solve(p, 0, &mut out), PgStatus::ConditionsViolated);
        pg_problem_free(p);
    }
}

#[test]
fn malformed_and_null_inputs() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(pg_problem_from_json(c("{\"poset\": 3}").as_ptr(), &mut p), PgStatus::MalformedInput);
        assert!(p.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(pg_problem_from_json(ptr::null(), &mut p), PgStatus::NullArgument);
        assert_eq!(pg_problem_from_json(c(BOWTIE).as_ptr(), ptr::null_mut()), PgStatus::NullArgument);
        let mut out = ptr::null_mut();
        assert_eq!(pg_problem_solve(ptr::null(), 0, &mut out), PgStatus::NullArgument);
        assert_eq!(pg_network_solve_ne(ptr::null(), 0, &mut out), PgStatus::NullArgument);
        let bad = [0xffu8, 0];
        let mut n = ptr::null_mut();
        assert_eq!(pg_network_from_json(bad.as_ptr().cast(), &mut n), PgStatus::InvalidUtf8);
        let cyclic = TWO_ROUTE.replace("{\"from\": 2, \"to\": 1", "{\"from\": 1, \"to\": 2");
        assert_eq!(pg_network_from_json(c(&cyclic).as_ptr(), &mut n), PgStatus::MalformedInput);
        pg_problem_free(ptr::null_mut());
        pg_network_free(ptr::null_mut());
        pg_string_free(ptr::null_mut());
    }
}

#[test]
fn error_message_clears_on_success() {
    unsafe {
        let mut p = ptr::null_mut();
        pg_problem_from_json(c("[]").as_ptr(), &mut p);
        assert!(!pg_last_error_message().is_null());
        let p = problem(BOWTIE);
        assert!(pg_last_error_message().is_null());
        pg_problem_free(p);
    }
}

#[test]
fn equilibrium_round_trip() {
    unsafe {
        let n = network(TWO_ROUTE);
        let mut out = ptr::null_mut();
        assert_eq!(pg_network_solve_ne(n, 0, &mut out), PgStatus::Ok);
        let eq = take(out);
        assert_eq!(eq["interdiction"]["(s,1)"], "1/10");
        assert_eq!(eq["interdiction"]["(1,t)"], "7/10");
        assert_eq!(eq["u2"], "0");

        let mut is_ne = false;
        let profile = c(&eq.to_string());
        assert_eq!(pg_network_verify_ne(n, profile.as_ptr(), 0, &mut is_ne, &mut out), PgStatus::Ok);
        assert!(is_ne);
        let report = take(out);
        assert_eq!(report["p1_gap"], "0");

        let idle = c(r#"{"flow": {"s->1->t": 2}, "interdiction": {"∅": 1}}"#);
        assert_eq!(pg_network_verify_ne(n, idle.as_ptr(), 0, &mut is_ne, &mut out), PgStatus::Ok);
        assert!(!is_ne);
        take(out);

        assert_eq!(pg_network_critical(n, &mut out), PgStatus::Ok);
        let crit = take(out);
        assert_eq!(crit["critical_edges"], serde_json::json!(["(1,t)", "(s,1)"]));

        assert_eq!(pg_network_quantities(n, PG_FLAG_DECIMAL, &mut out), PgStatus::Ok);
        take(out);
        assert_eq!(pg_network_pure_ne(n, 0, &mut out), PgStatus::Ok);
        take(out);
        pg_network_free(n);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(pg_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/posetgame.h");
    for name in [
        "pg_problem_from_json",
        "pg_problem_free",
        "pg_problem_check",
        "pg_problem_solve",
        "pg_network_from_json",
        "pg_network_free",
        "pg_network_solve_ne",
        "pg_network_verify_ne",
        "pg_network_critical",
        "pg_network_quantities",
        "pg_network_pure_ne",
        "pg_string_free",
        "pg_last_error_message",
        "pg_version",
        "PG_STATUS_CONDITIONS_VIOLATED",
        "PG_FLAG_AFFINE",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
