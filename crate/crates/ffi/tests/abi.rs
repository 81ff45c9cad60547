use revq_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

const HADAMARD: &str = "iso had : I + I <-> I + I =\n  {| inl * <-> 1/sqrt2 * inl * + 1/sqrt2 * inr *\n   | inr * <-> 1/sqrt2 * inl * - 1/sqrt2 * inr * };\n";
const LOOP: &str =
    "dialect classical;\niso loop : I + I <-> I + I = fix f. {| x <-> let y = f x in y };\nmain = loop (inl *);\n";

fn parse(src: &str, d: RevqDialect) -> Result<*mut RevqProgram, (RevqStatus, String)> {
    let src = CString::new(src).unwrap();
    let mut p = ptr::null_mut();
    let st = unsafe { revq_program_parse(src.as_ptr(), d, &mut p) };
    if st == RevqStatus::Ok {
        Ok(p)
    } else {
        Err((st, last_error()))
    }
}

fn last_error() -> String {
    let e = revq_last_error();
    assert!(!e.is_null());
    unsafe { CStr::from_ptr(e) }.to_str().unwrap().to_string()
}

fn take(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { revq_string_free(s) };
    out
}

#[test]
fn run_hadamard() {
    let p = parse(HADAMARD, RevqDialect::Quantum).unwrap();
    let arg = CString::new("inl *").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { revq_program_run(p, arg.as_ptr(), 100, &mut out) },
        RevqStatus::Ok
    );
    assert_eq!(take(out), "1/sqrt2 * inl * + 1/sqrt2 * inr *");
    let v = CString::new("1/sqrt2 * inl * + 1/sqrt2 * inr *").unwrap();
    assert_eq!(
        unsafe { revq_program_invert(p, v.as_ptr(), 100, &mut out) },
        RevqStatus::Ok
    );
    assert_eq!(take(out), "inl *");
    let mut d = RevqDialect::Classical;
    assert_eq!(unsafe { revq_program_dialect(p, &mut d) }, RevqStatus::Ok);
    assert_eq!(d, RevqDialect::Quantum);
    unsafe { revq_program_free(p) };
}

#[test]
fn matrix_json() {
    let p = parse(HADAMARD, RevqDialect::Quantum).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { revq_program_matrix_json(p, 16, &mut out) }, RevqStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(v["rows"], 2);
    assert_eq!(v["entries"].as_array().unwrap().len(), 4);
    unsafe { revq_program_free(p) };
}

#[test]
fn classical_main_and_errors() {
    let p = parse(LOOP, RevqDialect::Quantum).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { revq_program_run(p, ptr::null(), 50, &mut out) },
        RevqStatus::Ok
    );
    assert_eq!(take(out), "out-of-fuel after 50 steps");
    assert_eq!(
        unsafe { revq_program_matrix_json(p, 16, &mut out) },
        RevqStatus::Unsupported
    );
    assert!(last_error().contains("quantum"));
    unsafe { revq_program_free(p) };

    let (st, msg) = parse("main = 1/sqrt2 * inl * + 1/sqrt2 * inl *;", RevqDialect::Quantum).unwrap_err();
    assert_eq!(st, RevqStatus::Rejected);
    assert!(msg.contains("E105"), "{msg}");
}

#[test]
fn null_arguments() {
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { revq_program_parse(ptr::null(), RevqDialect::Quantum, &mut p) },
        RevqStatus::NullArgument
    );
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { revq_program_run(ptr::null(), ptr::null(), 1, &mut out) },
        RevqStatus::NullArgument
    );
    unsafe {
        revq_program_free(ptr::null_mut());
        revq_string_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(revq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
