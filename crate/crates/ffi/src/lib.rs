//! C interface to the revq library.
//!
//! Programs are opaque handles created by `revq_program_parse` and released
//! with `revq_program_free`. Every call returns a `RevqStatus`; on failure the
//! message is available from `revq_last_error` until the next call on the
//! same thread. Strings handed out by the library are released with
//! `revq_string_free`.

use revq::ast::{app, Dialect, Iso, Term};
use revq::parser::{self, SourceProgram};
use revq::{ceval, denote, qeval, stdlib, typeck};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RevqStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Lexing, parsing or type checking failed; the message is a diagnostic.
    Rejected = 3,
    /// Evaluation failed or the program has nothing to run.
    Eval = 4,
    /// The request does not apply to this program, e.g. a matrix of a
    /// classical program.
    Unsupported = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RevqDialect {
    Quantum = 0,
    Classical = 1,
}

impl From<RevqDialect> for Dialect {
    fn from(d: RevqDialect) -> Self {
        match d {
            RevqDialect::Quantum => Dialect::Quantum,
            RevqDialect::Classical => Dialect::Classical,
        }
    }
}

/// A parsed and type-checked program.
pub struct RevqProgram {
    program: SourceProgram,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

type Failure = (RevqStatus, String);

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RevqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RevqStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error".into());
            RevqStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((RevqStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (RevqStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err((RevqStatus::NullArgument, "output pointer is null".into()));
    }
    let c = CString::new(s).map_err(|_| (RevqStatus::Eval, "output contains a nul byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn program<'a>(p: *const RevqProgram) -> Result<&'a SourceProgram, Failure> {
    p.as_ref()
        .map(|p| &p.program)
        .ok_or_else(|| (RevqStatus::NullArgument, "program is null".into()))
}

fn rejected(d: revq::diag::Diagnostic) -> Failure {
    (RevqStatus::Rejected, d.to_string())
}

fn entry(p: &SourceProgram) -> Result<Iso, Failure> {
    stdlib::entry_iso(p).ok_or_else(|| (RevqStatus::Eval, "program declares no iso".into()))
}

fn parse_value(p: &SourceProgram, text: &str) -> Result<Term, Failure> {
    let t = parser::parse_term(text, p.dialect, &p.iso_names()).map_err(rejected)?;
    Ok(p.close_term(&t))
}

fn evaluate(p: &SourceProgram, t: &Term, fuel: u64) -> Result<String, Failure> {
    typeck::typecheck_term(&typeck::Context::new(), t, p.dialect).map_err(rejected)?;
    match p.dialect {
        Dialect::Quantum => qeval::normalize(t)
            .map(|v| v.to_string())
            .map_err(|e| (RevqStatus::Eval, e.to_string())),
        Dialect::Classical => Ok(ceval::eval(t, usize::try_from(fuel).unwrap_or(usize::MAX)).to_string()),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn revq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn revq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses and type-checks `source`. A leading `dialect` header overrides
/// `dialect`. On success `*out` owns a new program handle.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn revq_program_parse(
    source: *const c_char,
    dialect: RevqDialect,
    out: *mut *mut RevqProgram,
) -> RevqStatus {
    guard(|| {
        let src = read_str(source, "source")?;
        if out.is_null() {
            return Err((RevqStatus::NullArgument, "output pointer is null".into()));
        }
        let program = parser::parse_auto(src, dialect.into()).map_err(rejected)?;
        typeck::check_program(&program).map_err(rejected)?;
        *out = Box::into_raw(Box::new(RevqProgram { program }));
        Ok(())
    })
}

/// Releases a program handle. NULL is ignored.
///
/// # Safety
/// `p` must come from `revq_program_parse` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn revq_program_free(p: *mut RevqProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dialect the program was checked in.
///
/// # Safety
/// `p` must be a live program handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn revq_program_dialect(p: *const RevqProgram, out: *mut RevqDialect) -> RevqStatus {
    guard(|| {
        let prog = program(p)?;
        if out.is_null() {
            return Err((RevqStatus::NullArgument, "output pointer is null".into()));
        }
        *out = match prog.dialect {
            Dialect::Quantum => RevqDialect::Quantum,
            Dialect::Classical => RevqDialect::Classical,
        };
        Ok(())
    })
}

/// Applies the entry iso to `arg`, or evaluates `main` when `arg` is NULL.
/// `fuel` bounds classical evaluation. `*out` receives the printed result.
///
/// # Safety
/// `p` must be a live handle, `arg` NULL or a NUL-terminated string, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn revq_program_run(
    p: *const RevqProgram,
    arg: *const c_char,
    fuel: u64,
    out: *mut *mut c_char,
) -> RevqStatus {
    guard(|| {
        let prog = program(p)?;
        let t = if arg.is_null() {
            match prog.main().map(|d| &d.kind) {
                Some(parser::DeclKind::Main { term, .. }) => prog.close_term(term),
                _ => return Err((RevqStatus::Eval, "no `main` declaration and no argument".into())),
            }
        } else {
            app(entry(prog)?, parse_value(prog, read_str(arg, "argument")?)?)
        };
        write_out(out, evaluate(prog, &t, fuel)?)
    })
}

/// Applies the inverse of the entry iso to `value`.
///
/// # Safety
/// As for `revq_program_run`, with `value` non-NULL.
#[no_mangle]
pub unsafe extern "C" fn revq_program_invert(
    p: *const RevqProgram,
    value: *const c_char,
    fuel: u64,
    out: *mut *mut c_char,
) -> RevqStatus {
    guard(|| {
        let prog = program(p)?;
        let v = parse_value(prog, read_str(value, "value")?)?;
        let w = entry(prog)?;
        let t = app(Iso::Inverse(Box::new(w.clone())), v.clone());
        let text = match prog.dialect {
            Dialect::Quantum => {
                typeck::typecheck_term(&typeck::Context::new(), &t, prog.dialect).map_err(rejected)?;
                qeval::apply_inverse(&w, &v)
                    .map(|r| r.to_string())
                    .map_err(|e| (RevqStatus::Eval, e.to_string()))?
            }
            Dialect::Classical => evaluate(prog, &t, fuel)?,
        };
        write_out(out, text)
    })
}

/// Matrix of the entry iso of a quantum program as JSON
/// `{"rows", "cols", "entries": [[row, col, re, im], ...]}`.
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn revq_program_matrix_json(
    p: *const RevqProgram,
    cutoff: usize,
    out: *mut *mut c_char,
) -> RevqStatus {
    guard(|| {
        let prog = program(p)?;
        if prog.dialect != Dialect::Quantum {
            return Err((
                RevqStatus::Unsupported,
                "matrices are defined for quantum programs".into(),
            ));
        }
        let m = denote::sem_iso(&entry(prog)?, cutoff).map_err(|e| match e {
            denote::DenoteError::Type(d) => rejected(d),
            other => (RevqStatus::Eval, other.to_string()),
        })?;
        write_out(out, serde_json::to_string(&m.to_json()).expect("json"))
    })
}

/// Releases a string returned by the library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn revq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
