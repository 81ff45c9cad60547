//! Command-line driver. Every command renders its output to a string so the
//! binary and the tests share one code path.

use crate::ast::*;
use crate::ceval::{self, DEFAULT_FUEL};
use crate::denote::{self, DEFAULT_CUTOFF};
use crate::diag::{Diagnostic, E_EVAL};
use crate::parser::{self, pretty_iso_type, pretty_scalar, pretty_term, SourceProgram};
use crate::qeval;
use crate::selftest;
use crate::stdlib::{self, ProgramId};
use crate::typeck::{self, Context};
use clap::{Parser, Subcommand};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "revq",
    version,
    about = "Type checker, evaluators and semantics for reversible isos"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and typecheck a program.
    Check { file: PathBuf },
    /// Evaluate `main`, or apply the entry iso to `--arg`.
    Run {
        file: PathBuf,
        #[arg(long)]
        arg: Option<String>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
    },
    /// Apply the inverse of the entry iso to a value.
    Invert {
        file: PathBuf,
        #[arg(long)]
        value: String,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
    },
    /// Matrix of the entry iso of a quantum program.
    Matrix {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Partial-injection table of the entry iso of a classical program.
    Pinj {
        file: PathBuf,
        #[arg(long, default_value_t = 4)]
        bound: usize,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
    },
    /// Print a library program.
    Gen { program: String, args: Vec<String> },
    /// Run the acceptance checks.
    Selftest {
        #[arg(long, default_value_t = selftest::DEFAULT_SEED)]
        seed: u64,
        /// Run a single criterion (1-10).
        #[arg(long)]
        only: Option<u8>,
    },
}

#[derive(Debug)]
pub enum CliError {
    /// Rendered diagnostic; exit code 1.
    Diagnostic(String),
    /// Exit code 1 without a source position.
    Failed(String),
    /// Exit code 2.
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Diagnostic(_) | CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Diagnostic(m) | CliError::Failed(m) | CliError::Usage(m) => m,
        }
    }
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run_args<I, T>(argv: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Output {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Output {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    if let Ok(v) = std::env::var("REVQ_EPS") {
        match v.parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => set_eps(x),
            _ => {
                return Output {
                    code: 2,
                    stdout: String::new(),
                    stderr: format!("REVQ_EPS must be a positive number, got `{v}`\n"),
                }
            }
        }
    }
    match execute(&cli.command) {
        Ok(out) => Output {
            code: 0,
            stdout: out,
            stderr: String::new(),
        },
        Err(CliError::Failed(m)) if matches!(cli.command, Command::Selftest { .. }) => Output {
            code: 1,
            stdout: m,
            stderr: String::new(),
        },
        Err(e) => Output {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("{}\n", e.message()),
        },
    }
}

struct Loaded {
    name: String,
    program: SourceProgram,
}

impl Loaded {
    fn diag(&self, d: Diagnostic) -> CliError {
        CliError::Diagnostic(d.render(&self.name))
    }

    fn entry(&self) -> Result<Iso, CliError> {
        stdlib::entry_iso(&self.program).ok_or_else(|| CliError::Failed(format!("{}: no iso declaration", self.name)))
    }

    fn value(&self, text: &str) -> Result<Term, CliError> {
        let scope = self.program.iso_names();
        let t = parser::parse_term(text, self.program.dialect, &scope)
            .map_err(|d| CliError::Diagnostic(d.render("<arg>")))?;
        Ok(self.program.close_term(&t))
    }
}

fn load(path: &PathBuf) -> Result<Loaded, CliError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {name}: {e}")))?;
    let default = parser::dialect_for_path(&name).unwrap_or(Dialect::Quantum);
    let program = parser::parse_auto(&text, default).map_err(|d| CliError::Diagnostic(d.render(&name)))?;
    let loaded = Loaded { name, program };
    typeck::check_program(&loaded.program).map_err(|d| loaded.diag(d))?;
    Ok(loaded)
}

pub fn execute(cmd: &Command) -> Result<String, CliError> {
    match cmd {
        Command::Check { file } => check(file),
        Command::Run { file, arg, fuel } => run(file, arg.as_deref(), *fuel),
        Command::Invert { file, value, fuel } => invert(file, value, *fuel),
        Command::Matrix { file, cutoff, json } => matrix(file, *cutoff, json.as_ref()),
        Command::Pinj { file, bound, fuel } => pinj(file, *bound, *fuel),
        Command::Gen { program, args } => gen(program, args),
        Command::Selftest { seed, only } => {
            let ids: Vec<u8> = match only {
                Some(k) if (1..=10).contains(k) => vec![*k],
                Some(k) => return Err(CliError::Usage(format!("no criterion {k}"))),
                None => (1..=10).collect(),
            };
            let mut out = String::new();
            let mut ok = true;
            for id in ids {
                let r = selftest::run_criterion(id, *seed);
                ok &= r.passed;
                writeln!(out, "{r}").unwrap();
            }
            if ok {
                Ok(out)
            } else {
                Err(CliError::Failed(out))
            }
        }
    }
}

fn check(file: &PathBuf) -> Result<String, CliError> {
    let l = load(file)?;
    let info = typeck::check_program(&l.program).map_err(|d| l.diag(d))?;
    let mut out = String::new();
    for d in &l.program.decls {
        match &d.kind {
            parser::DeclKind::Iso { .. } => {
                let t = typeck::name_metas(&info.isos[&d.name]);
                writeln!(out, "iso {} : {}", d.name, pretty_iso_type(&t)).unwrap();
            }
            parser::DeclKind::Val { .. } => {
                writeln!(
                    out,
                    "val {} : {}",
                    d.name,
                    parser::pretty_type(&typeck::default_metas(&info.vals[&d.name]))
                )
                .unwrap();
            }
            parser::DeclKind::Main { .. } => {
                let t = info.main.as_ref().map(typeck::default_metas).unwrap_or(Type::Unit);
                writeln!(out, "main : {}", parser::pretty_type(&t)).unwrap();
            }
        }
    }
    writeln!(out, "ok").unwrap();
    Ok(out)
}

fn main_term(l: &Loaded) -> Result<Term, CliError> {
    match l.program.main().map(|d| &d.kind) {
        Some(parser::DeclKind::Main { term, .. }) => Ok(l.program.close_term(term)),
        _ => Err(CliError::Failed(format!(
            "{}: no `main` declaration and no --arg",
            l.name
        ))),
    }
}

fn typed_application(l: &Loaded, w: Iso, arg: &str) -> Result<Term, CliError> {
    let t = app(w, l.value(arg)?);
    typeck::typecheck_term(&Context::new(), &t, l.program.dialect)
        .map_err(|d| CliError::Diagnostic(d.render("<arg>")))?;
    Ok(t)
}

fn eval_to_string(l: &Loaded, t: &Term, fuel: usize) -> Result<String, CliError> {
    match l.program.dialect {
        Dialect::Quantum => qeval::normalize(t)
            .map(|v| format!("{v}\n"))
            .map_err(|e| CliError::Diagnostic(Diagnostic::at_start(E_EVAL, e.to_string()).render(&l.name))),
        Dialect::Classical => Ok(format!("{}\n", ceval::eval(t, fuel))),
    }
}

fn run(file: &PathBuf, arg: Option<&str>, fuel: usize) -> Result<String, CliError> {
    let l = load(file)?;
    let t = match arg {
        Some(a) => typed_application(&l, l.entry()?, a)?,
        None => main_term(&l)?,
    };
    eval_to_string(&l, &t, fuel)
}

fn invert(file: &PathBuf, value: &str, fuel: usize) -> Result<String, CliError> {
    let l = load(file)?;
    let w = l.entry()?;
    match l.program.dialect {
        Dialect::Quantum => {
            typed_application(&l, Iso::Inverse(Box::new(w.clone())), value)?;
            let v = l.value(value)?;
            qeval::apply_inverse(&w, &v)
                .map(|v| format!("{v}\n"))
                .map_err(|e| CliError::Diagnostic(Diagnostic::at_start(E_EVAL, e.to_string()).render(&l.name)))
        }
        Dialect::Classical => {
            let t = typed_application(&l, Iso::Inverse(Box::new(w)), value)?;
            eval_to_string(&l, &t, fuel)
        }
    }
}

/// Residuals at floating-point round-off level print as zero.
fn shown_residual(r: f64) -> f64 {
    if r < 64.0 * f64::EPSILON {
        0.0
    } else {
        r
    }
}

fn matrix(file: &PathBuf, cutoff: usize, json: Option<&PathBuf>) -> Result<String, CliError> {
    let l = load(file)?;
    if l.program.dialect != Dialect::Quantum {
        return Err(CliError::Failed(format!(
            "{}: matrices are defined for quantum programs; try `pinj`",
            l.name
        )));
    }
    let w = l.entry()?;
    let (m, ty) = denote::sem_iso_typed(&w, None, cutoff).map_err(|e| denote_error(&l, e))?;
    let mut out = String::new();
    writeln!(out, "type: {}", pretty_iso_type(&typeck::default_iso_metas(&ty))).unwrap();
    writeln!(out, "dimension: {} x {}", m.rows(), m.cols()).unwrap();
    if m.rows() <= 16 && m.cols() <= 16 {
        for r in 0..m.rows() {
            let row: Vec<String> = (0..m.cols()).map(|c| pretty_entry(m.get(r, c))).collect();
            writeln!(out, "  [{}]", row.join(", ")).unwrap();
        }
    } else {
        writeln!(out, "nonzero entries: {}", m.entries().len()).unwrap();
    }
    let residual = if m.rows() == m.cols() {
        denote::unitary_residual(&m)
    } else {
        denote::isometry_residual(&m)
    };
    let verdict = if residual < eps() { "yes" } else { "no" };
    let kind = if m.rows() == m.cols() { "unitary" } else { "isometry" };
    writeln!(out, "{kind}: {verdict} (residual {:.1e})", shown_residual(residual)).unwrap();
    if let Some(path) = json {
        let text = serde_json::to_string(&m.to_json()).expect("json");
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(out)
}

fn pretty_entry(a: C64) -> String {
    if is_zero(a) {
        "0".into()
    } else {
        pretty_scalar(a)
            .trim_start_matches('(')
            .trim_end_matches(')')
            .to_string()
    }
}

fn denote_error(l: &Loaded, e: denote::DenoteError) -> CliError {
    match e {
        denote::DenoteError::Type(d) => l.diag(d),
        denote::DenoteError::Cutoff(m) => {
            CliError::Diagnostic(Diagnostic::at_start(crate::diag::E_CUTOFF, m).render(&l.name))
        }
        other => CliError::Diagnostic(Diagnostic::at_start(E_EVAL, other.to_string()).render(&l.name)),
    }
}

fn pinj(file: &PathBuf, bound: usize, fuel: usize) -> Result<String, CliError> {
    let l = load(file)?;
    if l.program.dialect != Dialect::Classical {
        return Err(CliError::Failed(format!(
            "{}: tables are defined for classical programs; try `matrix`",
            l.name
        )));
    }
    let w = l.entry()?;
    let table = denote::sem_pinj(&w, bound, fuel).map_err(|e| denote_error(&l, e))?;
    let mut out = String::new();
    writeln!(out, "type: {}", pretty_iso_type(&table.ty)).unwrap();
    out.push_str(&table.render());
    writeln!(
        out,
        "defined on {} of {} inputs; injective: yes",
        table.points.len(),
        table.domain.len()
    )
    .unwrap();
    Ok(out)
}

fn gen(program: &str, args: &[String]) -> Result<String, CliError> {
    let id = ProgramId::from_args(program, args).map_err(|e| CliError::Usage(e.to_string()))?;
    let text = stdlib::generate_source(&id).map_err(|e| CliError::Usage(e.to_string()))?;
    stdlib::generate(&id).map_err(|e| CliError::Failed(e.to_string()))?;
    Ok(text)
}

/// Prints a closed value, with numerals and lists in sugared form.
pub fn show(t: &Term) -> String {
    pretty_term(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tmp(name: &str, text: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("revq-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(text.as_bytes()).unwrap();
        p
    }

    fn go(args: &[&str]) -> Output {
        let mut v = vec!["revq"];
        v.extend_from_slice(args);
        run_args(v)
    }

    #[test]
    fn run_hadamard() {
        let p = tmp("had.qrev", &stdlib::generate_source(&ProgramId::Hadamard).unwrap());
        let out = go(&["run", p.to_str().unwrap(), "--arg", "inl *"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        assert_eq!(out.stdout, "1/sqrt2 * inl * + 1/sqrt2 * inr *\n");
    }

    #[test]
    fn matrix_report() {
        let p = tmp("had2.qrev", &stdlib::generate_source(&ProgramId::Hadamard).unwrap());
        let j = p.with_extension("json");
        let out = go(&["matrix", p.to_str().unwrap(), "--json", j.to_str().unwrap()]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        assert!(
            out.stdout.ends_with("unitary: yes (residual 0.0e0)\n"),
            "{}",
            out.stdout
        );
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(j).unwrap()).unwrap();
        assert_eq!(v["cols"], 2);
    }

    #[test]
    fn run_loop_out_of_fuel() {
        let p = tmp(
            "loop.rev",
            "iso loop : I + I <-> I + I = fix f. {| x <-> let y = f x in y };\nmain = loop (inl *);\n",
        );
        let out = go(&["run", p.to_str().unwrap(), "--fuel", "50"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        assert_eq!(out.stdout, "out-of-fuel after 50 steps\n");
    }

    #[test]
    fn diagnostics_exit_one() {
        let p = tmp("bad.qrev", "main = 1/sqrt2 * inl * + 1/sqrt2 * inl *;\n");
        let out = go(&["check", p.to_str().unwrap()]);
        assert_eq!(out.code, 1);
        assert!(out.stderr.contains("E105"), "{}", out.stderr);
        assert!(out.stderr.starts_with(p.to_str().unwrap()));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(go(&["frobnicate"]).code, 2);
        assert_eq!(go(&["gen", "nope"]).code, 2);
        assert_eq!(go(&["check", "/nonexistent/file.rev"]).code, 2);
    }

    #[test]
    fn gen_and_pinj() {
        let out = go(&["gen", "not"]);
        assert_eq!(out.code, 0);
        let p = tmp("swap.rev", "iso sw = {| inl * <-> inr * | inr * <-> inl * };\n");
        let out = go(&["pinj", p.to_str().unwrap()]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        assert!(out.stdout.contains("inl * -> inr *"), "{}", out.stdout);
    }

    #[test]
    fn invert_quantum() {
        let p = tmp("had3.qrev", &stdlib::generate_source(&ProgramId::Hadamard).unwrap());
        let out = go(&[
            "invert",
            p.to_str().unwrap(),
            "--value",
            "1/sqrt2 * inl * + 1/sqrt2 * inr *",
        ]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        assert_eq!(out.stdout, "inl *\n");
    }
}
