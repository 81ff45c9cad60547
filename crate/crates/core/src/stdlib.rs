//! Library programs, generators for type-indexed families (duplication,
//! erasure, the flat `Enc` encoding) and the compilation of reversible Turing
//! machines into classical isos with garbage removal.
//!
//! Generators emit concrete syntax. The entry iso of a generated program is
//! its last declaration.

use crate::ast::*;
use crate::ceval::{self, Outcome};
use crate::diag::Diagnostic;
use crate::parser::{self, pretty_iso, pretty_term, pretty_type, SourceProgram};
use crate::typeck::{self, Context};
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StdlibError {
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("invalid machine: {0}")]
    Machine(String),
    #[error("generated program rejected: {0}")]
    Rejected(Diagnostic),
}

// ---- reversible Turing machines ----

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    /// Read the first symbol, write the second.
    Sym(usize, usize),
    /// Head moves one cell to the left.
    Left,
    Stay,
    /// Head moves one cell to the right.
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub action: Action,
    pub to: usize,
}

/// A machine over states `0..states.len()` and symbols `0..alphabet.len()`;
/// symbol 0 is the blank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RtmSpec {
    pub name: String,
    pub states: Vec<String>,
    pub alphabet: Vec<char>,
    pub delta: Vec<Transition>,
    pub start: usize,
    pub finish: usize,
}

fn tr(from: usize, action: Action, to: usize) -> Transition {
    Transition { from, action, to }
}

impl RtmSpec {
    /// Unary increment: write a `1` on the blank under the head, step left.
    pub fn increment() -> RtmSpec {
        RtmSpec {
            name: "increment".into(),
            states: vec!["qs".into(), "q1".into(), "qf".into()],
            alphabet: vec!['_', '1'],
            delta: vec![tr(0, Action::Sym(0, 1), 1), tr(1, Action::Left, 2)],
            start: 0,
            finish: 2,
        }
    }

    pub fn identity() -> RtmSpec {
        RtmSpec {
            name: "identity".into(),
            states: vec!["qs".into(), "qf".into()],
            alphabet: vec!['_', '1'],
            delta: vec![tr(0, Action::Sym(0, 0), 1)],
            start: 0,
            finish: 1,
        }
    }

    /// Writes `1`s forever while walking right.
    pub fn runaway() -> RtmSpec {
        RtmSpec {
            name: "runaway".into(),
            states: vec!["qs".into(), "q1".into(), "q2".into(), "qf".into()],
            alphabet: vec!['_', '1'],
            delta: vec![
                tr(0, Action::Sym(0, 0), 1),
                tr(1, Action::Right, 2),
                tr(2, Action::Sym(0, 1), 1),
            ],
            start: 0,
            finish: 3,
        }
    }

    pub fn by_name(name: &str) -> Option<RtmSpec> {
        match name {
            "increment" => Some(Self::increment()),
            "identity" => Some(Self::identity()),
            "runaway" => Some(Self::runaway()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), StdlibError> {
        let bad = |m: String| Err(StdlibError::Machine(m));
        let (nq, ns) = (self.states.len(), self.alphabet.len());
        if nq < 2 || ns < 1 {
            return bad("need at least two states and one symbol".into());
        }
        if self.start >= nq || self.finish >= nq || self.start == self.finish {
            return bad("start and final states must be distinct states".into());
        }
        for t in &self.delta {
            if t.from >= nq || t.to >= nq {
                return bad(format!("transition {t:?} names an unknown state"));
            }
            if let Action::Sym(a, b) = t.action {
                if a >= ns || b >= ns {
                    return bad(format!("transition {t:?} names an unknown symbol"));
                }
            }
            if t.to == self.start {
                return bad("a transition enters the start state".into());
            }
            if t.from == self.finish {
                return bad("a transition leaves the final state".into());
            }
        }
        for (i, t1) in self.delta.iter().enumerate() {
            for t2 in &self.delta[i + 1..] {
                let reads = match (t1.action, t2.action) {
                    (Action::Sym(a, b), Action::Sym(c, d)) => Some(((a, b), (c, d))),
                    _ => None,
                };
                if t1.from == t2.from && !matches!(reads, Some(((a, _), (c, _))) if a != c) {
                    return bad(format!("not forward deterministic in state {}", self.states[t1.from]));
                }
                if t1.to == t2.to && !matches!(reads, Some(((_, b), (_, d))) if b != d) {
                    return bad(format!("not backward deterministic in state {}", self.states[t1.to]));
                }
            }
        }
        Ok(())
    }

    /// The machine running backwards from the final state.
    pub fn inverse(&self) -> RtmSpec {
        let delta = self
            .delta
            .iter()
            .map(|t| {
                let action = match t.action {
                    Action::Sym(a, b) => Action::Sym(b, a),
                    Action::Left => Action::Right,
                    Action::Right => Action::Left,
                    Action::Stay => Action::Stay,
                };
                tr(t.to, action, t.from)
            })
            .collect();
        RtmSpec {
            name: format!("{}_inv", self.name),
            states: self.states.clone(),
            alphabet: self.alphabet.clone(),
            delta,
            start: self.finish,
            finish: self.start,
        }
    }

    pub fn symbols_of(&self, s: &str) -> Result<Vec<usize>, StdlibError> {
        s.chars()
            .map(|ch| match self.alphabet.iter().position(|a| *a == ch) {
                Some(0) => Err(StdlibError::Invalid(format!("input contains the blank `{ch}`"))),
                Some(k) => Ok(k),
                None => Err(StdlibError::Invalid(format!("`{ch}` is not a tape symbol"))),
            })
            .collect()
    }

    pub fn string_of(&self, syms: &[usize]) -> String {
        syms.iter().map(|k| self.alphabet[*k]).collect()
    }
}

/// A configuration: state, left tape nearest cell first, scanned symbol,
/// right tape nearest cell first. Missing cells are blank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub state: usize,
    pub left: Vec<usize>,
    pub scanned: usize,
    pub right: Vec<usize>,
}

impl Config {
    pub fn standard(state: usize, input: &[usize]) -> Config {
        Config {
            state,
            left: Vec::new(),
            scanned: 0,
            right: input.to_vec(),
        }
    }

    /// The blank-free word of a standard configuration.
    pub fn standard_word(&self) -> Option<Vec<usize>> {
        if self.scanned != 0 || self.left.iter().any(|s| *s != 0) {
            return None;
        }
        let k = self.right.iter().position(|s| *s == 0).unwrap_or(self.right.len());
        if self.right[k..].iter().any(|s| *s != 0) {
            return None;
        }
        Some(self.right[..k].to_vec())
    }
}

/// One transition step, or `None` when no transition applies.
pub fn rtm_step(m: &RtmSpec, c: &Config) -> Option<Config> {
    let t = m
        .delta
        .iter()
        .find(|t| t.from == c.state && !matches!(t.action, Action::Sym(a, _) if a != c.scanned))?;
    let mut next = c.clone();
    next.state = t.to;
    match t.action {
        Action::Sym(_, b) => next.scanned = b,
        Action::Stay => {}
        Action::Left => {
            next.right.insert(0, c.scanned);
            next.scanned = if next.left.is_empty() { 0 } else { next.left.remove(0) };
        }
        Action::Right => {
            next.left.insert(0, c.scanned);
            next.scanned = if next.right.is_empty() { 0 } else { next.right.remove(0) };
        }
    }
    Some(next)
}

/// Runs the machine from the standard configuration on `input`; the result
/// is the output word when the final state is reached in a standard
/// configuration within `max_steps`.
pub fn rtm_string_semantics(m: &RtmSpec, input: &str, max_steps: usize) -> Option<String> {
    let syms = m.symbols_of(input).ok()?;
    let mut c = Config::standard(m.start, &syms);
    for _ in 0..max_steps {
        if c.state == m.finish {
            return c.standard_word().map(|w| m.string_of(&w));
        }
        c = rtm_step(m, &c)?;
    }
    if c.state == m.finish {
        return c.standard_word().map(|w| m.string_of(&w));
    }
    None
}

fn fin(k: usize, n: usize) -> String {
    if n <= 1 {
        "*".into()
    } else if k == 0 {
        "inl *".into()
    } else {
        let inner = fin(k - 1, n - 1);
        if inner == "*" {
            "inr *".into()
        } else {
            format!("inr ({inner})")
        }
    }
}

fn fin_term(k: usize, n: usize) -> Term {
    if n <= 1 {
        Term::Unit
    } else if k == 0 {
        inl(Term::Unit)
    } else {
        inr(fin_term(k - 1, n - 1))
    }
}

fn fin_index(t: &Term, n: usize) -> Option<usize> {
    match (t, n) {
        (Term::Unit, n) if n <= 1 => Some(0),
        (Term::InL(u), _) if **u == Term::Unit => Some(0),
        (Term::InR(u), n) if n > 1 => fin_index(u, n - 1).map(|k| k + 1),
        _ => None,
    }
}

fn list_items(t: &Term) -> Option<Vec<&Term>> {
    let mut out = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Fold(u) => match &**u {
                Term::InL(_) => return Some(out),
                Term::InR(p) => match &**p {
                    Term::Pair(h, tl) => {
                        out.push(&**h);
                        cur = tl;
                    }
                    _ => return None,
                },
                _ => return None,
            },
            _ => return None,
        }
    }
}

/// `(q, (l, (s, r)))` as a closed value of the configuration type.
pub fn config_term(m: &RtmSpec, c: &Config) -> Term {
    let ns = m.alphabet.len();
    let syms = |v: &[usize]| list_of(v.iter().map(|k| fin_term(*k, ns)).collect());
    tuple(vec![
        fin_term(c.state, m.states.len()),
        syms(&c.left),
        fin_term(c.scanned, ns),
        syms(&c.right),
    ])
}

pub fn decode_config(m: &RtmSpec, t: &Term) -> Option<Config> {
    let ns = m.alphabet.len();
    let Term::Pair(q, rest) = t else { return None };
    let Term::Pair(l, rest) = &**rest else { return None };
    let Term::Pair(s, r) = &**rest else { return None };
    let syms = |v: &Term| -> Option<Vec<usize>> { list_items(v)?.into_iter().map(|x| fin_index(x, ns)).collect() };
    Some(Config {
        state: fin_index(q, m.states.len())?,
        left: syms(l)?,
        scanned: fin_index(s, ns)?,
        right: syms(r)?,
    })
}

pub fn config_type(m: &RtmSpec) -> Type {
    let s = Type::finite(m.alphabet.len());
    Type::tensor(
        Type::finite(m.states.len()),
        Type::tensor(Type::list(s.clone()), Type::tensor(s.clone(), Type::list(s))),
    )
}

// ---- program identifiers ----

#[derive(Clone, Debug, PartialEq)]
pub enum ProgramId {
    Hadamard,
    Swap,
    NotIso,
    MapIso,
    DupAt(Type),
    /// Erasure of a constant, optionally at a given type.
    EraseAt(Term, Option<Type>),
    CantorPairing,
    FloorAt(Type),
    /// One machine step as an iso on configurations.
    RtmIso(RtmSpec),
    /// One machine step that also reports whether to keep iterating.
    RtmIsoB(RtmSpec),
    /// `cleanUp` after iterating the flagged step: configuration plus garbage.
    RtmRun(RtmSpec),
    /// Garbage-free iso between standard configurations.
    RtmExact(RtmSpec),
    GarRemOf(Iso, Iso),
    Growth(usize),
    It,
    RmBlank(usize),
    Rev(usize),
    CleanUp(usize),
}

pub const PROGRAM_NAMES: &[&str] = &[
    "hadamard",
    "swap",
    "not",
    "map",
    "dup",
    "erase",
    "cantor",
    "floor",
    "rtm",
    "rtm-b",
    "rtm-run",
    "rtm-exact",
    "garrem",
    "growth",
    "it",
    "rmblank",
    "rev",
    "cleanup",
];

impl ProgramId {
    /// Parses `NAME [ARGS]` as accepted by the `gen` command.
    pub fn from_args(name: &str, args: &[String]) -> Result<ProgramId, StdlibError> {
        let arg = |i: usize, what: &str| {
            args.get(i)
                .cloned()
                .ok_or_else(|| StdlibError::Invalid(format!("`{name}` expects {what}")))
        };
        let ty = |s: String| {
            parser::parse_type(&s).map_err(|d| StdlibError::Invalid(format!("bad type `{s}`: {}", d.message)))
        };
        let machine = |s: String| {
            RtmSpec::by_name(&s)
                .ok_or_else(|| StdlibError::Invalid(format!("unknown machine `{s}` (increment, identity, runaway)")))
        };
        let symbols = || -> Result<usize, StdlibError> {
            match args.first() {
                None => Ok(2),
                Some(s) => s
                    .parse::<usize>()
                    .ok()
                    .filter(|n| *n >= 1)
                    .ok_or_else(|| StdlibError::Invalid(format!("bad alphabet size `{s}`"))),
            }
        };
        let classical_iso = |s: String| {
            parser::parse_iso(&s, Dialect::Classical, &[])
                .map_err(|d| StdlibError::Invalid(format!("bad iso `{s}`: {}", d.message)))
        };
        Ok(match name {
            "hadamard" => ProgramId::Hadamard,
            "swap" => ProgramId::Swap,
            "not" => ProgramId::NotIso,
            "map" => ProgramId::MapIso,
            "dup" => ProgramId::DupAt(ty(arg(0, "a type")?)?),
            "erase" => {
                let s = arg(0, "a value")?;
                let v = parser::parse_term(&s, Dialect::Classical, &[])
                    .map_err(|d| StdlibError::Invalid(format!("bad value `{s}`: {}", d.message)))?;
                ProgramId::EraseAt(v, args.get(1).cloned().map(ty).transpose()?)
            }
            "cantor" => ProgramId::CantorPairing,
            "floor" => ProgramId::FloorAt(ty(arg(0, "a type")?)?),
            "rtm" => ProgramId::RtmIso(machine(arg(0, "a machine name")?)?),
            "rtm-b" => ProgramId::RtmIsoB(machine(arg(0, "a machine name")?)?),
            "rtm-run" => ProgramId::RtmRun(machine(arg(0, "a machine name")?)?),
            "rtm-exact" => ProgramId::RtmExact(machine(arg(0, "a machine name")?)?),
            "garrem" => ProgramId::GarRemOf(classical_iso(arg(0, "two isos")?)?, classical_iso(arg(1, "two isos")?)?),
            "growth" => ProgramId::Growth(symbols()?),
            "it" => ProgramId::It,
            "rmblank" => ProgramId::RmBlank(symbols()?),
            "rev" => ProgramId::Rev(symbols()?),
            "cleanup" => ProgramId::CleanUp(symbols()?),
            _ => {
                return Err(StdlibError::Invalid(format!(
                    "unknown program `{name}` (one of {})",
                    PROGRAM_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn dialect(&self) -> Dialect {
        match self {
            ProgramId::Hadamard | ProgramId::Swap | ProgramId::NotIso => Dialect::Quantum,
            _ => Dialect::Classical,
        }
    }
}

impl fmt::Display for ProgramId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProgramId::Hadamard => write!(f, "hadamard"),
            ProgramId::Swap => write!(f, "swap"),
            ProgramId::NotIso => write!(f, "not"),
            ProgramId::MapIso => write!(f, "map"),
            ProgramId::DupAt(t) => write!(f, "dup {}", pretty_type(t)),
            ProgramId::EraseAt(v, None) => write!(f, "erase {}", pretty_term(v)),
            ProgramId::EraseAt(v, Some(t)) => write!(f, "erase {} {}", pretty_term(v), pretty_type(t)),
            ProgramId::CantorPairing => write!(f, "cantor"),
            ProgramId::FloorAt(t) => write!(f, "floor {}", pretty_type(t)),
            ProgramId::RtmIso(m) => write!(f, "rtm {}", m.name),
            ProgramId::RtmIsoB(m) => write!(f, "rtm-b {}", m.name),
            ProgramId::RtmRun(m) => write!(f, "rtm-run {}", m.name),
            ProgramId::RtmExact(m) => write!(f, "rtm-exact {}", m.name),
            ProgramId::GarRemOf(..) => write!(f, "garrem"),
            ProgramId::Growth(n) => write!(f, "growth {n}"),
            ProgramId::It => write!(f, "it"),
            ProgramId::RmBlank(n) => write!(f, "rmblank {n}"),
            ProgramId::Rev(n) => write!(f, "rev {n}"),
            ProgramId::CleanUp(n) => write!(f, "cleanup {n}"),
        }
    }
}

// ---- source assembly ----

struct Source {
    dialect: Dialect,
    decls: Vec<(String, String)>,
}

impl Source {
    fn new(dialect: Dialect) -> Source {
        Source {
            dialect,
            decls: Vec::new(),
        }
    }

    fn has(&self, name: &str) -> bool {
        self.decls.iter().any(|(n, _)| n == name)
    }

    fn iso(&mut self, name: &str, ty: Option<String>, body: String) {
        if self.has(name) {
            return;
        }
        let ty = ty.map(|t| format!(" : {t}")).unwrap_or_default();
        self.decls
            .push((name.to_string(), format!("iso {name}{ty} =\n  {body};")));
    }

    fn text(&self) -> String {
        let mut out = format!("dialect {};\n", self.dialect);
        for (_, d) in &self.decls {
            out.push('\n');
            out.push_str(d);
            out.push('\n');
        }
        out
    }
}

/// Multi-line clause set aligned under the opening brace.
fn clause_block(clauses: &[(String, String)], indent: usize) -> String {
    let pad = " ".repeat(indent);
    let mut out = String::new();
    for (i, (l, r)) in clauses.iter().enumerate() {
        if i == 0 {
            out.push_str(&format!("{{| {l} <-> {r}"));
        } else {
            out.push_str(&format!("\n{pad} | {l} <-> {r}"));
        }
    }
    out.push_str(" }");
    out
}

fn cl(l: &str, r: &str) -> (String, String) {
    (l.to_string(), r.to_string())
}

fn iso_ty(a: &Type, b: &Type) -> String {
    format!("{} <-> {}", pretty_type(a), pretty_type(b))
}

fn closed_classical(t: &Type) -> Result<(), StdlibError> {
    if !t.is_closed() || t.has_meta() {
        return Err(StdlibError::Invalid(format!(
            "`{}` is not a closed type",
            pretty_type(t)
        )));
    }
    t.check_dialect(Dialect::Classical)
        .map_err(|m| StdlibError::Invalid(format!("`{}`: {m}", pretty_type(t))))
}

/// The duplication iso at `t`; `env` maps recursive types already entered
/// to the iso variable of their `fix`.
fn dup_expr(t: &Type, env: &mut Vec<(Type, String)>, k: &mut usize) -> Result<String, StdlibError> {
    Ok(match t {
        Type::Unit => "{| * <-> (*, *) }".into(),
        Type::Tensor(a, b) => format!(
            "{{| (x, y) <-> let (x1, x2) = ({}) x in let (y1, y2) = ({}) y in ((x1, y1), (x2, y2)) }}",
            dup_expr(a, env, k)?,
            dup_expr(b, env, k)?
        ),
        Type::Sum(a, b) => format!(
            "{{| inl x <-> let (x1, x2) = ({}) x in (inl x1, inl x2) | inr y <-> let (y1, y2) = ({}) y in (inr y1, inr y2) }}",
            dup_expr(a, env, k)?,
            dup_expr(b, env, k)?
        ),
        Type::Mu(..) => {
            if let Some((_, phi)) = env.iter().find(|(m, _)| m.alpha_eq(t)) {
                return Ok(format!("{{| x <-> let (x1, x2) = {phi} x in (x1, x2) }}"));
            }
            let phi = format!("d{k}");
            *k += 1;
            env.push((t.clone(), phi.clone()));
            let inner = dup_expr(&t.unfold().expect("mu type"), env, k)?;
            env.pop();
            format!("fix {phi}. {{| fold x <-> let (x1, x2) = ({inner}) x in (fold x1, fold x2) }}")
        }
        _ => return Err(StdlibError::Invalid(format!("cannot duplicate at `{}`", pretty_type(t)))),
    })
}

fn add_dup(src: &mut Source, name: &str, t: &Type) -> Result<(), StdlibError> {
    closed_classical(t)?;
    let body = dup_expr(t, &mut Vec::new(), &mut 0)?;
    src.iso(name, Some(iso_ty(t, &Type::tensor(t.clone(), t.clone()))), body);
    Ok(())
}

// Names of the `Enc` constructors.
const TT: &str = "inl (inl *)";
const FF: &str = "inl (inr *)";
const ENC_S: &str = "inr (inl *)";
const D_PLUS: &str = "inr (inr (inl *))";
const D_TIMES: &str = "inr (inr (inr (inl *)))";
const D_MU: &str = "inr (inr (inr (inr (inl *))))";

fn enc_number(n: &str) -> String {
    format!("inr (inr (inr (inr (inr {n}))))")
}

/// `Enc = (I + I) + I + I + I + I + nat`.
pub fn enc_type() -> Type {
    let mut t = Type::nat();
    for _ in 0..4 {
        t = Type::sum(Type::Unit, t);
    }
    Type::sum(Type::qubit(), t)
}

fn floor_expr(t: &Type, env: &mut Vec<(Type, String)>, k: &mut usize) -> Result<String, StdlibError> {
    Ok(match t {
        Type::Unit => format!("{{| * <-> [{ENC_S}] }}"),
        Type::Sum(a, b) => format!(
            "{{| inl x <-> let y = ({}) x in {D_PLUS} :: {FF} :: y | inr x <-> let y = ({}) x in {D_PLUS} :: {TT} :: y }}",
            floor_expr(a, env, k)?,
            floor_expr(b, env, k)?
        ),
        Type::Tensor(a, b) => format!(
            "{{| (x, y) <-> let x2 = ({}) x in let y2 = ({}) y in let (z, n) = append (x2, y2) in {D_TIMES} :: {} :: z }}",
            floor_expr(a, env, k)?,
            floor_expr(b, env, k)?,
            enc_number("n")
        ),
        Type::Mu(..) => {
            if let Some((_, phi)) = env.iter().find(|(m, _)| m.alpha_eq(t)) {
                return Ok(phi.clone());
            }
            let phi = format!("e{k}");
            *k += 1;
            env.push((t.clone(), phi.clone()));
            let inner = floor_expr(&t.unfold().expect("mu type"), env, k)?;
            env.pop();
            format!("fix {phi}. {{| fold x <-> let y = ({inner}) x in {D_MU} :: y }}")
        }
        _ => return Err(StdlibError::Invalid(format!("cannot encode `{}`", pretty_type(t)))),
    })
}

fn add_it(src: &mut Source) {
    let inner = clause_block(
        &[
            cl("(y, inl *)", "let (z, n) = f y in (z, fold inr n)"),
            cl("(y, inr *)", "(y, #0)"),
        ],
        25,
    );
    src.iso(
        "it",
        Some("(A <-> A * (I + I)) -> (A <-> A * nat)".into()),
        format!("\\g. fix f. {{| x <-> let y = g x in\n                 let z = {inner} y in z }}"),
    );
}

/// Blank erasure, `uncons`, symbol duplication, `snoc` and `growth` over an
/// alphabet of `n` symbols.
fn add_tape_support(src: &mut Source, n: usize) -> Result<(), StdlibError> {
    let s = Type::finite(n);
    let l = Type::list(s.clone());
    let blank = fin(0, n);
    src.iso(
        "erase_blank",
        Some(iso_ty(&Type::tensor(l.clone(), s.clone()), &l)),
        format!("{{| (x, {blank}) <-> x }}"),
    );
    src.iso(
        "uncons",
        Some(iso_ty(&l, &Type::tensor(s.clone(), l.clone()))),
        "{| h :: t <-> (h, t) }".into(),
    );
    add_dup(src, "dup_sym", &s)?;
    let ls = Type::tensor(l.clone(), s.clone());
    src.iso(
        "snoc",
        Some(iso_ty(&ls, &ls)),
        format!(
            "fix s. {}",
            clause_block(
                &[
                    cl("([], x)", "let (x1, x2) = dup_sym x in ([x1], x2)"),
                    cl(
                        "(h :: t, x)",
                        "let (t1, x1) = s (t, x) in let (h2, t2) = uncons t1 in (h :: h2 :: t2, x1)"
                    ),
                ],
                9,
            )
        ),
    );
    src.iso(
        "growth",
        Some(iso_ty(&Type::tensor(l.clone(), l.clone()), &Type::tensor(l.clone(), l))),
        "{| (l, r) <-> let lb = (inv erase_blank) l in let rb = (inv erase_blank) r in\n\
         \x20              let (l1, b1) = snoc lb in let (r1, b2) = snoc rb in\n\
         \x20              let l2 = erase_blank (l1, b1) in let r2 = erase_blank (r1, b2) in (l2, r2) }"
            .into(),
    );
    Ok(())
}

fn add_rmblank(src: &mut Source, n: usize) {
    let l = Type::list(Type::finite(n));
    let mut cs = vec![
        cl("[]", "([], #0)"),
        (
            format!("{} :: t", fin(0, n)),
            "let (t1, k) = r t in (t1, fold inr k)".to_string(),
        ),
    ];
    for a in 1..n {
        let sym = fin(a, n);
        cs.push((format!("{sym} :: t"), format!("({sym} :: t, #0)")));
    }
    src.iso(
        "rmblank",
        Some(iso_ty(&l, &Type::tensor(l.clone(), Type::nat()))),
        format!("fix r. {}", clause_block(&cs, 9)),
    );
}

fn add_rev(src: &mut Source, n: usize) -> Result<(), StdlibError> {
    let s = Type::finite(n);
    let l = Type::list(s.clone());
    let ll = Type::tensor(l.clone(), l.clone());
    if !src.has("uncons") {
        src.iso(
            "uncons",
            Some(iso_ty(&l, &Type::tensor(s.clone(), l.clone()))),
            "{| h :: t <-> (h, t) }".into(),
        );
    }
    add_dup(src, "dup_sym", &s)?;
    src.iso("erase_nil", Some(iso_ty(&ll, &l)), "{| (x, []) <-> x }".into());
    src.iso(
        "rev_aux",
        Some(iso_ty(&ll, &ll)),
        format!(
            "fix ra. {}",
            clause_block(
                &[
                    cl("([], y)", "([], y)"),
                    cl(
                        "(h :: t, y)",
                        "let (h1, h2) = dup_sym h in let y2 = (inv uncons) (h2, y) in\n\
                         \x20                         let (t1, t2) = ra (t, y2) in (h1 :: t1, t2)",
                    ),
                ],
                10,
            )
        ),
    );
    src.iso(
        "rev",
        Some(iso_ty(&l, &ll)),
        "{| x <-> let xe = (inv erase_nil) x in let (t1, t2) = rev_aux xe in (t1, t2) }".into(),
    );
    Ok(())
}

fn add_cleanup(src: &mut Source, n: usize) -> Result<(), StdlibError> {
    add_rmblank(src, n);
    add_rev(src, n)?;
    let s = Type::finite(n);
    let l = Type::list(s.clone());
    let conf = Type::tensor(
        Type::Var("Q".into()),
        Type::tensor(l.clone(), Type::tensor(s, l.clone())),
    );
    let garbage = [Type::nat(), Type::nat(), Type::nat(), l.clone()]
        .into_iter()
        .rev()
        .fold(l, |acc, t| Type::tensor(t, acc));
    src.iso(
        "cleanup",
        Some(iso_ty(
            &Type::tensor(conf.clone(), Type::nat()),
            &Type::tensor(conf, garbage),
        )),
        "{| ((x, (l, (y, r))), n) <->\n\
         \x20     let (l1, n1) = rmblank l in let (r0, r1) = rev r in\n\
         \x20     let (r2, n2) = rmblank r1 in let (r3, r4) = rev r2 in\n\
         \x20     ((x, (l1, (y, r4))), (n, (n1, (n2, (r0, r3))))) }"
            .into(),
    );
    Ok(())
}

/// One clause per transition. With `flag`, the output carries `inl *` to keep
/// iterating and `inr *` once the final state is entered.
fn add_step(src: &mut Source, name: &str, m: &RtmSpec, flag: bool) -> Result<(), StdlibError> {
    m.validate()?;
    let (nq, ns) = (m.states.len(), m.alphabet.len());
    let mut cs = Vec::new();
    for t in &m.delta {
        let (q, q2) = (fin(t.from, nq), fin(t.to, nq));
        let (lhs, out) = match t.action {
            Action::Sym(a, b) => (
                format!("({q}, (x1, ({}, y1)))", fin(a, ns)),
                format!("({q2}, (l, ({}, r)))", fin(b, ns)),
            ),
            Action::Right => (
                format!("({q}, (x1, (z, y :: y1)))"),
                format!("({q2}, (z :: l, (y, r)))"),
            ),
            Action::Left => (
                format!("({q}, (x :: x1, (z, y1)))"),
                format!("({q2}, (l, (x, z :: r)))"),
            ),
            Action::Stay => (format!("({q}, (x1, (z, y1)))"), format!("({q2}, (l, (z, r)))")),
        };
        let out = if flag {
            let f = if t.to == m.finish { "inr *" } else { "inl *" };
            format!("({out}, {f})")
        } else {
            out
        };
        cs.push((lhs, format!("let (l, r) = growth (x1, y1) in {out}")));
    }
    let conf = config_type(m);
    let ty = if flag {
        iso_ty(&conf, &Type::tensor(conf.clone(), Type::qubit()))
    } else {
        iso_ty(&conf, &conf)
    };
    src.iso(name, Some(ty), clause_block(&cs, 2));
    Ok(())
}

fn add_run(src: &mut Source, name: &str, step: &str, m: &RtmSpec) -> Result<(), StdlibError> {
    add_tape_support(src, m.alphabet.len())?;
    add_step(src, step, m, true)?;
    add_it(src);
    add_cleanup(src, m.alphabet.len())?;
    src.iso(name, None, format!("cleanup <<< (it {step})"));
    Ok(())
}

fn add_garrem(src: &mut Source, fwd: &str, bwd: &str, dup_a: &str, dup_b: &str) {
    src.iso(
        "garrem",
        None,
        format!(
            "{{| x1 <-> let (x2, y) = {fwd} x1 in let (x3, z) = {dup_b} x2 in\n\
             \x20           let x4 = (inv {fwd}) (x3, y) in let (z2, y2) = {bwd} z in\n\
             \x20           let z3 = (inv {dup_a}) (z2, x4) in let z4 = (inv {bwd}) (z3, y2) in z4 }}"
        ),
    );
}

/// Concrete syntax of a library program.
pub fn generate_source(id: &ProgramId) -> Result<String, StdlibError> {
    let mut src = Source::new(id.dialect());
    match id {
        ProgramId::Hadamard => src.iso(
            "had",
            Some("I + I <-> I + I".into()),
            clause_block(
                &[
                    cl("inl *", "1/sqrt2 * inl * + 1/sqrt2 * inr *"),
                    cl("inr *", "1/sqrt2 * inl * - 1/sqrt2 * inr *"),
                ],
                2,
            ),
        ),
        ProgramId::Swap => src.iso(
            "swap",
            Some("(I + I) * (I + I) <-> (I + I) * (I + I)".into()),
            "{| (x, y) <-> (y, x) }".into(),
        ),
        ProgramId::NotIso => src.iso(
            "not",
            Some("I + I <-> I + I".into()),
            clause_block(&[cl("inl *", "inr *"), cl("inr *", "inl *")], 2),
        ),
        ProgramId::MapIso => src.iso(
            "map",
            Some("(A <-> B) -> ([A] <-> [B])".into()),
            format!(
                "\\g. fix f. {}",
                clause_block(
                    &[cl("[]", "[]"), cl("h :: t", "let h2 = g h in let t2 = f t in h2 :: t2")],
                    12,
                )
            ),
        ),
        ProgramId::DupAt(t) => add_dup(&mut src, "dup", t)?,
        ProgramId::EraseAt(v, at) => {
            if !v.is_closed_value() {
                return Err(StdlibError::Invalid(format!(
                    "`{}` is not a closed value",
                    pretty_term(v)
                )));
            }
            let sig = at
                .clone()
                .or_else(|| typeck::typecheck_term(&Context::new(), v, Dialect::Classical).ok())
                .filter(|t| !t.has_meta())
                .map(|t| format!("'a * {} <-> 'a", pretty_type(&t)));
            src.iso("erase", sig, format!("{{| (x, {}) <-> x }}", pretty_term(v)));
        }
        ProgramId::CantorPairing => {
            src.iso(
                "cantor_step",
                Some("nat * nat <-> (nat * nat) + I".into()),
                clause_block(
                    &[
                        cl("(fold inr i, j)", "inl (i, fold inr j)"),
                        cl("(#0, fold inr j)", "inl (j, #0)"),
                        cl("(#0, #0)", "inr *"),
                    ],
                    2,
                ),
            );
            let inner = clause_block(&[cl("inl w", "let v = f w in fold inr v"), cl("inr *", "#0")], 25);
            src.iso(
                "cantor",
                Some("nat * nat <-> nat".into()),
                format!("fix f. {{| x <-> let y = cantor_step x in\n                 let z = {inner} y in z }}"),
            );
        }
        ProgramId::FloorAt(t) => {
            closed_classical(t)?;
            let enc = Type::list(enc_type());
            src.iso(
                "append",
                Some(iso_ty(
                    &Type::tensor(enc.clone(), enc.clone()),
                    &Type::tensor(enc.clone(), Type::nat()),
                )),
                format!(
                    "fix f. {}",
                    clause_block(
                        &[
                            cl("([], x)", "(x, #0)"),
                            cl("(h :: t, x)", "let (y, n) = f (t, x) in (h :: y, fold inr n)"),
                        ],
                        9,
                    )
                ),
            );
            let body = floor_expr(t, &mut Vec::new(), &mut 0)?;
            src.iso("floor", Some(iso_ty(t, &enc)), body);
        }
        ProgramId::RtmIso(m) | ProgramId::RtmIsoB(m) => {
            add_tape_support(&mut src, m.alphabet.len())?;
            add_step(&mut src, "step", m, matches!(id, ProgramId::RtmIsoB(_)))?;
        }
        ProgramId::RtmRun(m) => add_run(&mut src, "run", "step", m)?,
        ProgramId::RtmExact(m) => {
            add_run(&mut src, "run", "step", m)?;
            add_step(&mut src, "step_inv", &m.inverse(), true)?;
            src.iso("run_inv", None, "cleanup <<< (it step_inv)".into());
            add_dup(&mut src, "dup_conf", &config_type(m))?;
            add_garrem(&mut src, "run", "run_inv", "dup_conf", "dup_conf");
        }
        ProgramId::GarRemOf(w, w2) => {
            let (a, b) = garrem_types(w, w2)?;
            src.iso("fwd", None, pretty_iso(w));
            src.iso("bwd", None, pretty_iso(w2));
            add_dup(&mut src, "dup_a", &a)?;
            add_dup(&mut src, "dup_b", &b)?;
            add_garrem(&mut src, "fwd", "bwd", "dup_a", "dup_b");
        }
        ProgramId::Growth(n) => add_tape_support(&mut src, *n)?,
        ProgramId::It => add_it(&mut src),
        ProgramId::RmBlank(n) => add_rmblank(&mut src, *n),
        ProgramId::Rev(n) => add_rev(&mut src, *n)?,
        ProgramId::CleanUp(n) => add_cleanup(&mut src, *n)?,
    }
    Ok(src.text())
}

/// `A` and `B` for `w : A <-> B * C` and `w2 : B <-> A * C'`.
fn garrem_types(w: &Iso, w2: &Iso) -> Result<(Type, Type), StdlibError> {
    let ground = |u: &Iso| -> Result<(Type, Type, Type), StdlibError> {
        let t = typeck::typecheck_iso(&Context::new(), u, Dialect::Classical).map_err(StdlibError::Rejected)?;
        match typeck::default_iso_metas(&t) {
            IsoType::Ground(a, Type::Tensor(b, c)) => Ok((a, *b, *c)),
            other => Err(StdlibError::Invalid(format!(
                "expected an iso of type A <-> B * C, found {}",
                parser::pretty_iso_type(&other)
            ))),
        }
    };
    let (a, b, _) = ground(w)?;
    let (b2, a2, _) = ground(w2)?;
    if !a.alpha_eq(&a2) || !b.alpha_eq(&b2) {
        return Err(StdlibError::Invalid(format!(
            "the second iso must map {} to {} and garbage",
            pretty_type(&b),
            pretty_type(&a)
        )));
    }
    Ok((a, b))
}

/// Parses and typechecks a library program.
pub fn generate(id: &ProgramId) -> Result<SourceProgram, StdlibError> {
    let text = generate_source(id)?;
    let p = parser::parse(&text, id.dialect()).map_err(StdlibError::Rejected)?;
    typeck::check_program(&p).map_err(StdlibError::Rejected)?;
    Ok(p)
}

/// The entry iso of a program with every declaration inlined.
pub fn entry_iso(p: &SourceProgram) -> Option<Iso> {
    p.closed_iso(&p.entry_iso_name()?)
}

/// Runs the entry iso of a classical program on a value.
pub fn run_entry(p: &SourceProgram, arg: &Term, fuel: usize) -> Option<Outcome> {
    Some(ceval::eval(&app(entry_iso(p)?, arg.clone()), fuel))
}

/// Output word of the garbage-free machine iso on a standard input, if the
/// run ends in a standard configuration of the final state.
pub fn rtm_iso_semantics(m: &RtmSpec, program: &SourceProgram, input: &str, fuel: usize) -> Option<String> {
    let syms = m.symbols_of(input).ok()?;
    let start = config_term(m, &Config::standard(m.start, &syms));
    let out = run_entry(program, &start, fuel)?.value()?.clone();
    let c = decode_config(m, &out)?;
    if c.state != m.finish {
        return None;
    }
    c.standard_word().map(|w| m.string_of(&w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ceval::DEFAULT_FUEL;
    use crate::denote;

    fn classical(s: &str) -> Term {
        parser::parse_term(s, Dialect::Classical, &[]).unwrap()
    }

    fn run(id: &ProgramId, arg: &Term) -> Term {
        let p = generate(id).unwrap();
        run_entry(&p, arg, 200_000).unwrap().value().unwrap().clone()
    }

    #[test]
    fn every_fixed_program_typechecks() {
        for id in [
            ProgramId::Hadamard,
            ProgramId::Swap,
            ProgramId::NotIso,
            ProgramId::MapIso,
            ProgramId::CantorPairing,
            ProgramId::It,
            ProgramId::Growth(2),
            ProgramId::Growth(3),
            ProgramId::RmBlank(3),
            ProgramId::Rev(2),
            ProgramId::CleanUp(2),
        ] {
            if let Err(e) = generate(&id) {
                panic!("{id}: {e}\n{}", generate_source(&id).unwrap());
            }
        }
    }

    #[test]
    fn dup_types_and_values() {
        let p = generate(&ProgramId::DupAt(Type::nat())).unwrap();
        let info = typeck::check_program(&p).unwrap();
        let t = typeck::default_iso_metas(&info.isos["dup"]);
        assert!(t.alpha_eq(&IsoType::ground(Type::nat(), Type::tensor(Type::nat(), Type::nat()))));
        assert_eq!(
            run(&ProgramId::DupAt(Type::nat()), &numeral(2)),
            pair(numeral(2), numeral(2))
        );
        let ty = parser::parse_type("[I + I] * (nat + I)").unwrap();
        let v = classical("([inl *, inr *], inl #3)");
        assert_eq!(run(&ProgramId::DupAt(ty), &v), pair(v.clone(), v));
    }

    #[test]
    fn dup_rejects_open_types() {
        assert!(matches!(
            generate(&ProgramId::DupAt(Type::Var("A".into()))),
            Err(StdlibError::Invalid(_))
        ));
    }

    #[test]
    fn erase_and_its_inverse() {
        let p = generate(&ProgramId::EraseAt(classical("inr *"), None)).unwrap();
        let w = entry_iso(&p).unwrap();
        let out = ceval::eval(&app(w.clone(), classical("(#1, inr *)")), 100);
        assert_eq!(out.value(), Some(&numeral(1)));
        assert!(ceval::eval(&app(w.clone(), classical("(#1, inl *)")), 100)
            .value()
            .is_none());
        let back = ceval::eval(&app(Iso::Inverse(Box::new(w)), numeral(1)), 100);
        assert_eq!(back.value(), Some(&classical("(#1, inr *)")));
    }

    #[test]
    fn erase_recursive_constant_needs_its_type() {
        let id = ProgramId::from_args("erase", &["#1".into(), "nat".into()]).unwrap();
        let w = entry_iso(&generate(&id).unwrap()).unwrap();
        let out = ceval::eval(&app(w, classical("(inl *, #1)")), 100);
        assert_eq!(out.value(), Some(&classical("inl *")));
        assert!(matches!(
            generate(&ProgramId::EraseAt(numeral(1), None)),
            Err(StdlibError::Rejected(_))
        ));
    }

    #[test]
    fn map_successor() {
        let p = parser::parse(
            &format!(
                "{}iso succ : nat <-> nat = {{| n <-> fold inr n }};\nmain = map succ [#0, #1];",
                generate_source(&ProgramId::MapIso).unwrap()
            ),
            Dialect::Classical,
        )
        .unwrap();
        typeck::check_program(&p).unwrap();
        let parser::DeclKind::Main { term, .. } = &p.main().unwrap().kind else {
            unreachable!()
        };
        let out = ceval::eval(&p.close_term(term), DEFAULT_FUEL);
        assert_eq!(out.value(), Some(&list_of(vec![numeral(1), numeral(2)])));
    }

    fn cantor_oracle(i: usize, j: usize) -> usize {
        (i + j) * (i + j + 1) / 2 + i
    }

    #[test]
    fn cantor_small_values() {
        let p = generate(&ProgramId::CantorPairing).unwrap();
        for (i, j) in [(0, 0), (1, 1), (0, 2), (2, 0), (3, 1)] {
            let out = run_entry(&p, &pair(numeral(i), numeral(j)), DEFAULT_FUEL).unwrap();
            assert_eq!(out.value(), Some(&numeral(cantor_oracle(i, j))), "({i}, {j})");
        }
    }

    #[test]
    fn floor_encodes_injectively() {
        let ty = parser::parse_type("(I + I) * nat").unwrap();
        let p = generate(&ProgramId::FloorAt(ty)).unwrap();
        let w = entry_iso(&p).unwrap();
        let table = denote::sem_pinj(&w, 3, DEFAULT_FUEL).unwrap();
        assert!(table.undefined.is_empty());
        assert!(table.is_injective());
        let out = ceval::eval(&app(w, classical("(inl *, #0)")), DEFAULT_FUEL);
        let enc = |s: &str| classical(s);
        let expected = list_of(vec![
            enc(D_TIMES),
            enc(&enc_number("#3")),
            enc(D_PLUS),
            enc(FF),
            enc(ENC_S),
            enc(D_MU),
            enc(D_PLUS),
            enc(FF),
            enc(ENC_S),
        ]);
        assert_eq!(out.value(), Some(&expected));
    }

    #[test]
    fn growth_appends_blanks() {
        let p = generate(&ProgramId::Growth(2)).unwrap();
        let out = run_entry(&p, &classical("([inr *], [])"), DEFAULT_FUEL).unwrap();
        assert_eq!(out.value(), Some(&classical("([inr *, inl *], [inl *])")));
    }

    #[test]
    fn rmblank_and_rev() {
        let p = generate(&ProgramId::RmBlank(2)).unwrap();
        let out = run_entry(&p, &classical("[inl *, inl *, inr *, inl *]"), DEFAULT_FUEL).unwrap();
        assert_eq!(out.value(), Some(&classical("([inr *, inl *], #2)")));
        let p = generate(&ProgramId::Rev(2)).unwrap();
        let out = run_entry(&p, &classical("[inl *, inr *, inr *]"), DEFAULT_FUEL).unwrap();
        assert_eq!(
            out.value(),
            Some(&classical("([inl *, inr *, inr *], [inr *, inr *, inl *])"))
        );
    }

    #[test]
    fn it_counts_iterations() {
        let src = format!(
            "{}iso countdown : nat <-> nat * (I + I) = {{| fold inr n <-> (n, inl *) | #0 <-> (#0, inr *) }};\n\
             main = it countdown #3;",
            generate_source(&ProgramId::It).unwrap()
        );
        let p = parser::parse(&src, Dialect::Classical).unwrap();
        typeck::check_program(&p).unwrap();
        let parser::DeclKind::Main { term, .. } = &p.main().unwrap().kind else {
            unreachable!()
        };
        let out = ceval::eval(&p.close_term(term), DEFAULT_FUEL);
        assert_eq!(out.value(), Some(&pair(numeral(0), numeral(3))));
    }

    #[test]
    fn machines_are_reversible() {
        for m in [RtmSpec::increment(), RtmSpec::identity(), RtmSpec::runaway()] {
            m.validate().unwrap();
            m.inverse().validate().unwrap();
        }
        let mut bad = RtmSpec::increment();
        bad.delta.push(tr(0, Action::Sym(1, 1), 1));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn string_semantics_examples() {
        let inc = RtmSpec::increment();
        assert_eq!(rtm_string_semantics(&inc, "111", 100).as_deref(), Some("1111"));
        assert_eq!(rtm_string_semantics(&RtmSpec::identity(), "", 100).as_deref(), Some(""));
        assert_eq!(rtm_string_semantics(&RtmSpec::runaway(), "1", 500), None);
        let inv = inc.inverse();
        assert_eq!(rtm_string_semantics(&inv, "1111", 100).as_deref(), Some("111"));
    }

    #[test]
    fn single_step_iso_matches_simulator() {
        let m = RtmSpec::increment();
        let p = generate(&ProgramId::RtmIso(m.clone())).unwrap();
        let c = Config::standard(m.start, &[1, 1]);
        let out = run_entry(&p, &config_term(&m, &c), DEFAULT_FUEL).unwrap();
        let got = decode_config(&m, out.value().unwrap()).unwrap();
        let mut expected = rtm_step(&m, &c).unwrap();
        expected.left.push(0);
        expected.right.push(0);
        assert_eq!(got, expected);
    }

    #[test]
    fn run_leaves_clean_configuration() {
        let m = RtmSpec::increment();
        let p = generate(&ProgramId::RtmRun(m.clone())).unwrap();
        let start = config_term(&m, &Config::standard(m.start, &[1, 1]));
        let out = run_entry(&p, &start, 100_000).unwrap();
        let Term::Pair(conf, garbage) = out.value().unwrap() else {
            panic!()
        };
        assert_eq!(decode_config(&m, conf), Some(Config::standard(m.finish, &[1, 1, 1])));
        let Term::Pair(steps, _) = &**garbage else { panic!() };
        assert_eq!(**steps, numeral(1));
    }

    #[test]
    fn exact_iso_increments() {
        let m = RtmSpec::increment();
        let p = generate(&ProgramId::RtmExact(m.clone())).unwrap();
        for input in ["", "1", "11"] {
            assert_eq!(
                rtm_iso_semantics(&m, &p, input, 1_000_000),
                rtm_string_semantics(&m, input, 100),
                "input {input:?}"
            );
        }
    }

    #[test]
    fn garrem_of_explicit_isos() {
        let w = parser::parse_iso(
            "{| x <-> let (a, b) = {| fold inr n <-> (n, inl *) | #0 <-> (#0, inr *) } x in (fold inr a, b) }",
            Dialect::Classical,
            &[],
        );
        assert!(w.is_ok());
        let fwd = parser::parse_iso(
            "{| inl * <-> (inr *, *) | inr * <-> (inl *, *) }",
            Dialect::Classical,
            &[],
        )
        .unwrap();
        let bwd = parser::parse_iso(
            "{| inr * <-> (inl *, *) | inl * <-> (inr *, *) }",
            Dialect::Classical,
            &[],
        )
        .unwrap();
        let p = generate(&ProgramId::GarRemOf(fwd, bwd)).unwrap();
        assert_eq!(
            run_entry(&p, &classical("inl *"), DEFAULT_FUEL).unwrap().value(),
            Some(&classical("inr *"))
        );
    }

    #[test]
    fn program_ids_round_trip_through_args() {
        let id = ProgramId::from_args("dup", &["nat * I".to_string()]).unwrap();
        assert_eq!(id, ProgramId::DupAt(parser::parse_type("nat * I").unwrap()));
        assert_eq!(id.to_string(), "dup nat * I");
        assert!(ProgramId::from_args("nope", &[]).is_err());
    }
}
