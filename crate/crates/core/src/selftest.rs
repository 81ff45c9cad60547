//! Seeded acceptance checks. Each criterion is a pure function of the seed and
//! reports pass/fail together with its running time against a limit.

use crate::ast::*;
use crate::ceval::{self, Outcome};
use crate::denote::{self, Matrix};
use crate::diag;
use crate::ortho::{self, OdKind};
use crate::parser;
use crate::qeval;
use crate::stdlib::{self, ProgramId, RtmSpec};
use crate::typeck::{self, Context};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::time::{Duration, Instant};

pub const DEFAULT_SEED: u64 = 20_231_101;

const TOL: f64 = 1e-8;
const CUTOFF: usize = 16;

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub limit: Duration,
    run: fn(&mut ChaCha8Rng) -> Result<String, String>,
}

pub const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        name: "hadamard",
        limit: Duration::from_secs(1),
        run: hadamard,
    },
    Criterion {
        id: 2,
        name: "isometry",
        limit: Duration::from_secs(30),
        run: isometry,
    },
    Criterion {
        id: 3,
        name: "completeness",
        limit: Duration::from_secs(60),
        run: completeness,
    },
    Criterion {
        id: 4,
        name: "inverse",
        limit: Duration::from_secs(60),
        run: inverse_round_trip,
    },
    Criterion {
        id: 5,
        name: "od-laws",
        limit: Duration::from_secs(30),
        run: od_laws,
    },
    Criterion {
        id: 6,
        name: "determinism",
        limit: Duration::from_secs(30),
        run: determinism,
    },
    Criterion {
        id: 7,
        name: "divergence",
        limit: Duration::from_secs(30),
        run: divergence,
    },
    Criterion {
        id: 8,
        name: "stdlib",
        limit: Duration::from_secs(60),
        run: stdlib_semantics,
    },
    Criterion {
        id: 9,
        name: "rtm",
        limit: Duration::from_secs(120),
        run: rtm_agreement,
    },
    Criterion {
        id: 10,
        name: "negative",
        limit: Duration::from_secs(30),
        run: negative_suite,
    },
];

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Duration,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {:>2} {}: {} ({:.2} s, limit {} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs()
        )
    }
}

pub fn run_criterion(id: u8, seed: u64) -> CriterionResult {
    let c = CRITERIA.iter().find(|c| c.id == id).expect("criterion id in 1..=10");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(id) << 32));
    let start = Instant::now();
    let outcome = (c.run)(&mut rng);
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if passed && elapsed > c.limit {
        passed = false;
        detail = format!("{detail}; over the time limit");
    }
    CriterionResult {
        id,
        name: c.name,
        passed,
        detail,
        elapsed,
        limit: c.limit,
    }
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| run_criterion(c.id, seed)).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- random quantum terms ----

fn qubit() -> Type {
    Type::qubit()
}

pub fn dim(ty: &Type) -> usize {
    match ty {
        Type::Unit => 1,
        Type::Sum(a, b) => dim(a) + dim(b),
        Type::Tensor(a, b) => dim(a) * dim(b),
        _ => panic!("finite type expected"),
    }
}

fn basis(ty: &Type) -> Vec<Term> {
    denote::enumerate_basis(ty, CUTOFF).expect("finite type").elems
}

/// A finite type of dimension between 1 and `cap`.
pub fn rand_type(rng: &mut ChaCha8Rng, cap: usize, depth: usize) -> Type {
    if cap < 2 {
        return Type::Unit;
    }
    if depth == 0 {
        return qubit();
    }
    match rng.gen_range(0..4) {
        0 => qubit(),
        1 | 2 => {
            let a = rand_type(rng, cap - 1, depth - 1);
            let b = rand_type(rng, cap - dim(&a), depth - 1);
            if rng.gen_bool(0.5) {
                Type::sum(a, b)
            } else {
                Type::sum(b, a)
            }
        }
        _ if cap >= 4 => {
            let a = rand_type(rng, cap / 2, depth - 1);
            let b = rand_type(rng, cap / dim(&a), depth - 1);
            Type::tensor(a, b)
        }
        _ => Type::sum(Type::Unit, Type::Unit),
    }
}

fn rand_scalar(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Random unitary `u[row][col]` by Gram-Schmidt on a random complex matrix.
pub fn rand_unitary(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<C64>> {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> = (0..n).map(|_| rand_scalar(rng)).collect();
        for u in &cols {
            let ip: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= ip * y;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    (0..n).map(|r| (0..n).map(|k| cols[k][r]).collect()).collect()
}

fn ann(w: Iso, a: &Type, b: &Type) -> Iso {
    Iso::Ann(Box::new(w), IsoType::ground(a.clone(), b.clone()))
}

fn identity_at(ty: &Type) -> Iso {
    ann(clauses(vec![(var("id_x"), var("id_x"))]), ty, ty)
}

fn combination(coeffs: impl Iterator<Item = C64>, elems: &[Term]) -> Term {
    let parts: Vec<(C64, Term)> = coeffs
        .zip(elems)
        .filter(|(a, _)| !is_zero(*a))
        .map(|(a, e)| (a, e.clone()))
        .collect();
    Term::Sum(parts)
}

/// Clause iso `{| b_i <-> sum_j u_ji b'_j }` between types of equal dimension.
fn unitary_clauses(rng: &mut ChaCha8Rng, a: &Type, b: &Type) -> Iso {
    let lhs = basis(a);
    let rhs = basis(b);
    if lhs.len() == 1 {
        return ann(clauses(vec![(lhs[0].clone(), rhs[0].clone())]), a, b);
    }
    let u = rand_unitary(rng, lhs.len());
    let cs = lhs
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), combination(u.iter().map(|row| row[i]), &rhs)))
        .collect();
    ann(clauses(cs), a, b)
}

/// A random iso `ty <-> ty`.
pub fn rand_iso(rng: &mut ChaCha8Rng, ty: &Type, depth: usize) -> Iso {
    let leaf = depth == 0 || dim(ty) == 1;
    let choice = if leaf { 0 } else { rng.gen_range(0..6) };
    match (choice, ty) {
        (1, Type::Sum(a, b)) => Iso::Sum(
            Box::new(rand_iso(rng, a, depth - 1)),
            Box::new(rand_iso(rng, b, depth - 1)),
        ),
        (2, Type::Tensor(a, b)) => Iso::Tensor(
            Box::new(rand_iso(rng, a, depth - 1)),
            Box::new(rand_iso(rng, b, depth - 1)),
        ),
        (3, Type::Tensor(q, a)) if q.alpha_eq(&qubit()) => Iso::Ctrl(Box::new(rand_iso(rng, a, depth - 1))),
        (4, _) => Iso::Inverse(Box::new(rand_iso(rng, ty, depth - 1))),
        (5, _) => Iso::Compose(
            Box::new(rand_iso(rng, ty, depth - 1)),
            Box::new(rand_iso(rng, ty, depth - 1)),
        ),
        _ => unitary_clauses(rng, ty, ty),
    }
}

fn superposition(rng: &mut ChaCha8Rng, ty: &Type) -> Term {
    let mut elems = basis(ty);
    if elems.len() == 1 {
        return elems.remove(0);
    }
    elems.shuffle(rng);
    let k = rng.gen_range(2..=elems.len().min(4));
    let mut coeffs: Vec<C64> = (0..k).map(|_| rand_scalar(rng)).collect();
    let norm = coeffs.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    coeffs.iter_mut().for_each(|x| *x /= norm);
    combination(coeffs.into_iter(), &elems[..k])
}

/// A random closed term of type `ty`.
pub fn rand_term(rng: &mut ChaCha8Rng, ty: &Type, depth: usize) -> Term {
    let choice = if depth == 0 {
        rng.gen_range(0..2)
    } else {
        rng.gen_range(0..6)
    };
    match choice {
        0 => basis(ty).choose(rng).expect("inhabited").clone(),
        1 => superposition(rng, ty),
        2 => match ty {
            Type::Unit => Term::Unit,
            Type::Sum(a, b) => {
                if rng.gen_bool(0.5) {
                    inl(rand_term(rng, a, depth - 1))
                } else {
                    inr(rand_term(rng, b, depth - 1))
                }
            }
            Type::Tensor(a, b) => pair(rand_term(rng, a, depth - 1), rand_term(rng, b, depth - 1)),
            _ => unreachable!("finite type"),
        },
        3 => app(rand_iso(rng, ty, 1), rand_term(rng, ty, depth - 1)),
        _ => app(rand_iso(rng, ty, 2), rand_term(rng, ty, depth - 1)),
    }
}

fn vector_at(t: &Term, ty: &Type) -> Result<Matrix, String> {
    denote::sem_value_at(t, ty, CUTOFF).map_err(|e| format!("{}: {e}", parser::pretty_term(t)))
}

fn typed_quantum(t: &Term, ty: &Type) -> Result<(), String> {
    typeck::check_term_at(t, ty, Dialect::Quantum)
        .map_err(|d| format!("generated term `{}` rejected: {d}", parser::pretty_term(t)))
}

// ---- criteria ----

fn hadamard(_: &mut ChaCha8Rng) -> Result<String, String> {
    let p = stdlib::generate(&ProgramId::Hadamard).map_err(|e| e.to_string())?;
    let w = stdlib::entry_iso(&p).ok_or("no entry iso")?;
    let out = qeval::apply(&w, &inl(Term::Unit)).map_err(|e| e.to_string())?;
    let shown = out.to_string();
    ensure(shown == "1/sqrt2 * inl * + 1/sqrt2 * inr *", || {
        format!("run printed `{shown}`")
    })?;
    let m = denote::sem_iso(&w, CUTOFF).map_err(|e| e.to_string())?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let expected = Matrix::from_rows(&[vec![real(h), real(h)], vec![real(h), real(-h)]]);
    let diff = m.max_abs_diff(&expected);
    ensure(diff < 1e-9, || {
        format!("matrix differs from [[h, h], [h, -h]] by {diff:e}")
    })?;
    ensure(denote::check_unitary(&m), || "matrix is not unitary".into())?;
    Ok(format!("ket-plus output, matrix error {diff:.1e}, unitary"))
}

fn isometry(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut dims = 0;
    for _ in 0..500 {
        let ty = rand_type(rng, 16, 4);
        let t = rand_term(rng, &ty, 3);
        typed_quantum(&t, &ty)?;
        let m = vector_at(&t, &ty)?;
        dims = dims.max(m.rows());
        let r = denote::isometry_residual(&m);
        ensure(r < TOL, || format!("`{}` has residual {r:e}", parser::pretty_term(&t)))?;
        worst = worst.max(r);
    }
    Ok(format!("500 terms up to dimension {dims}, worst residual {worst:.1e}"))
}

fn completeness(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let (mut equal, mut unequal) = (0, 0);
    for i in 0..300 {
        let ty = rand_type(rng, 8, 3);
        let t1 = rand_term(rng, &ty, 2);
        let t2 = match i % 4 {
            0 => qeval::normalize(&t1).map_err(|e| e.to_string())?.to_term(),
            1 => {
                let w = rand_iso(rng, &ty, 2);
                app(Iso::Inverse(Box::new(w.clone())), app(w, t1.clone()))
            }
            2 => basis(&ty).choose(rng).expect("inhabited").clone(),
            _ => rand_term(rng, &ty, 2),
        };
        let t1 = app(identity_at(&ty), t1);
        let t2 = app(identity_at(&ty), t2);
        let eq = qeval::equal_terms(&t1, &t2).map_err(|e| e.to_string())?;
        let diff = vector_at(&t1, &ty)?.max_abs_diff(&vector_at(&t2, &ty)?);
        ensure(eq == (diff < TOL), || {
            format!(
                "equal_terms says {eq} but matrices differ by {diff:e}: `{}` vs `{}`",
                parser::pretty_term(&t1),
                parser::pretty_term(&t2)
            )
        })?;
        if eq {
            equal += 1;
        } else {
            unequal += 1;
        }
    }
    ensure(equal > 0 && unequal > 0, || {
        format!("degenerate sample: {equal} equal, {unequal} unequal")
    })?;
    Ok(format!(
        "300 pairs ({equal} equal, {unequal} unequal), zero discrepancies"
    ))
}

fn inverse_round_trip(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut worst = 0.0f64;
    for _ in 0..300 {
        let ty = rand_type(rng, 8, 3);
        let w = rand_iso(rng, &ty, 3);
        let v = rand_term(rng, &ty, 1);
        let forward = qeval::apply(&w, &v).map_err(|e| e.to_string())?;
        let back = qeval::apply_inverse(&w, &forward.to_term()).map_err(|e| e.to_string())?;
        let orig = qeval::normalize(&v).map_err(|e| e.to_string())?;
        ensure(back.approx_eq(&orig), || {
            format!("inverse of `{}` gave {back}, expected {orig}", parser::pretty_iso(&w))
        })?;
        let m = denote::sem_iso(&w, CUTOFF).map_err(|e| e.to_string())?;
        let mi = denote::sem_iso(&Iso::Inverse(Box::new(w.clone())), CUTOFF).map_err(|e| e.to_string())?;
        let diff = mi.max_abs_diff(&m.adjoint());
        ensure(diff < TOL, || format!("[[w^-1]] differs from [[w]]^dagger by {diff:e}"))?;
        worst = worst.max(diff);
    }
    Ok(format!("300 round trips, worst adjoint error {worst:.1e}"))
}

/// Variables of an OD element with their types.
fn var_types(e: &Term, ty: &Type, out: &mut Vec<(String, Type)>) {
    match (e, ty) {
        (Term::Var(x), _) => out.push((x.clone(), ty.clone())),
        (Term::InL(t), Type::Sum(a, _)) => var_types(t, a, out),
        (Term::InR(t), Type::Sum(_, b)) => var_types(t, b, out),
        (Term::Pair(s, t), Type::Tensor(a, b)) => {
            var_types(s, a, out);
            var_types(t, b, out);
        }
        (Term::Sum(parts), _) => {
            if let Some((_, t)) = parts.first() {
                var_types(t, ty, out);
            }
        }
        _ => {}
    }
}

/// Residual of sum_e [[e]] [[e]]^dagger against the identity.
fn resolution_residual(ty: &Type, set: &[Term]) -> Result<f64, String> {
    let n = dim(ty);
    let mut acc = Matrix::zeros(n, n);
    for e in set {
        let mut vars = Vec::new();
        var_types(e, ty, &mut vars);
        let ctx = vars.into_iter().fold(Context::new(), |ctx, (x, t)| ctx.with_var(&x, t));
        let m = denote::sem_term(&ctx, &app(identity_at(ty), e.clone()), CUTOFF)
            .map_err(|err| format!("{}: {err}", parser::pretty_term(e)))?;
        acc = acc
            .add(&m.mul(&m.adjoint()).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    }
    Ok(acc.max_abs_diff(&Matrix::identity(n)))
}

struct OdGen {
    next: usize,
}

impl OdGen {
    fn fresh(&mut self) -> Term {
        self.next += 1;
        var(&format!("v{}", self.next))
    }

    /// A random orthogonal decomposition of a finite type.
    fn od(&mut self, rng: &mut ChaCha8Rng, ty: &Type, depth: usize) -> Vec<Term> {
        if depth == 0 || rng.gen_range(0..4) == 0 {
            return vec![self.fresh()];
        }
        match ty {
            Type::Unit => vec![Term::Unit],
            Type::Sum(a, b) => {
                let mut out: Vec<Term> = self.od(rng, a, depth - 1).into_iter().map(inl).collect();
                out.extend(self.od(rng, b, depth - 1).into_iter().map(inr));
                out
            }
            Type::Tensor(a, b) => {
                let mut out = Vec::new();
                for h in self.od(rng, a, depth - 1) {
                    for t in self.od(rng, b, depth - 1) {
                        out.push(pair(h.clone(), t));
                    }
                }
                out
            }
            _ => unreachable!("finite type"),
        }
    }
}

/// Replaces the closed elements of an OD by a unitary mix of them.
fn extend(rng: &mut ChaCha8Rng, set: Vec<Term>) -> Vec<Term> {
    let (closed, open): (Vec<Term>, Vec<Term>) = set.into_iter().partition(|e| e.free_vars().is_empty());
    if closed.len() < 2 {
        return closed.into_iter().chain(open).collect();
    }
    let u = rand_unitary(rng, closed.len());
    let mixed = u.iter().map(|row| combination(row.iter().copied(), &closed));
    mixed.chain(open).collect()
}

/// Name, type, elements and kind of a decomposition to check.
type OdCase = (String, Type, Vec<Term>, OdKind);

fn stdlib_clause_sets() -> Result<Vec<OdCase>, String> {
    let mut out = Vec::new();
    for id in [ProgramId::Hadamard, ProgramId::Swap, ProgramId::NotIso] {
        let p = stdlib::generate(&id).map_err(|e| e.to_string())?;
        let Some(Iso::Ann(body, IsoType::Ground(a, b))) = stdlib::entry_iso(&p) else {
            return Err(format!("{id}: expected an annotated clause iso"));
        };
        let Iso::Clauses(cs) = *body else {
            return Err(format!("{id}: expected clauses"));
        };
        out.push((
            format!("{id} lhs"),
            a,
            cs.iter().map(|(l, _)| l.clone()).collect(),
            OdKind::Basis,
        ));
        out.push((
            format!("{id} rhs"),
            b,
            cs.iter().map(|(_, r)| r.clone()).collect(),
            OdKind::Extended,
        ));
    }
    Ok(out)
}

fn od_laws(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut cases = stdlib_clause_sets()?;
    let fixed = cases.len();
    let mut gen = OdGen { next: 0 };
    for i in 0..120 {
        let ty = rand_type(rng, 8, 3);
        let set = gen.od(rng, &ty, 4);
        if i % 2 == 0 {
            cases.push((format!("generated OD #{i}"), ty, set, OdKind::Basis));
        } else {
            cases.push((format!("generated OD_ext #{i}"), ty, extend(rng, set), OdKind::Extended));
        }
    }
    let mut worst = 0.0f64;
    for (name, ty, set, kind) in &cases {
        let show = || set.iter().map(parser::pretty_term).collect::<Vec<_>>().join(", ");
        let ok = ortho::check_od(ty, set, *kind).map_err(|e| format!("{name}: {e}"))?;
        ensure(ok, || {
            format!(
                "{name} {{{}}} is not a decomposition of {}",
                show(),
                parser::pretty_type(ty)
            )
        })?;
        ensure(ortho::pairwise_orthogonal(set, Dialect::Quantum), || {
            format!("{name} {{{}}} not pairwise orthogonal", show())
        })?;
        let r = resolution_residual(ty, set)?;
        ensure(r < TOL, || format!("{name} {{{}}}: resolution residual {r:e}", show()))?;
        worst = worst.max(r);
    }
    Ok(format!(
        "{fixed} library sets and {} generated sets, worst residual {worst:.1e}",
        cases.len() - fixed
    ))
}

fn classical_program(src: &str) -> Result<(Iso, Type), String> {
    let p = parser::parse(src, Dialect::Classical).map_err(|d| d.render("<program>"))?;
    let info = typeck::check_program(&p).map_err(|d| d.render("<program>"))?;
    let name = p.entry_iso_name().ok_or("no iso")?;
    let w = p.closed_iso(&name).ok_or("no iso")?;
    match typeck::default_iso_metas(&info.isos[&name]) {
        IsoType::Ground(a, _) => Ok((w, a)),
        other => Err(format!("{name} has type {}", parser::pretty_iso_type(&other))),
    }
}

fn library_source(id: &ProgramId) -> Result<String, String> {
    stdlib::generate_source(id).map_err(|e| e.to_string())
}

/// Classical library isos with their domains.
fn classical_pool() -> Result<Vec<(String, Iso, Type)>, String> {
    let map_succ = format!(
        "{}iso succ : nat <-> nat = {{| n <-> fold inr n }};\niso map_succ = map succ;\n",
        library_source(&ProgramId::MapIso)?
    );
    let countdown = format!(
        "{}iso countdown : nat <-> nat * (I + I) = {{| fold inr n <-> (n, inl *) | #0 <-> (#0, inr *) }};\n\
         iso iterate = it countdown;\n",
        library_source(&ProgramId::It)?
    );
    let mut sources = vec![
        ("map succ".to_string(), map_succ),
        ("it countdown".to_string(), countdown),
    ];
    for id in [
        ProgramId::DupAt(Type::nat()),
        ProgramId::DupAt(parser::parse_type("[I + I] * (nat + I)").expect("type")),
        ProgramId::CantorPairing,
        ProgramId::FloorAt(parser::parse_type("(I + I) * nat").expect("type")),
        ProgramId::RmBlank(2),
        ProgramId::Rev(2),
        ProgramId::Growth(2),
        ProgramId::RtmIso(RtmSpec::increment()),
    ] {
        sources.push((id.to_string(), library_source(&id)?));
    }
    sources
        .into_iter()
        .map(|(name, src)| {
            let (w, a) = classical_program(&src).map_err(|e| format!("{name}: {e}"))?;
            Ok((name, w, a))
        })
        .collect()
}

fn classical_values(ty: &Type, budget: usize) -> Vec<Term> {
    denote::enumerate_basis(ty, budget).map(|b| b.elems).unwrap_or_default()
}

fn determinism(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let pool = classical_pool()?;
    let domains: Vec<Vec<Term>> = pool.iter().map(|(_, _, a)| classical_values(a, 4)).collect();
    let mut steps = 0usize;
    let mut values = 0usize;
    for i in 0..1000 {
        let k = i % pool.len();
        let (name, w, _) = &pool[k];
        let Some(v) = domains[k].choose(rng) else { continue };
        let t = typeck::elaborate_term(&app(w.clone(), v.clone()), Dialect::Classical)
            .map_err(|d| format!("{name}: {d}"))?;
        let ty = typeck::typecheck_term(&Context::new(), &t, Dialect::Classical).map_err(|d| format!("{name}: {d}"))?;
        let trace = ceval::eval_traced(&t, 5_000);
        for (j, n) in trace.applicable.iter().enumerate() {
            ensure(*n == 1, || {
                format!("{name} on {}: {n} rules apply at step {j}", parser::pretty_term(v))
            })?;
        }
        for (j, s) in trace.terms.iter().enumerate() {
            typeck::check_term_at(s, &ty, Dialect::Classical)
                .map_err(|d| format!("{name} on {}: step {j} loses the type: {d}", parser::pretty_term(v)))?;
        }
        steps += trace.applicable.len();
        values += usize::from(matches!(trace.outcome, Outcome::Value(_)));
    }
    Ok(format!(
        "1000 evaluations over {} isos, {steps} steps, {values} values",
        pool.len()
    ))
}

fn divergence(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let f = || Iso::Var("f".into());
    let loops = [
        ("fix f. f", Iso::Fix("f".into(), Box::new(f()))),
        (
            "let-loop",
            Iso::Fix(
                "f".into(),
                Box::new(clauses(vec![(
                    var("x"),
                    let_in(var("y"), app(f(), var("x")), var("y")),
                )])),
            ),
        ),
    ];
    for (name, w) in &loops {
        let t = app(w.clone(), inl(Term::Unit));
        let out = ceval::eval(&t, 1_000);
        ensure(out == Outcome::OutOfFuel(1_000), || format!("{name}: {out}"))?;
        for n in 0..=25 {
            let out = ceval::eval_finitary(&ceval::finitize_term(&t, n));
            ensure(out == Outcome::Bottom, || format!("{name} at depth {n}: {out}"))?;
        }
    }
    let pool = classical_pool()?;
    let domains: Vec<Vec<Term>> = pool.iter().map(|(_, _, a)| classical_values(a, 4)).collect();
    let (mut values, mut bottoms) = (0, 0);
    for i in 0..500 {
        let k = i % pool.len();
        let (name, w, _) = &pool[k];
        let Some(v) = domains[k].choose(rng) else { continue };
        let n = rng.gen_range(0..8);
        let t = app(w.clone(), v.clone());
        let out = ceval::eval_finitary(&ceval::finitize_term(&t, n));
        match &out {
            Outcome::Value(r) => {
                let full = ceval::eval(&t, 100_000);
                ensure(full.value() == Some(r), || {
                    format!("{name} at depth {n}: {out} but unbounded run gives {full}")
                })?;
                values += 1;
            }
            Outcome::Bottom => bottoms += 1,
            Outcome::Stuck(_) => {
                let full = ceval::eval(&t, 100_000);
                ensure(matches!(full, Outcome::Stuck(_)), || {
                    format!("{name} at depth {n}: {out}")
                })?;
            }
            Outcome::OutOfFuel(_) => return Err(format!("{name}: finitary run reported fuel")),
        }
    }
    Ok(format!(
        "both loops diverge, finitizations give bottom; 500 finitary runs halt ({values} values, {bottoms} bottoms)"
    ))
}

fn cantor_oracle(i: usize, j: usize) -> usize {
    if i == 0 && j == 0 {
        return 0;
    }
    // One step back along the enumeration of diagonals.
    if i > 0 {
        cantor_oracle(i - 1, j + 1) + 1
    } else {
        cantor_oracle(j - 1, 0) + 1
    }
}

fn stdlib_semantics(_: &mut ChaCha8Rng) -> Result<String, String> {
    let fuel = 100_000;
    let mut dup_checked = 0;
    for ty in ["nat", "[I + I]", "(I + I) * nat", "nat + [I]", "[nat]"] {
        let ty = parser::parse_type(ty).expect("type");
        let p = stdlib::generate(&ProgramId::DupAt(ty.clone())).map_err(|e| e.to_string())?;
        for v in classical_values(&ty, 6) {
            let out = stdlib::run_entry(&p, &v, fuel).ok_or("no entry")?;
            ensure(out.value() == Some(&pair(v.clone(), v.clone())), || {
                format!(
                    "dup at {} on {}: {out}",
                    parser::pretty_type(&ty),
                    parser::pretty_term(&v)
                )
            })?;
            dup_checked += 1;
        }
    }
    let (map_succ, _) = classical_program(&format!(
        "{}iso succ : nat <-> nat = {{| n <-> fold inr n }};\niso map_succ = map succ;\n",
        library_source(&ProgramId::MapIso)?
    ))?;
    let mut lists: Vec<Vec<usize>> = vec![vec![]];
    let mut frontier = lists.clone();
    for _ in 0..5 {
        frontier = frontier
            .iter()
            .flat_map(|l| (0..4).map(move |x| [l.clone(), vec![x]].concat()))
            .collect();
        lists.extend(frontier.iter().cloned());
    }
    for l in &lists {
        let input = list_of(l.iter().map(|&n| numeral(n)).collect());
        let expected = list_of(l.iter().map(|&n| numeral(n + 1)).collect());
        let out = ceval::eval(&app(map_succ.clone(), input), fuel);
        ensure(out.value() == Some(&expected), || format!("map succ {l:?}: {out}"))?;
    }
    let p = stdlib::generate(&ProgramId::CantorPairing).map_err(|e| e.to_string())?;
    for i in 0..=5 {
        for j in 0..=5 {
            let out = stdlib::run_entry(&p, &pair(numeral(i), numeral(j)), fuel).ok_or("no entry")?;
            let want = cantor_oracle(i, j);
            ensure(out.value() == Some(&numeral(want)), || {
                format!("cantor ({i}, {j}) = {out}, expected {want}")
            })?;
        }
    }
    let w = stdlib::entry_iso(&p).ok_or("no entry")?;
    let table = denote::sem_pinj(&w, 6, fuel).map_err(|e| e.to_string())?;
    ensure(table.is_injective(), || "cantor table is not injective".into())?;
    ensure(table.undefined.is_empty(), || "cantor is undefined somewhere".into())?;
    Ok(format!(
        "dup on {dup_checked} values, map succ on {} lists, cantor on 36 pairs, table of {} points injective",
        lists.len(),
        table.points.len()
    ))
}

fn words(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = out.clone();
    for _ in 0..max_len {
        frontier = frontier
            .iter()
            .flat_map(|w| alphabet.iter().map(move |c| format!("{w}{c}")))
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

fn rtm_agreement(_: &mut ChaCha8Rng) -> Result<String, String> {
    let mut checked = 0;
    for m in [RtmSpec::increment(), RtmSpec::identity()] {
        let p = stdlib::generate(&ProgramId::RtmExact(m.clone())).map_err(|e| e.to_string())?;
        for input in words(&m.alphabet[1..], 4) {
            let want = stdlib::rtm_string_semantics(&m, &input, 1_000);
            let got = stdlib::rtm_iso_semantics(&m, &p, &input, 2_000_000);
            ensure(want.is_some() && got == want, || {
                format!("{} on {input:?}: iso gives {got:?}, machine gives {want:?}", m.name)
            })?;
            checked += 1;
        }
    }
    Ok(format!(
        "increment and identity agree with the simulator on {checked} inputs"
    ))
}

fn negative_suite(_: &mut ChaCha8Rng) -> Result<String, String> {
    let cases = [
        (
            "non-orthogonal superposition",
            "main = 1/sqrt2 * inl * + 1/sqrt2 * inl *;",
            Dialect::Quantum,
            diag::E_NON_ORTHOGONAL,
        ),
        (
            "non-unitary coefficients",
            "iso bad : I + I <-> I + I = {| inl * <-> 0.6 * inl * + 0.8 * inr * | inr * <-> 0.8 * inl * + 0.6 * inr * };",
            Dialect::Quantum,
            diag::E_NON_UNITARY,
        ),
        (
            "duplicated variable",
            "iso bad : I + I <-> (I + I) * (I + I) = {| x <-> (x, x) };",
            Dialect::Quantum,
            diag::E_DUP_VAR,
        ),
        (
            "arrow-typed application",
            "iso k : (I + I <-> I + I) -> (I + I <-> I + I) = \\g. g;\nmain = k (inl *);",
            Dialect::Classical,
            diag::E_ARROW_APP,
        ),
    ];
    let mut seen = Vec::new();
    for (name, src, dialect, code) in cases {
        let got = parser::parse(src, dialect).and_then(|p| typeck::check_program(&p).map(|_| ()));
        match got {
            Err(d) if d.code == code => seen.push(format!("{name} {code}")),
            Err(d) => return Err(format!("{name}: expected {code}, got {d}")),
            Ok(()) => return Err(format!("{name}: accepted")),
        }
    }
    Ok(seen.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_unitaries_are_unitary(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = rand_unitary(&mut rng, n);
            let m = Matrix::from_rows(&u);
            prop_assert!(denote::unitary_residual(&m) < 1e-10);
        }

        #[test]
        fn random_terms_typecheck(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ty = rand_type(&mut rng, 16, 4);
            prop_assert!(dim(&ty) <= 16);
            let t = rand_term(&mut rng, &ty, 2);
            prop_assert!(typed_quantum(&t, &ty).is_ok(), "{}", parser::pretty_term(&t));
        }
    }

    #[test]
    fn oracle_matches_closed_form() {
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(cantor_oracle(i, j), (i + j) * (i + j + 1) / 2 + i);
            }
        }
    }

    #[test]
    fn cheap_criteria_pass() {
        for id in [1, 10] {
            let r = run_criterion(id, DEFAULT_SEED);
            assert!(r.passed, "{r}");
        }
    }
}
