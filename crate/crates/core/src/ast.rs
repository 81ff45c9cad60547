//! Abstract syntax shared by both dialects, the scalar tolerance policy and the
//! canonical order on basis values.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

pub type C64 = Complex64;

const DEFAULT_EPS: f64 = 1e-9;

static EPS_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695);

/// Global tolerance used for scalar equality, zero and norm tests.
pub fn eps() -> f64 {
    f64::from_bits(EPS_BITS.load(AtomicOrdering::Relaxed))
}

pub fn set_eps(value: f64) {
    let v = if value.is_finite() && value > 0.0 {
        value
    } else {
        DEFAULT_EPS
    };
    EPS_BITS.store(v.to_bits(), AtomicOrdering::Relaxed);
}

pub fn default_eps() -> f64 {
    DEFAULT_EPS
}

pub fn is_zero(c: C64) -> bool {
    c.norm() < eps()
}

pub fn scalar_eq(a: C64, b: C64) -> bool {
    (a - b).norm() < eps()
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dialect {
    Quantum,
    Classical,
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dialect::Quantum => write!(f, "quantum"),
            Dialect::Classical => write!(f, "classical"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AstError {
    #[error("malformed input: {0}")]
    Malformed(String),
}

/// Ground types. `Meta` only appears transiently during type inference.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Unit,
    Sum(Box<Type>, Box<Type>),
    Tensor(Box<Type>, Box<Type>),
    Nat,
    Mu(String, Box<Type>),
    Var(String),
    Meta(u32),
}

impl Type {
    pub fn sum(a: Type, b: Type) -> Type {
        Type::Sum(Box::new(a), Box::new(b))
    }

    pub fn tensor(a: Type, b: Type) -> Type {
        Type::Tensor(Box::new(a), Box::new(b))
    }

    pub fn mu(x: &str, body: Type) -> Type {
        Type::Mu(x.to_string(), Box::new(body))
    }

    pub fn qubit() -> Type {
        Type::sum(Type::Unit, Type::Unit)
    }

    /// `nat = mu X. I + X` of the classical dialect.
    pub fn nat() -> Type {
        Type::mu("X", Type::sum(Type::Unit, Type::Var("X".into())))
    }

    /// `[A] = mu X. I + (A * X)`.
    pub fn list(elem: Type) -> Type {
        let x = fresh_binder_avoiding(&elem);
        Type::mu(&x, Type::sum(Type::Unit, Type::tensor(elem, Type::Var(x.clone()))))
    }

    /// Right-nested sum of `n` unit types; `n = 0` is not representable and yields `I`.
    pub fn finite(n: usize) -> Type {
        if n <= 1 {
            Type::Unit
        } else {
            Type::sum(Type::Unit, Type::finite(n - 1))
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Type::Unit | Type::Nat | Type::Meta(_) => {}
            Type::Sum(a, b) | Type::Tensor(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Type::Mu(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Type::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn has_meta(&self) -> bool {
        match self {
            Type::Meta(_) => true,
            Type::Unit | Type::Nat | Type::Var(_) => false,
            Type::Sum(a, b) | Type::Tensor(a, b) => a.has_meta() || b.has_meta(),
            Type::Mu(_, b) => b.has_meta(),
        }
    }

    /// Capture-avoiding substitution of `x` by `by`.
    pub fn subst(&self, x: &str, by: &Type) -> Type {
        match self {
            Type::Unit | Type::Nat | Type::Meta(_) => self.clone(),
            Type::Var(y) => {
                if y == x {
                    by.clone()
                } else {
                    self.clone()
                }
            }
            Type::Sum(a, b) => Type::sum(a.subst(x, by), b.subst(x, by)),
            Type::Tensor(a, b) => Type::tensor(a.subst(x, by), b.subst(x, by)),
            Type::Mu(y, body) => {
                if y == x {
                    self.clone()
                } else if by.free_vars().contains(y) {
                    let mut avoid = by.free_vars();
                    avoid.extend(body.free_vars());
                    avoid.insert(x.to_string());
                    let z = fresh_name(y, &avoid);
                    let renamed = body.subst(y, &Type::Var(z.clone()));
                    Type::Mu(z, Box::new(renamed.subst(x, by)))
                } else {
                    Type::Mu(y.clone(), Box::new(body.subst(x, by)))
                }
            }
        }
    }

    /// `A[mu X. A / X]` for `self = mu X. A`.
    pub fn unfold(&self) -> Option<Type> {
        match self {
            Type::Mu(x, body) => Some(body.subst(x, self)),
            _ => None,
        }
    }

    /// Renames every binder to a positional name so that alpha-equivalent
    /// types become structurally equal.
    pub fn canonical(&self) -> Type {
        fn go(t: &Type, depth: usize, env: &mut Vec<(String, String)>) -> Type {
            match t {
                Type::Unit | Type::Nat | Type::Meta(_) => t.clone(),
                Type::Var(x) => {
                    for (from, to) in env.iter().rev() {
                        if from == x {
                            return Type::Var(to.clone());
                        }
                    }
                    t.clone()
                }
                Type::Sum(a, b) => Type::sum(go(a, depth, env), go(b, depth, env)),
                Type::Tensor(a, b) => Type::tensor(go(a, depth, env), go(b, depth, env)),
                Type::Mu(x, body) => {
                    let name = format!("%{depth}");
                    env.push((x.clone(), name.clone()));
                    let b = go(body, depth + 1, env);
                    env.pop();
                    Type::Mu(name, Box::new(b))
                }
            }
        }
        go(self, 0, &mut Vec::new())
    }

    pub fn alpha_eq(&self, other: &Type) -> bool {
        self.canonical() == other.canonical()
    }

    /// Checks the constructor set admitted by a dialect.
    pub fn check_dialect(&self, d: Dialect) -> Result<(), String> {
        match (self, d) {
            (Type::Unit, _) | (Type::Meta(_), _) => Ok(()),
            (Type::Sum(a, b), _) | (Type::Tensor(a, b), _) => {
                a.check_dialect(d)?;
                b.check_dialect(d)
            }
            (Type::Nat, Dialect::Quantum) => Ok(()),
            (Type::Nat, Dialect::Classical) => {
                Err("`Nat` belongs to the quantum dialect; use `nat` (mu X. I + X)".into())
            }
            (Type::Mu(_, b), Dialect::Classical) => b.check_dialect(d),
            (Type::Var(_), Dialect::Classical) => Ok(()),
            (Type::Mu(..), Dialect::Quantum) | (Type::Var(_), Dialect::Quantum) => {
                Err("recursive types are not available in the quantum dialect".into())
            }
        }
    }

    /// Recognizes `mu X. I + X`.
    pub fn is_classical_nat(&self) -> bool {
        if let Type::Mu(x, body) = self {
            if let Type::Sum(a, b) = body.as_ref() {
                return **a == Type::Unit && **b == Type::Var(x.clone());
            }
        }
        false
    }

    /// Recognizes `mu X. I + (A * X)` with `X` not free in `A`, returning `A`.
    pub fn as_list_elem(&self) -> Option<&Type> {
        if let Type::Mu(x, body) = self {
            if let Type::Sum(a, b) = body.as_ref() {
                if **a == Type::Unit {
                    if let Type::Tensor(elem, tail) = b.as_ref() {
                        if **tail == Type::Var(x.clone()) && !elem.free_vars().contains(x) {
                            return Some(elem);
                        }
                    }
                }
            }
        }
        None
    }
}

fn fresh_binder_avoiding(t: &Type) -> String {
    let used = t.free_vars();
    fresh_name("X", &used)
}

pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    let mut i = 1;
    loop {
        let cand = format!("{base}{i}");
        if !avoid.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IsoType {
    Ground(Type, Type),
    Arrow(Box<IsoType>, Box<IsoType>),
    Meta(u32),
}

impl IsoType {
    pub fn ground(a: Type, b: Type) -> IsoType {
        IsoType::Ground(a, b)
    }

    pub fn arrow(a: IsoType, b: IsoType) -> IsoType {
        IsoType::Arrow(Box::new(a), Box::new(b))
    }

    pub fn alpha_eq(&self, other: &IsoType) -> bool {
        match (self, other) {
            (IsoType::Ground(a, b), IsoType::Ground(c, d)) => a.alpha_eq(c) && b.alpha_eq(d),
            (IsoType::Arrow(a, b), IsoType::Arrow(c, d)) => a.alpha_eq(c) && b.alpha_eq(d),
            (IsoType::Meta(a), IsoType::Meta(b)) => a == b,
            _ => false,
        }
    }

    pub fn inverse(&self) -> Option<IsoType> {
        match self {
            IsoType::Ground(a, b) => Some(IsoType::Ground(b.clone(), a.clone())),
            _ => None,
        }
    }
}

/// Terms of both dialects. Let patterns are stored as terms built from
/// variables and pairs.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Unit,
    Var(String),
    InL(Box<Term>),
    InR(Box<Term>),
    Pair(Box<Term>, Box<Term>),
    Zero,
    Suc(Box<Term>),
    Fold(Box<Term>),
    App(Box<Iso>, Box<Term>),
    Let(Box<Term>, Box<Term>, Box<Term>),
    Sum(Vec<(C64, Term)>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Iso {
    Clauses(Vec<(Term, Term)>),
    Tensor(Box<Iso>, Box<Iso>),
    Sum(Box<Iso>, Box<Iso>),
    /// `Compose(outer, inner)` is `outer` after `inner`.
    Compose(Box<Iso>, Box<Iso>),
    Inverse(Box<Iso>),
    Ctrl(Box<Iso>),
    Lambda(String, Box<Iso>),
    Var(String),
    App(Box<Iso>, Box<Iso>),
    Fix(String, Box<Iso>),
    NFix(u32, String, Box<Iso>),
    /// The iso that never produces a value; its type is whatever the context needs.
    Omega,
    Ann(Box<Iso>, IsoType),
}

pub fn var(x: &str) -> Term {
    Term::Var(x.to_string())
}

pub fn inl(t: Term) -> Term {
    Term::InL(Box::new(t))
}

pub fn inr(t: Term) -> Term {
    Term::InR(Box::new(t))
}

pub fn pair(a: Term, b: Term) -> Term {
    Term::Pair(Box::new(a), Box::new(b))
}

pub fn suc(t: Term) -> Term {
    Term::Suc(Box::new(t))
}

pub fn fold(t: Term) -> Term {
    Term::Fold(Box::new(t))
}

pub fn app(w: Iso, t: Term) -> Term {
    Term::App(Box::new(w), Box::new(t))
}

pub fn let_in(p: Term, t1: Term, t2: Term) -> Term {
    Term::Let(Box::new(p), Box::new(t1), Box::new(t2))
}

/// Right-nested tuple `(t1, (t2, ... tn))`.
pub fn tuple(mut items: Vec<Term>) -> Term {
    assert!(!items.is_empty(), "empty tuple");
    let mut acc = items.pop().unwrap();
    while let Some(t) = items.pop() {
        acc = pair(t, acc);
    }
    acc
}

/// Classical numeral: `0 = fold (inl *)`, `S n = fold (inr n)`.
pub fn numeral(n: usize) -> Term {
    let mut t = fold(inl(Term::Unit));
    for _ in 0..n {
        t = fold(inr(t));
    }
    t
}

/// Quantum numeral built from `zero` and `suc`.
pub fn qnumeral(n: usize) -> Term {
    let mut t = Term::Zero;
    for _ in 0..n {
        t = suc(t);
    }
    t
}

pub fn nil() -> Term {
    fold(inl(Term::Unit))
}

pub fn cons(h: Term, t: Term) -> Term {
    fold(inr(pair(h, t)))
}

pub fn list_of(items: Vec<Term>) -> Term {
    let mut acc = nil();
    for t in items.into_iter().rev() {
        acc = cons(t, acc);
    }
    acc
}

pub fn clauses(cs: Vec<(Term, Term)>) -> Iso {
    Iso::Clauses(cs)
}

impl Term {
    fn rank(&self) -> u8 {
        match self {
            Term::Unit => 0,
            Term::Var(_) => 1,
            Term::Zero => 2,
            Term::Suc(_) => 3,
            Term::InL(_) => 4,
            Term::InR(_) => 5,
            Term::Pair(..) => 6,
            Term::Fold(_) => 7,
            Term::App(..) => 8,
            Term::Let(..) => 9,
            Term::Sum(_) => 10,
        }
    }

    /// No application, let or linear combination anywhere.
    pub fn is_basis_value(&self) -> bool {
        match self {
            Term::Unit | Term::Var(_) | Term::Zero => true,
            Term::InL(t) | Term::InR(t) | Term::Suc(t) | Term::Fold(t) => t.is_basis_value(),
            Term::Pair(a, b) => a.is_basis_value() && b.is_basis_value(),
            Term::App(..) | Term::Let(..) | Term::Sum(_) => false,
        }
    }

    /// Classical values: basis values without `zero`/`suc`.
    pub fn is_value(&self) -> bool {
        match self {
            Term::Unit | Term::Var(_) => true,
            Term::InL(t) | Term::InR(t) | Term::Fold(t) => t.is_value(),
            Term::Pair(a, b) => a.is_value() && b.is_value(),
            _ => false,
        }
    }

    pub fn is_closed_value(&self) -> bool {
        self.is_value() && self.free_vars().is_empty()
    }

    /// Patterns of let bindings: variables and pairs of patterns.
    pub fn is_pattern(&self) -> bool {
        match self {
            Term::Var(_) => true,
            Term::Pair(a, b) => a.is_pattern() && b.is_pattern(),
            _ => false,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Unit | Term::Zero => {}
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::InL(t) | Term::InR(t) | Term::Suc(t) | Term::Fold(t) => t.collect_free(out),
            Term::Pair(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Term::App(_, t) => t.collect_free(out),
            Term::Let(p, t1, t2) => {
                t1.collect_free(out);
                let mut inner = BTreeSet::new();
                t2.collect_free(&mut inner);
                let bound = p.free_vars();
                out.extend(inner.into_iter().filter(|x| !bound.contains(x)));
            }
            Term::Sum(parts) => {
                for (_, t) in parts {
                    t.collect_free(out);
                }
            }
        }
    }

    /// Variables in left-to-right order, with repetitions.
    pub fn vars_in_order(&self) -> Vec<String> {
        let mut out = Vec::new();
        fn go(t: &Term, out: &mut Vec<String>) {
            match t {
                Term::Var(x) => out.push(x.clone()),
                Term::Unit | Term::Zero => {}
                Term::InL(a) | Term::InR(a) | Term::Suc(a) | Term::Fold(a) => go(a, out),
                Term::Pair(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Term::App(_, a) => go(a, out),
                Term::Let(p, a, b) => {
                    go(p, out);
                    go(a, out);
                    go(b, out);
                }
                Term::Sum(ps) => {
                    for (_, a) in ps {
                        go(a, out);
                    }
                }
            }
        }
        go(self, &mut out);
        out
    }

    /// Number of `fold` constructors, used as the size of classical values.
    pub fn fold_size(&self) -> usize {
        match self {
            Term::Fold(t) => 1 + t.fold_size(),
            Term::InL(t) | Term::InR(t) | Term::Suc(t) => t.fold_size(),
            Term::Pair(a, b) => a.fold_size() + b.fold_size(),
            _ => 0,
        }
    }

    /// Structural equality with tolerance on scalars.
    pub fn approx_eq(&self, other: &Term) -> bool {
        match (self, other) {
            (Term::Unit, Term::Unit) | (Term::Zero, Term::Zero) => true,
            (Term::Var(a), Term::Var(b)) => a == b,
            (Term::InL(a), Term::InL(b))
            | (Term::InR(a), Term::InR(b))
            | (Term::Suc(a), Term::Suc(b))
            | (Term::Fold(a), Term::Fold(b)) => a.approx_eq(b),
            (Term::Pair(a1, b1), Term::Pair(a2, b2)) => a1.approx_eq(a2) && b1.approx_eq(b2),
            (Term::App(w1, t1), Term::App(w2, t2)) => w1.approx_eq(w2) && t1.approx_eq(t2),
            (Term::Let(p1, a1, b1), Term::Let(p2, a2, b2)) => p1 == p2 && a1.approx_eq(a2) && b1.approx_eq(b2),
            (Term::Sum(xs), Term::Sum(ys)) => {
                xs.len() == ys.len()
                    && xs
                        .iter()
                        .zip(ys)
                        .all(|((a, s), (b, t))| scalar_eq(*a, *b) && s.approx_eq(t))
            }
            _ => false,
        }
    }

    /// Replaces term variables according to `sigma`; let-bound names shadow.
    /// Isos are closed with respect to term variables and are left untouched.
    pub fn subst(&self, sigma: &Valuation) -> Term {
        match self {
            Term::Unit | Term::Zero => self.clone(),
            Term::Var(x) => sigma.get(x).cloned().unwrap_or_else(|| self.clone()),
            Term::InL(t) => inl(t.subst(sigma)),
            Term::InR(t) => inr(t.subst(sigma)),
            Term::Suc(t) => suc(t.subst(sigma)),
            Term::Fold(t) => fold(t.subst(sigma)),
            Term::Pair(a, b) => pair(a.subst(sigma), b.subst(sigma)),
            Term::App(w, t) => Term::App(w.clone(), Box::new(t.subst(sigma))),
            Term::Let(p, t1, t2) => {
                let bound = p.free_vars();
                let inner = sigma.without(&bound);
                let_in((**p).clone(), t1.subst(sigma), t2.subst(&inner))
            }
            Term::Sum(parts) => Term::Sum(parts.iter().map(|(a, t)| (*a, t.subst(sigma))).collect()),
        }
    }

    /// Substitutes the iso variable `phi` inside every iso occurring in the term.
    pub fn subst_iso(&self, phi: &str, by: &Iso) -> Term {
        match self {
            Term::Unit | Term::Zero | Term::Var(_) => self.clone(),
            Term::InL(t) => inl(t.subst_iso(phi, by)),
            Term::InR(t) => inr(t.subst_iso(phi, by)),
            Term::Suc(t) => suc(t.subst_iso(phi, by)),
            Term::Fold(t) => fold(t.subst_iso(phi, by)),
            Term::Pair(a, b) => pair(a.subst_iso(phi, by), b.subst_iso(phi, by)),
            Term::App(w, t) => app(w.subst(phi, by), t.subst_iso(phi, by)),
            Term::Let(p, t1, t2) => let_in((**p).clone(), t1.subst_iso(phi, by), t2.subst_iso(phi, by)),
            Term::Sum(parts) => Term::Sum(parts.iter().map(|(a, t)| (*a, t.subst_iso(phi, by))).collect()),
        }
    }

    pub fn free_iso_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_iso_vars(&mut out);
        out
    }

    fn collect_iso_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Unit | Term::Zero | Term::Var(_) => {}
            Term::InL(t) | Term::InR(t) | Term::Suc(t) | Term::Fold(t) => t.collect_iso_vars(out),
            Term::Pair(a, b) => {
                a.collect_iso_vars(out);
                b.collect_iso_vars(out);
            }
            Term::App(w, t) => {
                out.extend(w.free_iso_vars());
                t.collect_iso_vars(out);
            }
            Term::Let(_, a, b) => {
                a.collect_iso_vars(out);
                b.collect_iso_vars(out);
            }
            Term::Sum(ps) => {
                for (_, t) in ps {
                    t.collect_iso_vars(out);
                }
            }
        }
    }

    /// Applies `f` to every iso directly contained in the term.
    pub fn map_isos(&self, f: &mut dyn FnMut(&Iso) -> Iso) -> Term {
        match self {
            Term::Unit | Term::Zero | Term::Var(_) => self.clone(),
            Term::InL(t) => inl(t.map_isos(f)),
            Term::InR(t) => inr(t.map_isos(f)),
            Term::Suc(t) => suc(t.map_isos(f)),
            Term::Fold(t) => fold(t.map_isos(f)),
            Term::Pair(a, b) => pair(a.map_isos(f), b.map_isos(f)),
            Term::App(w, t) => app(f(w), t.map_isos(f)),
            Term::Let(p, a, b) => let_in((**p).clone(), a.map_isos(f), b.map_isos(f)),
            Term::Sum(ps) => Term::Sum(ps.iter().map(|(a, t)| (*a, t.map_isos(f))).collect()),
        }
    }

    /// Sum/let/app-free terms are trivially in the quantum or classical value grammar.
    pub fn check_dialect(&self, d: Dialect) -> Result<(), String> {
        match (self, d) {
            (Term::Unit, _) | (Term::Var(_), _) => Ok(()),
            (Term::Zero, Dialect::Quantum) => Ok(()),
            (Term::Zero, Dialect::Classical) => Err("`zero` belongs to the quantum dialect".into()),
            (Term::Suc(_), Dialect::Classical) => Err("`suc` belongs to the quantum dialect".into()),
            (Term::Fold(_), Dialect::Quantum) => Err("`fold` belongs to the classical dialect".into()),
            (Term::Let(..), Dialect::Quantum) => Err("`let` belongs to the classical dialect".into()),
            (Term::Sum(_), Dialect::Classical) => Err("linear combinations belong to the quantum dialect".into()),
            (Term::InL(t), _) | (Term::InR(t), _) | (Term::Suc(t), _) | (Term::Fold(t), _) => t.check_dialect(d),
            (Term::Pair(a, b), _) => {
                a.check_dialect(d)?;
                b.check_dialect(d)
            }
            (Term::App(w, t), _) => {
                w.check_dialect(d)?;
                t.check_dialect(d)
            }
            (Term::Let(p, a, b), Dialect::Classical) => {
                if !p.is_pattern() {
                    return Err("let patterns are built from variables and pairs".into());
                }
                a.check_dialect(d)?;
                b.check_dialect(d)
            }
            (Term::Sum(ps), Dialect::Quantum) => {
                for (_, t) in ps {
                    t.check_dialect(d)?;
                }
                Ok(())
            }
        }
    }
}

impl Iso {
    pub fn free_iso_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_iso_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_iso_vars(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Iso::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Iso::Clauses(cs) => {
                for (l, r) in cs {
                    for x in l.free_iso_vars().into_iter().chain(r.free_iso_vars()) {
                        if !bound.contains(&x) {
                            out.insert(x);
                        }
                    }
                }
            }
            Iso::Tensor(a, b) | Iso::Sum(a, b) | Iso::Compose(a, b) | Iso::App(a, b) => {
                a.collect_iso_vars(bound, out);
                b.collect_iso_vars(bound, out);
            }
            Iso::Inverse(a) | Iso::Ctrl(a) | Iso::Ann(a, _) => a.collect_iso_vars(bound, out),
            Iso::Lambda(x, body) | Iso::Fix(x, body) | Iso::NFix(_, x, body) => {
                bound.push(x.clone());
                body.collect_iso_vars(bound, out);
                bound.pop();
            }
            Iso::Omega => {}
        }
    }

    /// Substitutes a closed iso for the iso variable `phi`; binders shadow.
    pub fn subst(&self, phi: &str, by: &Iso) -> Iso {
        match self {
            Iso::Var(x) => {
                if x == phi {
                    by.clone()
                } else {
                    self.clone()
                }
            }
            Iso::Clauses(cs) => Iso::Clauses(
                cs.iter()
                    .map(|(l, r)| (l.subst_iso(phi, by), r.subst_iso(phi, by)))
                    .collect(),
            ),
            Iso::Tensor(a, b) => Iso::Tensor(Box::new(a.subst(phi, by)), Box::new(b.subst(phi, by))),
            Iso::Sum(a, b) => Iso::Sum(Box::new(a.subst(phi, by)), Box::new(b.subst(phi, by))),
            Iso::Compose(a, b) => Iso::Compose(Box::new(a.subst(phi, by)), Box::new(b.subst(phi, by))),
            Iso::App(a, b) => Iso::App(Box::new(a.subst(phi, by)), Box::new(b.subst(phi, by))),
            Iso::Inverse(a) => Iso::Inverse(Box::new(a.subst(phi, by))),
            Iso::Ctrl(a) => Iso::Ctrl(Box::new(a.subst(phi, by))),
            Iso::Ann(a, t) => Iso::Ann(Box::new(a.subst(phi, by)), t.clone()),
            Iso::Lambda(x, body) => {
                if x == phi {
                    self.clone()
                } else {
                    Iso::Lambda(x.clone(), Box::new(body.subst(phi, by)))
                }
            }
            Iso::Fix(x, body) => {
                if x == phi {
                    self.clone()
                } else {
                    Iso::Fix(x.clone(), Box::new(body.subst(phi, by)))
                }
            }
            Iso::NFix(n, x, body) => {
                if x == phi {
                    self.clone()
                } else {
                    Iso::NFix(*n, x.clone(), Box::new(body.subst(phi, by)))
                }
            }
            Iso::Omega => Iso::Omega,
        }
    }

    pub fn approx_eq(&self, other: &Iso) -> bool {
        match (self, other) {
            (Iso::Clauses(a), Iso::Clauses(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|((l1, r1), (l2, r2))| l1.approx_eq(l2) && r1.approx_eq(r2))
            }
            (Iso::Tensor(a1, b1), Iso::Tensor(a2, b2))
            | (Iso::Sum(a1, b1), Iso::Sum(a2, b2))
            | (Iso::Compose(a1, b1), Iso::Compose(a2, b2))
            | (Iso::App(a1, b1), Iso::App(a2, b2)) => a1.approx_eq(a2) && b1.approx_eq(b2),
            (Iso::Inverse(a), Iso::Inverse(b)) | (Iso::Ctrl(a), Iso::Ctrl(b)) => a.approx_eq(b),
            (Iso::Lambda(x, a), Iso::Lambda(y, b)) | (Iso::Fix(x, a), Iso::Fix(y, b)) => x == y && a.approx_eq(b),
            (Iso::NFix(n, x, a), Iso::NFix(m, y, b)) => n == m && x == y && a.approx_eq(b),
            (Iso::Var(x), Iso::Var(y)) => x == y,
            (Iso::Omega, Iso::Omega) => true,
            (Iso::Ann(a, s), Iso::Ann(b, t)) => a.approx_eq(b) && s.alpha_eq(t),
            _ => false,
        }
    }

    pub fn check_dialect(&self, d: Dialect) -> Result<(), String> {
        match self {
            Iso::Clauses(cs) => {
                for (l, r) in cs {
                    l.check_dialect(d)?;
                    r.check_dialect(d)?;
                }
                Ok(())
            }
            Iso::Tensor(a, b) | Iso::Sum(a, b) => {
                if d == Dialect::Classical {
                    return Err("tensor and sum of isos belong to the quantum dialect".into());
                }
                a.check_dialect(d)?;
                b.check_dialect(d)
            }
            Iso::Compose(a, b) => {
                a.check_dialect(d)?;
                b.check_dialect(d)
            }
            Iso::Ctrl(a) => {
                if d == Dialect::Classical {
                    return Err("`ctrl` belongs to the quantum dialect".into());
                }
                a.check_dialect(d)
            }
            Iso::Inverse(a) | Iso::Ann(a, _) => a.check_dialect(d),
            Iso::Lambda(_, b) | Iso::Fix(_, b) | Iso::NFix(_, _, b) => {
                if d == Dialect::Quantum {
                    return Err("lambda, fix and nfix belong to the classical dialect".into());
                }
                b.check_dialect(d)
            }
            Iso::App(a, b) => {
                if d == Dialect::Quantum {
                    return Err("iso-level application belongs to the classical dialect".into());
                }
                a.check_dialect(d)?;
                b.check_dialect(d)
            }
            Iso::Var(_) => Ok(()),
            Iso::Omega => {
                if d == Dialect::Quantum {
                    return Err("omega belongs to the finitary classical dialect".into());
                }
                Ok(())
            }
        }
    }

    /// True when no `fix` remains.
    pub fn is_finitary(&self) -> bool {
        match self {
            Iso::Fix(..) => false,
            Iso::Clauses(cs) => cs.iter().all(|(l, r)| l.is_finitary() && r.is_finitary()),
            Iso::Tensor(a, b) | Iso::Sum(a, b) | Iso::Compose(a, b) | Iso::App(a, b) => {
                a.is_finitary() && b.is_finitary()
            }
            Iso::Inverse(a) | Iso::Ctrl(a) | Iso::Ann(a, _) => a.is_finitary(),
            Iso::Lambda(_, b) | Iso::NFix(_, _, b) => b.is_finitary(),
            Iso::Var(_) | Iso::Omega => true,
        }
    }
}

impl Term {
    pub fn is_finitary(&self) -> bool {
        match self {
            Term::Unit | Term::Zero | Term::Var(_) => true,
            Term::InL(t) | Term::InR(t) | Term::Suc(t) | Term::Fold(t) => t.is_finitary(),
            Term::Pair(a, b) => a.is_finitary() && b.is_finitary(),
            Term::App(w, t) => w.is_finitary() && t.is_finitary(),
            Term::Let(_, a, b) => a.is_finitary() && b.is_finitary(),
            Term::Sum(ps) => ps.iter().all(|(_, t)| t.is_finitary()),
        }
    }
}

/// Finite map from term variables to closed terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Valuation {
    bindings: BTreeMap<String, Term>,
}

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(x: &str, t: Term) -> Self {
        let mut v = Self::new();
        v.bindings.insert(x.to_string(), t);
        v
    }

    /// Inserts a binding; fails if the name is already bound or the term is open.
    pub fn bind(&mut self, x: &str, t: Term) -> Result<(), AstError> {
        if self.bindings.contains_key(x) {
            return Err(AstError::Malformed(format!("variable `{x}` bound twice")));
        }
        if !t.free_vars().is_empty() {
            return Err(AstError::Malformed(format!("binding for `{x}` is not closed")));
        }
        self.bindings.insert(x.to_string(), t);
        Ok(())
    }

    /// Disjoint union; `None` when supports overlap.
    pub fn union(mut self, other: Valuation) -> Option<Valuation> {
        for (k, v) in other.bindings {
            if self.bindings.contains_key(&k) {
                return None;
            }
            self.bindings.insert(k, v);
        }
        Some(self)
    }

    pub fn get(&self, x: &str) -> Option<&Term> {
        self.bindings.get(x)
    }

    pub fn support(&self) -> BTreeSet<String> {
        self.bindings.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn without(&self, names: &BTreeSet<String>) -> Valuation {
        Valuation {
            bindings: self
                .bindings
                .iter()
                .filter(|(k, _)| !names.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

/// Total order on basis values: constructor precedence
/// `* < x < zero < suc < inl < inr < pair < fold`, then structural.
pub fn compare_basis(b1: &Term, b2: &Term) -> Result<Ordering, AstError> {
    if !b1.is_basis_value() || !b2.is_basis_value() {
        return Err(AstError::Malformed("compare_basis expects basis values".into()));
    }
    Ok(cmp_basis_unchecked(b1, b2))
}

pub(crate) fn cmp_basis_unchecked(b1: &Term, b2: &Term) -> Ordering {
    match b1.rank().cmp(&b2.rank()) {
        Ordering::Equal => {}
        o => return o,
    }
    match (b1, b2) {
        (Term::Var(x), Term::Var(y)) => x.cmp(y),
        (Term::Suc(a), Term::Suc(b))
        | (Term::InL(a), Term::InL(b))
        | (Term::InR(a), Term::InR(b))
        | (Term::Fold(a), Term::Fold(b)) => cmp_basis_unchecked(a, b),
        (Term::Pair(a1, b1), Term::Pair(a2, b2)) => {
            cmp_basis_unchecked(a1, a2).then_with(|| cmp_basis_unchecked(b1, b2))
        }
        _ => Ordering::Equal,
    }
}

/// Flattens, merges and sorts a linear combination of basis values, dropping
/// negligible scalars. Returns the canonical list of parts.
pub fn canonical_parts(parts: &[(C64, Term)]) -> Result<Vec<(C64, Term)>, AstError> {
    let mut flat: Vec<(C64, Term)> = Vec::new();
    fn flatten(alpha: C64, t: &Term, out: &mut Vec<(C64, Term)>) -> Result<(), AstError> {
        match t {
            Term::Sum(inner) => {
                for (beta, u) in inner {
                    flatten(alpha * beta, u, out)?;
                }
                Ok(())
            }
            _ if t.is_basis_value() => {
                out.push((alpha, t.clone()));
                Ok(())
            }
            _ => Err(AstError::Malformed(
                "linear combinations are canonicalized over basis values only".into(),
            )),
        }
    }
    for (a, t) in parts {
        flatten(*a, t, &mut flat)?;
    }
    flat.sort_by(|(_, a), (_, b)| cmp_basis_unchecked(a, b));
    let mut merged: Vec<(C64, Term)> = Vec::new();
    for (a, t) in flat {
        if let Some((acc, last)) = merged.last_mut() {
            if cmp_basis_unchecked(last, &t) == Ordering::Equal {
                *acc += a;
                continue;
            }
        }
        merged.push((a, t));
    }
    merged.retain(|(a, _)| !is_zero(*a));
    Ok(merged)
}

/// Canonical term for a linear combination: a bare basis value when a single
/// part with scalar 1 remains, a `Sum` otherwise.
pub fn canonicalize_sum(parts: &[(C64, Term)]) -> Result<Term, AstError> {
    let merged = canonical_parts(parts)?;
    Ok(parts_to_term(merged))
}

pub fn parts_to_term(mut merged: Vec<(C64, Term)>) -> Term {
    if merged.len() == 1 && scalar_eq(merged[0].0, real(1.0)) {
        return merged.pop().unwrap().1;
    }
    Term::Sum(merged)
}

/// Expands an application-free quantum term into canonical parts by pushing
/// constructors through linear combinations.
pub fn linear_parts(t: &Term) -> Result<Vec<(C64, Term)>, AstError> {
    fn go(t: &Term) -> Result<Vec<(C64, Term)>, AstError> {
        Ok(match t {
            Term::Unit | Term::Zero | Term::Var(_) => vec![(real(1.0), t.clone())],
            Term::InL(a) => go(a)?.into_iter().map(|(c, b)| (c, inl(b))).collect(),
            Term::InR(a) => go(a)?.into_iter().map(|(c, b)| (c, inr(b))).collect(),
            Term::Suc(a) => go(a)?.into_iter().map(|(c, b)| (c, suc(b))).collect(),
            Term::Fold(a) => go(a)?.into_iter().map(|(c, b)| (c, fold(b))).collect(),
            Term::Pair(a, b) => {
                let l = go(a)?;
                let r = go(b)?;
                let mut out = Vec::with_capacity(l.len() * r.len());
                for (c1, x) in &l {
                    for (c2, y) in &r {
                        out.push((c1 * c2, pair(x.clone(), y.clone())));
                    }
                }
                out
            }
            Term::Sum(ps) => {
                let mut out = Vec::new();
                for (a, u) in ps {
                    out.extend(go(u)?.into_iter().map(|(c, b)| (a * c, b)));
                }
                out
            }
            Term::App(..) | Term::Let(..) => {
                return Err(AstError::Malformed("expected an application-free term".into()))
            }
        })
    }
    canonical_parts(&go(t)?)
}

pub fn free_vars(t: &Term) -> BTreeSet<String> {
    t.free_vars()
}
