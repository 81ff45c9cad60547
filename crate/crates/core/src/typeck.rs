//! Linear type checking of terms and typing of isos for both dialects.
//!
//! Linearity is a syntactic pass over variable usage; types are found by
//! unification over `Type::Meta` / `IsoType::Meta`. A `fold` whose expected
//! type is still unknown is postponed until other constraints fix it.

use crate::ast::*;
use crate::diag::*;
use crate::ortho::{check_od, od_ext_fails_only_on_unitarity, pairwise_orthogonal, OdKind};
use crate::parser::{pretty_iso_type, pretty_term, pretty_type, DeclKind, SourceProgram};
use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Typing context: linear term variables and non-linear iso variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Context {
    pub linear: BTreeMap<String, Type>,
    pub isos: BTreeMap<String, IsoType>,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_var(mut self, x: &str, ty: Type) -> Self {
        self.linear.insert(x.to_string(), ty);
        self
    }

    pub fn with_iso(mut self, phi: &str, ty: IsoType) -> Self {
        self.isos.insert(phi.to_string(), ty);
        self
    }
}

fn err(code: &'static str, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::at_start(code, msg)
}

// ---- linearity ----

/// Variables consumed by `t`, checking that pairs split the context, that
/// summands agree, and that let-bound variables are used.
pub fn linear_usage(t: &Term) -> Result<BTreeSet<String>, Diagnostic> {
    match t {
        Term::Unit | Term::Zero => Ok(BTreeSet::new()),
        Term::Var(x) => Ok([x.clone()].into_iter().collect()),
        Term::InL(u) | Term::InR(u) | Term::Suc(u) | Term::Fold(u) => linear_usage(u),
        Term::App(_, u) => linear_usage(u),
        Term::Pair(a, b) => {
            let ua = linear_usage(a)?;
            let ub = linear_usage(b)?;
            disjoint_union(ua, ub)
        }
        Term::Let(p, t1, t2) => {
            let pvars = distinct_vars(p)?;
            let u1 = linear_usage(t1)?;
            let mut u2 = linear_usage(t2)?;
            for x in &pvars {
                if !u2.remove(x) {
                    return Err(err(E_UNUSED_VAR, format!("let-bound variable `{x}` is never used")));
                }
            }
            disjoint_union(u1, u2)
        }
        Term::Sum(ps) => {
            let mut first: Option<BTreeSet<String>> = None;
            for (_, u) in ps {
                let used = linear_usage(u)?;
                match &first {
                    None => first = Some(used),
                    Some(f) if *f != used => {
                        let diff: Vec<_> = f.symmetric_difference(&used).cloned().collect();
                        return Err(err(
                            E_UNUSED_VAR,
                            format!(
                                "summands of a linear combination must use the same variables (`{}` differs)",
                                diff.join("`, `")
                            ),
                        ));
                    }
                    _ => {}
                }
            }
            Ok(first.unwrap_or_default())
        }
    }
}

fn disjoint_union(a: BTreeSet<String>, b: BTreeSet<String>) -> Result<BTreeSet<String>, Diagnostic> {
    if let Some(x) = a.intersection(&b).next() {
        return Err(err(E_DUP_VAR, format!("linear variable `{x}` is used more than once")));
    }
    Ok(a.union(&b).cloned().collect())
}

/// Variables of a pattern, which must all be distinct.
fn distinct_vars(p: &Term) -> Result<BTreeSet<String>, Diagnostic> {
    let mut seen = BTreeSet::new();
    for x in p.vars_in_order() {
        if !seen.insert(x.clone()) {
            return Err(err(E_DUP_VAR, format!("variable `{x}` occurs twice in a pattern")));
        }
    }
    Ok(seen)
}

// ---- unification state ----

#[derive(Clone)]
struct Env {
    lin: BTreeMap<String, Type>,
    isos: BTreeMap<String, IsoType>,
}

struct Deferred<'a> {
    env: Env,
    expected: Type,
    whole: &'a Term,
}

struct Checker<'a> {
    dialect: Dialect,
    next: u32,
    tsub: HashMap<u32, Type>,
    isub: HashMap<u32, IsoType>,
    deferred: Vec<Deferred<'a>>,
    term_types: HashMap<usize, Type>,
    iso_types: HashMap<usize, IsoType>,
}

impl<'a> Checker<'a> {
    fn new(dialect: Dialect) -> Self {
        Checker {
            dialect,
            next: 0,
            tsub: HashMap::new(),
            isub: HashMap::new(),
            deferred: Vec::new(),
            term_types: HashMap::new(),
            iso_types: HashMap::new(),
        }
    }

    fn fresh(&mut self) -> Type {
        self.next += 1;
        Type::Meta(self.next)
    }

    fn fresh_iso(&mut self) -> IsoType {
        self.next += 1;
        IsoType::Meta(self.next)
    }

    /// `t` with a bound top-level meta replaced; borrows `t` otherwise.
    fn head<'t>(&self, t: &'t Type) -> Cow<'t, Type> {
        match t {
            Type::Meta(m) if self.tsub.contains_key(m) => Cow::Owned(self.shallow(t)),
            _ => Cow::Borrowed(t),
        }
    }

    fn shallow(&self, t: &Type) -> Type {
        let mut cur = t.clone();
        while let Type::Meta(m) = cur {
            match self.tsub.get(&m) {
                Some(next) => cur = next.clone(),
                None => break,
            }
        }
        cur
    }

    fn resolve(&self, t: &Type) -> Type {
        match self.shallow(t) {
            Type::Sum(a, b) => Type::sum(self.resolve(&a), self.resolve(&b)),
            Type::Tensor(a, b) => Type::tensor(self.resolve(&a), self.resolve(&b)),
            Type::Mu(x, b) => Type::Mu(x, Box::new(self.resolve(&b))),
            other => other,
        }
    }

    /// Whether meta `m` occurs in `t` under the current substitution.
    fn occurs(&self, m: u32, t: &Type) -> bool {
        match t {
            Type::Meta(n) if *n == m => true,
            Type::Meta(n) => self.tsub.get(n).is_some_and(|u| self.occurs(m, u)),
            Type::Sum(a, b) | Type::Tensor(a, b) => self.occurs(m, a) || self.occurs(m, b),
            Type::Mu(_, b) => self.occurs(m, b),
            _ => false,
        }
    }

    fn shallow_iso(&self, t: &IsoType) -> IsoType {
        let mut cur = t.clone();
        while let IsoType::Meta(m) = cur {
            match self.isub.get(&m) {
                Some(next) => cur = next.clone(),
                None => break,
            }
        }
        cur
    }

    fn resolve_iso(&self, t: &IsoType) -> IsoType {
        match self.shallow_iso(t) {
            IsoType::Ground(a, b) => IsoType::Ground(self.resolve(&a), self.resolve(&b)),
            IsoType::Arrow(a, b) => IsoType::arrow(self.resolve_iso(&a), self.resolve_iso(&b)),
            m => m,
        }
    }

    fn mismatch(&self, a: &Type, b: &Type) -> Diagnostic {
        err(
            E_TYPE_MISMATCH,
            format!(
                "type mismatch: expected {}, found {}",
                pretty_type(&self.resolve(a)),
                pretty_type(&self.resolve(b))
            ),
        )
    }

    fn unify(&mut self, expected: &Type, found: &Type) -> Result<(), Diagnostic> {
        let a = self.head(expected);
        let b = self.head(found);
        let (a, b) = (a.as_ref(), b.as_ref());
        if a == b {
            return Ok(());
        }
        match (&a, &b) {
            (Type::Meta(m), other) | (other, Type::Meta(m)) => {
                if self.occurs(*m, other) {
                    return Err(err(E_TYPE_MISMATCH, "cyclic type constraint"));
                }
                self.tsub.insert(*m, (*other).clone());
                Ok(())
            }
            (Type::Unit, Type::Unit) | (Type::Nat, Type::Nat) => Ok(()),
            (Type::Sum(a1, b1), Type::Sum(a2, b2)) | (Type::Tensor(a1, b1), Type::Tensor(a2, b2)) => {
                self.unify(a1, a2).map_err(|_| self.mismatch(a, b))?;
                self.unify(b1, b2).map_err(|_| self.mismatch(a, b))
            }
            (Type::Mu(x, body1), Type::Mu(y, body2)) if x == y => {
                self.unify(body1, body2).map_err(|_| self.mismatch(a, b))
            }
            (Type::Mu(x, body1), Type::Mu(y, body2)) => {
                let l = self.resolve(body1);
                let r = self.resolve(body2).subst(y, &Type::Var(x.clone()));
                self.unify(&l, &r).map_err(|_| self.mismatch(a, b))
            }
            (Type::Var(x), Type::Var(y)) if x == y => Ok(()),
            _ => Err(self.mismatch(a, b)),
        }
    }

    fn unify_iso(&mut self, expected: &IsoType, found: &IsoType) -> Result<(), Diagnostic> {
        let a = self.shallow_iso(expected);
        let b = self.shallow_iso(found);
        match (&a, &b) {
            (IsoType::Meta(m), IsoType::Meta(n)) if m == n => Ok(()),
            (IsoType::Meta(m), other) | (other, IsoType::Meta(m)) => {
                let other = self.resolve_iso(other);
                if iso_contains_meta(&other, *m) {
                    return Err(err(E_TYPE_MISMATCH, "cyclic iso type constraint"));
                }
                self.isub.insert(*m, other);
                Ok(())
            }
            (IsoType::Ground(a1, b1), IsoType::Ground(a2, b2)) => {
                self.unify(a1, a2)?;
                self.unify(b1, b2)
            }
            (IsoType::Arrow(a1, b1), IsoType::Arrow(a2, b2)) => {
                self.unify_iso(a1, a2)?;
                self.unify_iso(b1, b2)
            }
            _ => Err(err(
                E_TYPE_MISMATCH,
                format!(
                    "iso type mismatch: expected {}, found {}",
                    pretty_iso_type(&self.resolve_iso(&a)),
                    pretty_iso_type(&self.resolve_iso(&b))
                ),
            )),
        }
    }

    /// Forces `t` to be a ground iso type `A <-> B`.
    fn expect_ground(&mut self, t: &IsoType, what: &str) -> Result<(Type, Type), Diagnostic> {
        match self.shallow_iso(t) {
            IsoType::Ground(a, b) => Ok((a, b)),
            IsoType::Meta(m) => {
                let a = self.fresh();
                let b = self.fresh();
                self.isub.insert(m, IsoType::Ground(a.clone(), b.clone()));
                Ok((a, b))
            }
            IsoType::Arrow(..) => Err(err(
                E_ARROW_APP,
                format!(
                    "{what} has function type {} and must be applied to an iso first",
                    pretty_iso_type(&self.resolve_iso(t))
                ),
            )),
        }
    }

    // ---- terms ----

    fn term(&mut self, env: &Env, t: &'a Term, expected: &Type) -> Result<(), Diagnostic> {
        self.term_types.insert(t as *const Term as usize, expected.clone());
        match t {
            Term::Unit => self.unify(expected, &Type::Unit),
            Term::Var(x) => match env.lin.get(x) {
                Some(ty) => {
                    let ty = ty.clone();
                    self.unify(expected, &ty)
                }
                None => Err(err(E_UNBOUND_VAR, format!("unbound variable `{x}`"))),
            },
            Term::InL(u) | Term::InR(u) => {
                let (a, b) = match self.head(expected).as_ref() {
                    Type::Sum(a, b) => ((**a).clone(), (**b).clone()),
                    _ => {
                        let a = self.fresh();
                        let b = self.fresh();
                        self.unify(expected, &Type::sum(a.clone(), b.clone()))
                            .map_err(|_| self.ctor_mismatch(t, expected))?;
                        (a, b)
                    }
                };
                let inner = if matches!(t, Term::InL(_)) { a } else { b };
                self.term(env, u, &inner)
            }
            Term::Pair(l, r) => {
                let (a, b) = match self.head(expected).as_ref() {
                    Type::Tensor(a, b) => ((**a).clone(), (**b).clone()),
                    _ => {
                        let a = self.fresh();
                        let b = self.fresh();
                        self.unify(expected, &Type::tensor(a.clone(), b.clone()))
                            .map_err(|_| self.ctor_mismatch(t, expected))?;
                        (a, b)
                    }
                };
                self.term(env, l, &a)?;
                self.term(env, r, &b)
            }
            Term::Zero => self
                .unify(expected, &Type::Nat)
                .map_err(|_| self.ctor_mismatch(t, expected)),
            Term::Suc(u) => {
                self.unify(expected, &Type::Nat)
                    .map_err(|_| self.ctor_mismatch(t, expected))?;
                self.term(env, u, &Type::Nat)
            }
            Term::Fold(u) => match self.head(expected).as_ref() {
                Type::Meta(_) => {
                    self.deferred.push(Deferred {
                        env: env.clone(),
                        expected: expected.clone(),
                        whole: t,
                    });
                    Ok(())
                }
                mu @ Type::Mu(..) => {
                    let unfolded = if mu.has_meta() {
                        self.resolve(mu).unfold()
                    } else {
                        mu.unfold()
                    }
                    .expect("mu type");
                    self.term(env, u, &unfolded)
                }
                _ => Err(self.ctor_mismatch(t, expected)),
            },
            Term::App(w, u) => {
                let it = self.iso(&env.isos, w)?;
                let what = match self.shallow_iso(&it) {
                    IsoType::Arrow(..) => format!("`{}`", short(&crate::parser::pretty_iso(w))),
                    _ => String::new(),
                };
                let (a, b) = self.expect_ground(&it, &what)?;
                self.term(env, u, &a)?;
                self.unify(expected, &b)
            }
            Term::Let(p, t1, t2) => {
                let a = self.fresh();
                self.term(env, t1, &a)?;
                let mut inner = env.clone();
                self.bind_pattern(&mut inner, p, &a)?;
                self.term(&inner, t2, expected)
            }
            Term::Sum(ps) => {
                if self.dialect == Dialect::Quantum {
                    let norm: f64 = ps.iter().map(|(a, _)| a.norm_sqr()).sum();
                    if (norm - 1.0).abs() >= eps() {
                        return Err(err(
                            E_NORM,
                            format!("linear combination has squared norm {norm:.6}, expected 1"),
                        ));
                    }
                    let terms: Vec<Term> = ps.iter().map(|(_, u)| u.clone()).collect();
                    if !pairwise_orthogonal(&terms, Dialect::Quantum) {
                        return Err(err(
                            E_NON_ORTHOGONAL,
                            format!("summands of `{}` are not pairwise orthogonal", short(&pretty_term(t))),
                        ));
                    }
                }
                for (_, u) in ps {
                    self.term(env, u, expected)?;
                }
                Ok(())
            }
        }
    }

    fn ctor_mismatch(&self, t: &Term, expected: &Type) -> Diagnostic {
        err(
            E_TYPE_MISMATCH,
            format!(
                "`{}` cannot have type {}",
                short(&pretty_term(t)),
                pretty_type(&self.resolve(expected))
            ),
        )
    }

    fn bind_pattern(&mut self, env: &mut Env, p: &Term, ty: &Type) -> Result<(), Diagnostic> {
        match p {
            Term::Var(x) => {
                env.lin.insert(x.clone(), ty.clone());
                Ok(())
            }
            Term::Pair(l, r) => {
                let a = self.fresh();
                let b = self.fresh();
                self.unify(ty, &Type::tensor(a.clone(), b.clone()))?;
                self.bind_pattern(env, l, &a)?;
                self.bind_pattern(env, r, &b)
            }
            _ => Err(err(E_MALFORMED, "let patterns are built from variables and pairs")),
        }
    }

    /// Postponed `fold`s, retried until none makes progress.
    fn flush(&mut self) -> Result<(), Diagnostic> {
        loop {
            let pending = std::mem::take(&mut self.deferred);
            if pending.is_empty() {
                return Ok(());
            }
            let mut progress = false;
            let mut stuck = Vec::new();
            for d in pending {
                if matches!(self.shallow(&d.expected), Type::Meta(_)) {
                    stuck.push(d);
                    continue;
                }
                progress = true;
                self.term(&d.env, d.whole, &d.expected)?;
            }
            if !progress {
                let d = &stuck[0];
                return Err(err(
                    E_AMBIGUOUS,
                    format!(
                        "cannot determine the recursive type of `{}`; add a type annotation",
                        short(&pretty_term(d.whole))
                    ),
                ));
            }
            self.deferred.extend(stuck);
        }
    }

    // ---- isos ----

    fn iso(&mut self, psi: &BTreeMap<String, IsoType>, w: &'a Iso) -> Result<IsoType, Diagnostic> {
        let t = self.iso_inner(psi, w)?;
        self.iso_types.insert(w as *const Iso as usize, t.clone());
        Ok(t)
    }

    fn iso_inner(&mut self, psi: &BTreeMap<String, IsoType>, w: &'a Iso) -> Result<IsoType, Diagnostic> {
        match w {
            Iso::Var(phi) => psi
                .get(phi)
                .cloned()
                .ok_or_else(|| err(E_UNBOUND_ISO, format!("unbound iso variable `{phi}`"))),
            Iso::Omega => {
                let a = self.fresh();
                let b = self.fresh();
                Ok(IsoType::Ground(a, b))
            }
            Iso::Clauses(cs) => match self.dialect {
                Dialect::Quantum => self.quantum_clauses(psi, cs),
                Dialect::Classical => self.classical_clauses(psi, cs),
            },
            Iso::Tensor(w1, w2) | Iso::Sum(w1, w2) => {
                self.require_quantum("tensor and sum of isos")?;
                let t1 = self.iso(psi, w1)?;
                let (a1, b1) = self.expect_ground(&t1, "the left operand")?;
                let t2 = self.iso(psi, w2)?;
                let (a2, b2) = self.expect_ground(&t2, "the right operand")?;
                Ok(if matches!(w, Iso::Tensor(..)) {
                    IsoType::Ground(Type::tensor(a1, a2), Type::tensor(b1, b2))
                } else {
                    IsoType::Ground(Type::sum(a1, a2), Type::sum(b1, b2))
                })
            }
            Iso::Compose(outer, inner) => {
                let ti = self.iso(psi, inner)?;
                let (a, b) = self.expect_ground(&ti, "the inner iso")?;
                let to = self.iso(psi, outer)?;
                let (b2, c) = self.expect_ground(&to, "the outer iso")?;
                self.unify(&b2, &b)?;
                Ok(IsoType::Ground(a, c))
            }
            Iso::Inverse(u) => {
                let t = self.iso(psi, u)?;
                let (a, b) = self.expect_ground(&t, "an inverted iso")?;
                Ok(IsoType::Ground(b, a))
            }
            Iso::Ctrl(u) => {
                self.require_quantum("`ctrl`")?;
                let t = self.iso(psi, u)?;
                let (a, b) = self.expect_ground(&t, "a controlled iso")?;
                self.unify(&a, &b)?;
                let ctl = Type::tensor(Type::qubit(), a);
                Ok(IsoType::Ground(ctl.clone(), ctl))
            }
            Iso::Lambda(phi, body) => {
                let t = self.fresh_iso();
                let mut inner = psi.clone();
                inner.insert(phi.clone(), t.clone());
                let tb = self.iso(&inner, body)?;
                Ok(IsoType::arrow(t, tb))
            }
            Iso::App(f, arg) => {
                let tf = self.iso(psi, f)?;
                let ta = self.iso(psi, arg)?;
                match self.shallow_iso(&tf) {
                    IsoType::Arrow(p, r) => {
                        self.unify_iso(&p, &ta)?;
                        Ok(*r)
                    }
                    IsoType::Meta(_) => {
                        let r = self.fresh_iso();
                        self.unify_iso(&tf, &IsoType::arrow(ta, r.clone()))?;
                        Ok(r)
                    }
                    g @ IsoType::Ground(..) => Err(err(
                        E_TYPE_MISMATCH,
                        format!(
                            "iso of ground type {} cannot be applied to an iso",
                            pretty_iso_type(&self.resolve_iso(&g))
                        ),
                    )),
                }
            }
            Iso::Fix(phi, body) | Iso::NFix(_, phi, body) => {
                let t = self.fresh_iso();
                let mut inner = psi.clone();
                inner.insert(phi.clone(), t.clone());
                let tb = self.iso(&inner, body)?;
                self.unify_iso(&t, &tb)?;
                Ok(t)
            }
            Iso::Ann(u, ann) => {
                let mut metas = BTreeMap::new();
                let declared = self.instantiate(ann, &mut metas, false);
                let found = self.iso(psi, u)?;
                self.unify_iso(&declared, &found)?;
                let resolved = self.resolve_iso(&declared);
                let mut rigid = BTreeMap::new();
                Ok(self.instantiate(&resolved, &mut rigid, true))
            }
        }
    }

    fn require_quantum(&self, what: &str) -> Result<(), Diagnostic> {
        if self.dialect == Dialect::Classical {
            return Err(err(E_DIALECT, format!("{what} belong to the quantum dialect")));
        }
        Ok(())
    }

    /// Replaces `'a` annotation metas by fresh metas; with `free_too`, free
    /// type variables are instantiated as well.
    fn instantiate(&mut self, t: &IsoType, seen: &mut BTreeMap<String, Type>, free_too: bool) -> IsoType {
        match t {
            IsoType::Ground(a, b) => IsoType::Ground(
                self.instantiate_ty(a, seen, free_too),
                self.instantiate_ty(b, seen, free_too),
            ),
            IsoType::Arrow(a, b) => {
                IsoType::arrow(self.instantiate(a, seen, free_too), self.instantiate(b, seen, free_too))
            }
            IsoType::Meta(_) => t.clone(),
        }
    }

    fn instantiate_ty(&mut self, t: &Type, seen: &mut BTreeMap<String, Type>, free_too: bool) -> Type {
        let mut out = t.clone();
        for x in t.free_vars() {
            if x.starts_with('\'') || free_too {
                let m = match seen.get(&x) {
                    Some(m) => m.clone(),
                    None => {
                        let m = self.fresh();
                        seen.insert(x.clone(), m.clone());
                        m
                    }
                };
                out = out.subst(&x, &m);
            }
        }
        out
    }

    fn clause_env(&mut self, psi: &BTreeMap<String, IsoType>, lhs: &Term) -> Result<Env, Diagnostic> {
        let vars = distinct_vars(lhs)?;
        let mut lin = BTreeMap::new();
        for x in vars {
            let m = self.fresh();
            lin.insert(x, m);
        }
        Ok(Env { lin, isos: psi.clone() })
    }

    fn clause_vars(&self, lhs: &Term, rhs: &Term) -> Result<(), Diagnostic> {
        let l = distinct_vars(lhs)?;
        let r = linear_usage(rhs)?;
        if l != r {
            let missing: Vec<_> = l.difference(&r).cloned().collect();
            let extra: Vec<_> = r.difference(&l).cloned().collect();
            let mut parts = Vec::new();
            if !missing.is_empty() {
                parts.push(format!("unused on the right: `{}`", missing.join("`, `")));
            }
            if !extra.is_empty() {
                parts.push(format!("unbound on the right: `{}`", extra.join("`, `")));
            }
            return Err(err(
                E_CLAUSE_VARS,
                format!(
                    "clause `{} <-> {}` must use the same variables on both sides ({})",
                    short(&pretty_term(lhs)),
                    short(&pretty_term(rhs)),
                    parts.join("; ")
                ),
            ));
        }
        Ok(())
    }

    fn quantum_clauses(
        &mut self,
        psi: &BTreeMap<String, IsoType>,
        cs: &'a [(Term, Term)],
    ) -> Result<IsoType, Diagnostic> {
        let a = self.fresh();
        let b = self.fresh();
        for (l, r) in cs {
            if !l.is_basis_value() {
                return Err(err(
                    E_MALFORMED,
                    format!("clause pattern `{}` is not a basis value", short(&pretty_term(l))),
                ));
            }
            if !is_expression(r) {
                return Err(err(
                    E_MALFORMED,
                    format!(
                        "clause body `{}` must be a linear combination of basis values",
                        short(&pretty_term(r))
                    ),
                ));
            }
            self.clause_vars(l, r)?;
            let env = self.clause_env(psi, l)?;
            self.term(&env, l, &a)?;
            self.term(&env, r, &b)?;
        }
        let ta = self.resolve(&a);
        let tb = self.resolve(&b);
        let lhs: Vec<Term> = cs.iter().map(|(l, _)| l.clone()).collect();
        let rhs: Vec<Term> = cs.iter().map(|(_, r)| r.clone()).collect();
        if !matches!(check_od(&ta, &lhs, OdKind::Basis), Ok(true)) {
            return Err(err(
                E_OD,
                format!(
                    "clause patterns are not an orthogonal decomposition of {}",
                    pretty_type(&ta)
                ),
            ));
        }
        if !matches!(check_od(&tb, &rhs, OdKind::Extended), Ok(true)) {
            if od_ext_fails_only_on_unitarity(&tb, &rhs) {
                return Err(err(
                    E_NON_UNITARY,
                    "coefficient matrix of the clause bodies is not unitary",
                ));
            }
            return Err(err(
                E_OD_EXT,
                format!(
                    "clause bodies are not an extended orthogonal decomposition of {}",
                    pretty_type(&tb)
                ),
            ));
        }
        Ok(IsoType::Ground(a, b))
    }

    fn classical_clauses(
        &mut self,
        psi: &BTreeMap<String, IsoType>,
        cs: &'a [(Term, Term)],
    ) -> Result<IsoType, Diagnostic> {
        let a = self.fresh();
        let b = self.fresh();
        for (l, r) in cs {
            if !l.is_value() {
                return Err(err(
                    E_MALFORMED,
                    format!("clause pattern `{}` is not a value", short(&pretty_term(l))),
                ));
            }
            self.clause_vars(l, r)?;
            let env = self.clause_env(psi, l)?;
            self.term(&env, l, &a)?;
            self.term(&env, r, &b)?;
        }
        let lhs: Vec<Term> = cs.iter().map(|(l, _)| l.clone()).collect();
        let rhs: Vec<Term> = cs.iter().map(|(_, r)| r.clone()).collect();
        if !pairwise_orthogonal(&lhs, Dialect::Classical) {
            return Err(err(E_OVERLAP, "clause patterns overlap"));
        }
        if !pairwise_orthogonal(&rhs, Dialect::Classical) {
            return Err(err(E_OVERLAP, "clause bodies overlap"));
        }
        Ok(IsoType::Ground(a, b))
    }
}

fn max_meta(t: &Type) -> u32 {
    match t {
        Type::Meta(n) => *n,
        Type::Sum(a, b) | Type::Tensor(a, b) => max_meta(a).max(max_meta(b)),
        Type::Mu(_, b) => max_meta(b),
        _ => 0,
    }
}

fn iso_contains_meta(t: &IsoType, m: u32) -> bool {
    match t {
        IsoType::Meta(n) => *n == m,
        IsoType::Arrow(a, b) => iso_contains_meta(a, m) || iso_contains_meta(b, m),
        IsoType::Ground(..) => false,
    }
}

/// Quantum clause bodies: basis values combined linearly, without
/// applications.
fn is_expression(t: &Term) -> bool {
    match t {
        Term::Unit | Term::Var(_) | Term::Zero => true,
        Term::InL(u) | Term::InR(u) | Term::Suc(u) => is_expression(u),
        Term::Pair(a, b) => is_expression(a) && is_expression(b),
        Term::Sum(ps) => ps.iter().all(|(_, u)| is_expression(u)),
        Term::Fold(_) | Term::App(..) | Term::Let(..) => false,
    }
}

fn short(s: &str) -> String {
    if s.chars().count() > 60 {
        let cut: String = s.chars().take(57).collect();
        format!("{cut}...")
    } else {
        s.to_string()
    }
}

fn dialect_error(d: Dialect, msg: String) -> Diagnostic {
    err(E_DIALECT, format!("not in the {d} dialect: {msg}"))
}

fn check_iso_type_dialect(t: &IsoType, d: Dialect) -> Result<(), Diagnostic> {
    match t {
        IsoType::Ground(a, b) => {
            for ty in [a, b] {
                if d == Dialect::Quantum {
                    if let Err(e) = quantum_annotation_ok(ty) {
                        return Err(dialect_error(d, e));
                    }
                } else {
                    ty.check_dialect(d).map_err(|e| dialect_error(d, e))?;
                }
            }
            Ok(())
        }
        IsoType::Arrow(a, b) => {
            if d == Dialect::Quantum {
                return Err(dialect_error(
                    d,
                    "iso function types belong to the classical dialect".into(),
                ));
            }
            check_iso_type_dialect(a, d)?;
            check_iso_type_dialect(b, d)
        }
        IsoType::Meta(_) => Ok(()),
    }
}

/// Quantum annotations may mention type variables but no recursive types.
fn quantum_annotation_ok(t: &Type) -> Result<(), String> {
    match t {
        Type::Mu(..) => Err("recursive types are not available in the quantum dialect".into()),
        Type::Sum(a, b) | Type::Tensor(a, b) => {
            quantum_annotation_ok(a)?;
            quantum_annotation_ok(b)
        }
        _ => Ok(()),
    }
}

fn iso_annotations_ok(w: &Iso, d: Dialect) -> Result<(), Diagnostic> {
    let mut result = Ok(());
    visit_isos(w, &mut |u| {
        if let Iso::Ann(_, t) = u {
            if result.is_ok() {
                result = check_iso_type_dialect(t, d);
            }
        }
    });
    result
}

fn visit_isos(w: &Iso, f: &mut dyn FnMut(&Iso)) {
    f(w);
    match w {
        Iso::Clauses(cs) => {
            for (l, r) in cs {
                visit_term_isos(l, f);
                visit_term_isos(r, f);
            }
        }
        Iso::Tensor(a, b) | Iso::Sum(a, b) | Iso::Compose(a, b) | Iso::App(a, b) => {
            visit_isos(a, f);
            visit_isos(b, f);
        }
        Iso::Inverse(a) | Iso::Ctrl(a) | Iso::Ann(a, _) => visit_isos(a, f),
        Iso::Lambda(_, b) | Iso::Fix(_, b) | Iso::NFix(_, _, b) => visit_isos(b, f),
        Iso::Var(_) | Iso::Omega => {}
    }
}

fn visit_term_isos(t: &Term, f: &mut dyn FnMut(&Iso)) {
    match t {
        Term::App(w, u) => {
            visit_isos(w, f);
            visit_term_isos(u, f);
        }
        Term::InL(u) | Term::InR(u) | Term::Suc(u) | Term::Fold(u) => visit_term_isos(u, f),
        Term::Pair(a, b) => {
            visit_term_isos(a, f);
            visit_term_isos(b, f);
        }
        Term::Let(_, a, b) => {
            visit_term_isos(a, f);
            visit_term_isos(b, f);
        }
        Term::Sum(ps) => {
            for (_, u) in ps {
                visit_term_isos(u, f);
            }
        }
        Term::Unit | Term::Var(_) | Term::Zero => {}
    }
}

fn term_dialect(t: &Term, d: Dialect) -> Result<(), Diagnostic> {
    t.check_dialect(d).map_err(|e| dialect_error(d, e))?;
    let mut result = Ok(());
    visit_term_isos(t, &mut |u| {
        if let Iso::Ann(_, ty) = u {
            if result.is_ok() {
                result = check_iso_type_dialect(ty, d);
            }
        }
    });
    result
}

fn iso_dialect(w: &Iso, d: Dialect) -> Result<(), Diagnostic> {
    w.check_dialect(d).map_err(|e| dialect_error(d, e))?;
    iso_annotations_ok(w, d)
}

// ---- entry points ----

fn env_of(ctx: &Context) -> Env {
    Env {
        lin: ctx.linear.clone(),
        isos: ctx.isos.clone(),
    }
}

fn check_consumed(ctx: &Context, used: &BTreeSet<String>) -> Result<(), Diagnostic> {
    for x in ctx.linear.keys() {
        if !used.contains(x) {
            return Err(err(E_UNUSED_VAR, format!("linear variable `{x}` is never used")));
        }
    }
    Ok(())
}

/// Infers the type of `t` under `ctx`, consuming every linear variable
/// exactly once. Unconstrained parts of the type are left as metas.
pub fn typecheck_term(ctx: &Context, t: &Term, dialect: Dialect) -> Result<Type, Diagnostic> {
    term_dialect(t, dialect)?;
    let used = linear_usage(t)?;
    let mut ck = Checker::new(dialect);
    let ty = ck.fresh();
    ck.term(&env_of(ctx), t, &ty)?;
    ck.flush()?;
    check_consumed(ctx, &used)?;
    Ok(ck.resolve(&ty))
}

/// Checks `t` against a known type.
pub fn check_term(ctx: &Context, t: &Term, ty: &Type, dialect: Dialect) -> Result<(), Diagnostic> {
    term_dialect(t, dialect)?;
    let used = linear_usage(t)?;
    let mut ck = Checker::new(dialect);
    ck.next = max_meta(ty);
    for v in ctx.linear.values() {
        ck.next = ck.next.max(max_meta(v));
    }
    ck.term(&env_of(ctx), t, ty)?;
    ck.flush()?;
    check_consumed(ctx, &used)
}

/// Checks a closed term against a known type.
pub fn check_term_at(t: &Term, ty: &Type, dialect: Dialect) -> Result<(), Diagnostic> {
    check_term(&Context::new(), t, ty, dialect)
}

pub fn typecheck_iso(psi: &Context, w: &Iso, dialect: Dialect) -> Result<IsoType, Diagnostic> {
    iso_dialect(w, dialect)?;
    let mut ck = Checker::new(dialect);
    let t = ck.iso(&psi.isos, w)?;
    ck.flush()?;
    Ok(ck.resolve_iso(&t))
}

/// Checks an iso against a known iso type.
pub fn check_iso_at(w: &Iso, ty: &IsoType, dialect: Dialect) -> Result<(), Diagnostic> {
    iso_dialect(w, dialect)?;
    let mut ck = Checker::new(dialect);
    let t = ck.iso(&BTreeMap::new(), w)?;
    let mut metas = BTreeMap::new();
    let declared = ck.instantiate(ty, &mut metas, false);
    ck.unify_iso(&declared, &t)?;
    ck.flush()
}

/// Annotates every clause iso with its inferred type, with metas and type
/// variables turned into annotation metas. Reducts of an elaborated term stay
/// checkable after the annotations of enclosing isos are consumed.
pub fn elaborate_term(t: &Term, dialect: Dialect) -> Result<Term, Diagnostic> {
    term_dialect(t, dialect)?;
    let used = linear_usage(t)?;
    let mut ck = Checker::new(dialect);
    let ty = ck.fresh();
    ck.term(&env_of(&Context::new()), t, &ty)?;
    ck.flush()?;
    check_consumed(&Context::new(), &used)?;
    Ok(annotate_term(&ck, t))
}

pub fn elaborate_iso(w: &Iso, dialect: Dialect) -> Result<Iso, Diagnostic> {
    iso_dialect(w, dialect)?;
    let mut ck = Checker::new(dialect);
    ck.iso(&BTreeMap::new(), w)?;
    ck.flush()?;
    Ok(annotate_iso(&ck, w))
}

fn annotate_term(ck: &Checker, t: &Term) -> Term {
    t.map_isos(&mut |w| annotate_iso(ck, w))
}

fn annotate_iso(ck: &Checker, w: &Iso) -> Iso {
    let rec = |u: &Iso| Box::new(annotate_iso(ck, u));
    match w {
        Iso::Clauses(cs) => {
            let inner = Iso::Clauses(cs.iter().map(|(l, r)| (l.clone(), annotate_term(ck, r))).collect());
            match ck.iso_types.get(&(w as *const Iso as usize)) {
                Some(t) => Iso::Ann(Box::new(inner), generalize(&ck.resolve_iso(t))),
                None => inner,
            }
        }
        Iso::Tensor(a, b) => Iso::Tensor(rec(a), rec(b)),
        Iso::Sum(a, b) => Iso::Sum(rec(a), rec(b)),
        Iso::Compose(a, b) => Iso::Compose(rec(a), rec(b)),
        Iso::App(a, b) => Iso::App(rec(a), rec(b)),
        Iso::Inverse(a) => Iso::Inverse(rec(a)),
        Iso::Ctrl(a) => Iso::Ctrl(rec(a)),
        Iso::Ann(a, t) => Iso::Ann(rec(a), t.clone()),
        Iso::Lambda(x, b) => Iso::Lambda(x.clone(), rec(b)),
        Iso::Fix(x, b) => Iso::Fix(x.clone(), rec(b)),
        Iso::NFix(n, x, b) => Iso::NFix(*n, x.clone(), rec(b)),
        Iso::Var(_) | Iso::Omega => w.clone(),
    }
}

fn generalize(t: &IsoType) -> IsoType {
    fn ty(t: &Type, bound: &mut Vec<String>) -> Type {
        match t {
            Type::Meta(m) => Type::Var(format!("'_{m}")),
            Type::Var(x) if !bound.contains(x) && !x.starts_with('\'') => Type::Var(format!("'{x}")),
            Type::Sum(a, b) => Type::sum(ty(a, bound), ty(b, bound)),
            Type::Tensor(a, b) => Type::tensor(ty(a, bound), ty(b, bound)),
            Type::Mu(x, b) => {
                bound.push(x.clone());
                let body = ty(b, bound);
                bound.pop();
                Type::Mu(x.clone(), Box::new(body))
            }
            _ => t.clone(),
        }
    }
    match t {
        IsoType::Ground(a, b) => IsoType::Ground(ty(a, &mut Vec::new()), ty(b, &mut Vec::new())),
        IsoType::Arrow(a, b) => IsoType::arrow(generalize(a), generalize(b)),
        IsoType::Meta(_) => t.clone(),
    }
}

/// Resolved types of the nodes of one checked tree, keyed by node address.
/// Lookups must use references into that same tree.
#[derive(Clone, Debug, Default)]
pub struct TypeTable {
    terms: HashMap<usize, Type>,
    isos: HashMap<usize, IsoType>,
}

impl TypeTable {
    pub fn term(&self, t: &Term) -> Option<&Type> {
        self.terms.get(&(t as *const Term as usize))
    }

    pub fn iso(&self, w: &Iso) -> Option<&IsoType> {
        self.isos.get(&(w as *const Iso as usize))
    }

    fn from_checker(ck: &Checker) -> Self {
        TypeTable {
            terms: ck
                .term_types
                .iter()
                .map(|(k, t)| (*k, default_metas(&ck.resolve(t))))
                .collect(),
            isos: ck
                .iso_types
                .iter()
                .map(|(k, t)| (*k, default_iso_metas(&ck.resolve_iso(t))))
                .collect(),
        }
    }
}

/// Types every node of `t`; unconstrained metas default to `I`.
pub fn type_table(ctx: &Context, t: &Term, dialect: Dialect) -> Result<(Type, TypeTable), Diagnostic> {
    term_dialect(t, dialect)?;
    let used = linear_usage(t)?;
    let mut ck = Checker::new(dialect);
    for v in ctx.linear.values() {
        ck.next = ck.next.max(max_meta(v));
    }
    let ty = ck.fresh();
    ck.term(&env_of(ctx), t, &ty)?;
    ck.flush()?;
    check_consumed(ctx, &used)?;
    Ok((default_metas(&ck.resolve(&ty)), TypeTable::from_checker(&ck)))
}

/// Types every node of `w`, optionally fixing its ground type first.
pub fn iso_type_table(w: &Iso, at: Option<&IsoType>, dialect: Dialect) -> Result<(IsoType, TypeTable), Diagnostic> {
    iso_dialect(w, dialect)?;
    let mut ck = Checker::new(dialect);
    if let Some(IsoType::Ground(a, b)) = at {
        ck.next = max_meta(a).max(max_meta(b));
    }
    let t = ck.iso(&BTreeMap::new(), w)?;
    if let Some(at) = at {
        ck.unify_iso(at, &t)?;
    }
    ck.flush()?;
    Ok((default_iso_metas(&ck.resolve_iso(&t)), TypeTable::from_checker(&ck)))
}

/// Replaces remaining metas by the unit type.
pub fn default_metas(t: &Type) -> Type {
    match t {
        Type::Meta(_) => Type::Unit,
        Type::Sum(a, b) => Type::sum(default_metas(a), default_metas(b)),
        Type::Tensor(a, b) => Type::tensor(default_metas(a), default_metas(b)),
        Type::Mu(x, b) => Type::Mu(x.clone(), Box::new(default_metas(b))),
        _ => t.clone(),
    }
}

pub fn default_iso_metas(t: &IsoType) -> IsoType {
    match t {
        IsoType::Ground(a, b) => IsoType::Ground(default_metas(a), default_metas(b)),
        IsoType::Arrow(a, b) => IsoType::arrow(default_iso_metas(a), default_iso_metas(b)),
        IsoType::Meta(_) => IsoType::Ground(Type::Unit, Type::Unit),
    }
}

/// Renames remaining metas to `'a`, `'b`, ... in order of appearance.
pub fn name_metas(t: &IsoType) -> IsoType {
    struct Namer {
        types: BTreeMap<u32, String>,
        isos: BTreeMap<u32, IsoType>,
        count: usize,
    }
    impl Namer {
        fn next(&mut self) -> String {
            self.count += 1;
            meta_name(self.count - 1)
        }
        fn ty(&mut self, t: &Type) -> Type {
            match t {
                Type::Meta(m) => {
                    if let Some(n) = self.types.get(m) {
                        return Type::Var(n.clone());
                    }
                    let n = self.next();
                    self.types.insert(*m, n.clone());
                    Type::Var(n)
                }
                Type::Sum(a, b) => Type::sum(self.ty(a), self.ty(b)),
                Type::Tensor(a, b) => Type::tensor(self.ty(a), self.ty(b)),
                Type::Mu(x, b) => Type::Mu(x.clone(), Box::new(self.ty(b))),
                _ => t.clone(),
            }
        }
        fn iso(&mut self, t: &IsoType) -> IsoType {
            match t {
                IsoType::Ground(a, b) => IsoType::Ground(self.ty(a), self.ty(b)),
                IsoType::Arrow(a, b) => IsoType::arrow(self.iso(a), self.iso(b)),
                IsoType::Meta(m) => {
                    if let Some(g) = self.isos.get(m) {
                        return g.clone();
                    }
                    let g = IsoType::Ground(Type::Var(self.next()), Type::Var(self.next()));
                    self.isos.insert(*m, g.clone());
                    g
                }
            }
        }
    }
    Namer {
        types: BTreeMap::new(),
        isos: BTreeMap::new(),
        count: 0,
    }
    .iso(t)
}

fn meta_name(n: usize) -> String {
    let letter = (b'a' + (n % 26) as u8) as char;
    if n < 26 {
        format!("'{letter}")
    } else {
        format!("'{letter}{}", n / 26)
    }
}

/// Types of every declaration of a checked program.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProgramInfo {
    pub isos: BTreeMap<String, IsoType>,
    pub vals: BTreeMap<String, Type>,
    pub main: Option<Type>,
}

/// Checks every declaration in order. Isos are checked through their
/// inlined closed form, so each use site of a declaration is re-typed.
pub fn check_program(p: &SourceProgram) -> Result<ProgramInfo, Diagnostic> {
    let d = p.dialect;
    let closed = p.closed_isos();
    let mut info = ProgramInfo::default();
    for decl in &p.decls {
        let at = |e: Diagnostic| Diagnostic::new(decl.pos, e.code, e.message);
        match &decl.kind {
            DeclKind::Iso { .. } => {
                let w = &closed[&decl.name];
                let t = typecheck_iso(&Context::new(), w, d).map_err(at)?;
                info.isos.insert(decl.name.clone(), t);
            }
            DeclKind::Val { term, ty } | DeclKind::Main { term, ty } => {
                let t = p.close_term(term);
                let found = match ty {
                    Some(expected) => {
                        let expected = strip_annotation_metas(expected);
                        check_term_at(&t, &expected, d).map_err(at)?;
                        expected
                    }
                    None => typecheck_term(&Context::new(), &t, d).map_err(at)?,
                };
                if matches!(decl.kind, DeclKind::Main { .. }) {
                    info.main = Some(found);
                } else {
                    info.vals.insert(decl.name.clone(), found);
                }
            }
        }
    }
    Ok(info)
}

fn strip_annotation_metas(t: &Type) -> Type {
    let mut out = t.clone();
    for (i, x) in t.free_vars().into_iter().enumerate() {
        if x.starts_with('\'') {
            out = out.subst(&x, &Type::Meta(1_000_000 + i as u32));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, parse_iso, parse_iso_type, parse_term, parse_type};

    fn q(s: &str) -> Term {
        parse_term(s, Dialect::Quantum, &[]).unwrap()
    }

    fn qi(s: &str) -> Iso {
        parse_iso(s, Dialect::Quantum, &[]).unwrap()
    }

    fn ci(s: &str) -> Iso {
        parse_iso(s, Dialect::Classical, &[]).unwrap()
    }

    fn ty(s: &str) -> Type {
        parse_type(s).unwrap()
    }

    fn code_of<T: std::fmt::Debug>(r: Result<T, Diagnostic>) -> &'static str {
        r.unwrap_err().code
    }

    #[test]
    fn variable_rule() {
        let ctx = Context::new().with_var("x", ty("I + I"));
        assert_eq!(typecheck_term(&ctx, &var("x"), Dialect::Quantum).unwrap(), ty("I + I"));
    }

    #[test]
    fn unused_and_unbound_variables() {
        let ctx = Context::new().with_var("x", Type::Unit);
        assert_eq!(
            code_of(typecheck_term(&ctx, &Term::Unit, Dialect::Quantum)),
            E_UNUSED_VAR
        );
        assert_eq!(
            code_of(typecheck_term(&Context::new(), &var("y"), Dialect::Quantum)),
            E_UNBOUND_VAR
        );
    }

    #[test]
    fn duplicated_linear_variable() {
        let ctx = Context::new().with_var("x", Type::Unit);
        let t = pair(var("x"), var("x"));
        assert_eq!(code_of(typecheck_term(&ctx, &t, Dialect::Quantum)), E_DUP_VAR);
    }

    #[test]
    fn non_orthogonal_superposition() {
        let t = q("1/sqrt2 * inl * + 1/sqrt2 * inl *");
        assert_eq!(
            code_of(typecheck_term(&Context::new(), &t, Dialect::Quantum)),
            E_NON_ORTHOGONAL
        );
    }

    #[test]
    fn norm_violation() {
        let t = q("0.5 * inl * + 0.5 * inr *");
        assert_eq!(code_of(typecheck_term(&Context::new(), &t, Dialect::Quantum)), E_NORM);
    }

    #[test]
    fn ket_plus_types() {
        let t = q("1/sqrt2 * inl * + 1/sqrt2 * inr *");
        let found = typecheck_term(&Context::new(), &t, Dialect::Quantum).unwrap();
        assert_eq!(found, ty("I + I"));
    }

    #[test]
    fn hadamard_type() {
        let h = qi("{| inl * <-> 1/sqrt2 * inl * + 1/sqrt2 * inr * | inr * <-> 1/sqrt2 * inl * - 1/sqrt2 * inr * }");
        let t = typecheck_iso(&Context::new(), &h, Dialect::Quantum).unwrap();
        assert_eq!(t, IsoType::Ground(Type::qubit(), Type::qubit()));
    }

    #[test]
    fn non_unitary_clause_bodies() {
        let w = qi("{| inl * <-> 0.6 * inl * + 0.8 * inr * | inr * <-> 0.6 * inl * + 0.8 * inr * }");
        let e = typecheck_iso(&Context::new(), &w, Dialect::Quantum).unwrap_err();
        assert!(e.code == E_NON_UNITARY || e.code == E_NON_ORTHOGONAL, "{e}");
        let w = qi("{| inl * <-> 0.6 * inl * + 0.8 * inr * | inr * <-> 0.8 * inl * + 0.6 * inr * }");
        assert_eq!(
            code_of(typecheck_iso(&Context::new(), &w, Dialect::Quantum)),
            E_NON_UNITARY
        );
    }

    #[test]
    fn od_failures() {
        let w = qi("{| inl * <-> inl * }");
        assert_eq!(code_of(typecheck_iso(&Context::new(), &w, Dialect::Quantum)), E_OD);
        let w = qi("{| inl * <-> inl * | inr * <-> inl * }");
        let e = typecheck_iso(&Context::new(), &w, Dialect::Quantum).unwrap_err();
        assert_eq!(e.code, E_OD_EXT);
    }

    #[test]
    fn quantum_swap_and_control() {
        let swap = qi("{| inl x <-> inr x | inr x <-> inl x }");
        let t = typecheck_iso(&Context::new(), &swap, Dialect::Quantum).unwrap();
        match t {
            IsoType::Ground(Type::Sum(a, b), Type::Sum(c, d)) => {
                assert_eq!(a, d);
                assert_eq!(b, c);
            }
            other => panic!("{other:?}"),
        }
        let not = qi("ctrl {| inl * <-> inr * | inr * <-> inl * }");
        let t = typecheck_iso(&Context::new(), &not, Dialect::Quantum).unwrap();
        let q2 = Type::tensor(Type::qubit(), Type::qubit());
        assert_eq!(t, IsoType::Ground(q2.clone(), q2));
    }

    #[test]
    fn tensor_pattern_od() {
        let w = qi("{| (inl *, x) <-> (inl *, x) | (inr *, x) <-> (inr *, x) }");
        assert!(typecheck_iso(&Context::new(), &w, Dialect::Quantum).is_ok());
    }

    #[test]
    fn clause_variable_mismatch() {
        let w = qi("{| inl x <-> inl * | inr x <-> inr x }");
        assert_eq!(
            code_of(typecheck_iso(&Context::new(), &w, Dialect::Quantum)),
            E_CLAUSE_VARS
        );
    }

    #[test]
    fn arrow_typed_application() {
        let src = "iso id : (I <-> I) -> (I <-> I) = \\f. f;\nmain = id *;";
        let p = parse(src, Dialect::Classical).unwrap();
        let e = check_program(&p).unwrap_err();
        assert_eq!(e.code, E_ARROW_APP);
        assert_eq!(e.pos.line, 2);
    }

    #[test]
    fn fix_application_is_well_typed() {
        let t = parse_term("(fix f. f) (inl *)", Dialect::Classical, &[]).unwrap();
        let found = typecheck_term(&Context::new(), &t, Dialect::Classical).unwrap();
        assert!(found.has_meta());
        check_term_at(&t, &ty("I + I"), Dialect::Classical).unwrap();
    }

    #[test]
    fn non_exhaustive_classical_iso() {
        let w = ci("{| inr * <-> inl * }");
        let t = typecheck_iso(&Context::new(), &w, Dialect::Classical).unwrap();
        let t = default_iso_metas(&t);
        assert_eq!(t, IsoType::Ground(Type::qubit(), Type::qubit()));
    }

    #[test]
    fn classical_overlap() {
        let w = ci("{| x <-> inl x | inl y <-> inr y }");
        assert_eq!(
            code_of(typecheck_iso(&Context::new(), &w, Dialect::Classical)),
            E_OVERLAP
        );
    }

    #[test]
    fn map_type() {
        let src = "iso map : (A <-> B) -> ([A] <-> [B]) = \\g. fix f. {| [] <-> [] | h :: t <-> let h2 = g h in let t2 = f t in h2 :: t2 };";
        let p = parse(src, Dialect::Classical).unwrap();
        let info = check_program(&p).unwrap();
        let expected = parse_iso_type("(A <-> B) -> ([A] <-> [B])").unwrap();
        let found = name_metas(&info.isos["map"]);
        let renamed = parse_iso_type("('a <-> 'b) -> (['a] <-> ['b])").unwrap();
        assert!(found.alpha_eq(&renamed), "{found:?}");
        check_iso_at(&p.closed_iso("map").unwrap(), &expected, Dialect::Classical).unwrap();
    }

    #[test]
    fn map_instantiates_per_use() {
        let src = "iso map : (A <-> B) -> ([A] <-> [B]) = \\g. fix f. {| [] <-> [] | h :: t <-> let h2 = g h in let t2 = f t in h2 :: t2 };\n\
                   iso succ : nat <-> nat = {| n <-> fold (inr n) };\n\
                   iso swap : (I + I) <-> (I + I) = {| inl * <-> inr * | inr * <-> inl * };\n\
                   main = (map succ) [#1, #2];\n\
                   val b = (map swap) [inl *];";
        let p = parse(src, Dialect::Classical).unwrap();
        let info = check_program(&p).unwrap();
        assert_eq!(info.main.unwrap(), Type::list(Type::nat()));
    }

    #[test]
    fn rigid_annotation_is_enforced() {
        let src = "iso bad : A <-> B = {| x <-> x };";
        let p = parse(src, Dialect::Classical).unwrap();
        assert_eq!(check_program(&p).unwrap_err().code, E_TYPE_MISMATCH);
    }

    #[test]
    fn ambiguous_fold() {
        let w = ci("{| x <-> fold (inr x) }");
        assert_eq!(
            code_of(typecheck_iso(&Context::new(), &w, Dialect::Classical)),
            E_AMBIGUOUS
        );
    }

    #[test]
    fn dialect_violations() {
        let w = Iso::Ctrl(Box::new(ci("{| x <-> x }")));
        assert_eq!(
            code_of(typecheck_iso(&Context::new(), &w, Dialect::Classical)),
            E_DIALECT
        );
        let t = Term::Sum(vec![(real(1.0), Term::Unit)]);
        assert_eq!(
            code_of(typecheck_term(&Context::new(), &t, Dialect::Classical)),
            E_DIALECT
        );
    }

    #[test]
    fn let_linearity() {
        let t = parse_term("let (a, b) = x in (b, a)", Dialect::Classical, &[]).unwrap();
        let ctx = Context::new().with_var("x", ty("I * (I + I)"));
        assert_eq!(typecheck_term(&ctx, &t, Dialect::Classical).unwrap(), ty("(I + I) * I"));
        let t = parse_term("let (a, b) = x in a", Dialect::Classical, &[]).unwrap();
        assert_eq!(code_of(typecheck_term(&ctx, &t, Dialect::Classical)), E_UNUSED_VAR);
    }

    #[test]
    fn compose_and_inverse() {
        let w = qi("inv {| inl * <-> inr * | inr * <-> inl * } <<< {| inl x <-> inr x | inr x <-> inl x }");
        let t = typecheck_iso(&Context::new(), &w, Dialect::Quantum).unwrap();
        assert_eq!(t, IsoType::Ground(Type::qubit(), Type::qubit()));
    }

    #[test]
    fn application_in_quantum_clause_body_is_malformed() {
        let w = qi("{| x <-> {| y <-> y } x }");
        assert_eq!(
            code_of(typecheck_iso(&Context::new(), &w, Dialect::Quantum)),
            E_MALFORMED
        );
    }
}
