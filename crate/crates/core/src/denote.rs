//! Matrix semantics of the quantum dialect over enumerated bases (with `Nat`
//! truncated at a cutoff) and partial-injection tables for classical isos.

use crate::ast::*;
use crate::ceval::{self, Outcome};
use crate::diag::Diagnostic;
use crate::parser::{pretty_term, pretty_type};
use crate::typeck::{self, Context, TypeTable};
use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

pub const DEFAULT_CUTOFF: usize = 16;
const DENSE_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DenoteError {
    #[error("cutoff exceeded: {0}")]
    Cutoff(String),
    #[error("{}", .0.message)]
    Type(Diagnostic),
    #[error("no matrix semantics for {0}")]
    Unsupported(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("table is not injective: {0}")]
    NotInjective(String),
}

impl From<Diagnostic> for DenoteError {
    fn from(d: Diagnostic) -> Self {
        DenoteError::Type(d)
    }
}

// ---- matrices ----

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Dense(Vec<C64>),
    Sparse(BTreeMap<(usize, usize), C64>),
}

/// Complex matrix, stored densely below dimension 64 and sparsely above.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Storage,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        let data = if rows.max(cols) < DENSE_LIMIT {
            Storage::Dense(vec![zero(); rows * cols])
        } else {
            Storage::Sparse(BTreeMap::new())
        };
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.add_at(i, i, real(1.0));
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Matrix {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Matrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m.add_at(i, j, *v);
            }
        }
        m
    }

    pub fn column(v: &[C64]) -> Matrix {
        let mut m = Matrix::zeros(v.len(), 1);
        for (i, x) in v.iter().enumerate() {
            m.add_at(i, 0, *x);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.data, Storage::Sparse(_))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        match &self.data {
            Storage::Dense(v) => v[r * self.cols + c],
            Storage::Sparse(m) => m.get(&(r, c)).copied().unwrap_or_else(zero),
        }
    }

    pub fn add_at(&mut self, r: usize, c: usize, x: C64) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        match &mut self.data {
            Storage::Dense(v) => v[r * self.cols + c] += x,
            Storage::Sparse(m) => {
                let e = m.entry((r, c)).or_insert_with(zero);
                *e += x;
                if *e == zero() {
                    m.remove(&(r, c));
                }
            }
        }
    }

    /// Nonzero entries in row-major order.
    pub fn entries(&self) -> Vec<(usize, usize, C64)> {
        match &self.data {
            Storage::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != zero())
                .map(|(k, x)| (k / self.cols, k % self.cols, *x))
                .collect(),
            Storage::Sparse(m) => m.iter().map(|((r, c), x)| (*r, *c, *x)).collect(),
        }
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, DenoteError> {
        if self.cols != other.rows {
            return Err(DenoteError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        let mut by_row: Vec<Vec<(usize, C64)>> = vec![Vec::new(); other.rows];
        for (r, c, x) in other.entries() {
            by_row[r].push((c, x));
        }
        for (i, k, a) in self.entries() {
            for (j, b) in &by_row[k] {
                out.add_at(i, *j, a * b);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>, DenoteError> {
        if self.cols != v.len() {
            return Err(DenoteError::Dimension(format!(
                "{}x{} applied to a vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![zero(); self.rows];
        for (r, c, x) in self.entries() {
            out[r] += x * v[c];
        }
        Ok(out)
    }

    pub fn kron(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows * other.rows, self.cols * other.cols);
        let right = other.entries();
        for (i, j, a) in self.entries() {
            for (k, l, b) in &right {
                out.add_at(i * other.rows + k, j * other.cols + l, a * b);
            }
        }
        out
    }

    /// Block-diagonal matrix `self (+) other`.
    pub fn direct_sum(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows + other.rows, self.cols + other.cols);
        for (i, j, a) in self.entries() {
            out.add_at(i, j, a);
        }
        for (i, j, a) in other.entries() {
            out.add_at(self.rows + i, self.cols + j, a);
        }
        out
    }

    pub fn adjoint(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for (i, j, a) in self.entries() {
            out.add_at(j, i, a.conj());
        }
        out
    }

    pub fn scale(&self, a: C64) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for (i, j, x) in self.entries() {
            out.add_at(i, j, a * x);
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, DenoteError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(DenoteError::Dimension(format!(
                "{}x{} plus {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = self.clone();
        for (i, j, x) in other.entries() {
            out.add_at(i, j, x);
        }
        Ok(out)
    }

    /// Entrywise maximum of `|self - other|`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for (i, j, x) in self.entries() {
            worst = worst.max((x - other.get(i, j)).norm());
        }
        for (i, j, x) in other.entries() {
            worst = worst.max((self.get(i, j) - x).norm());
        }
        worst
    }

    /// `{"rows":R,"cols":C,"entries":[[r,c,re,im],...]}`, entries row-major.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .entries()
            .into_iter()
            .map(|(r, c, x)| serde_json::json!([r, c, x.re, x.im]))
            .collect();
        serde_json::json!({ "rows": self.rows, "cols": self.cols, "entries": entries })
    }
}

/// `max |M^dagger M - I|`.
pub fn isometry_residual(m: &Matrix) -> f64 {
    match m.adjoint().mul(m) {
        Ok(p) => p.max_abs_diff(&Matrix::identity(m.cols())),
        Err(_) => f64::INFINITY,
    }
}

/// Largest of the isometry residuals of `M` and `M^dagger`.
pub fn unitary_residual(m: &Matrix) -> f64 {
    if m.rows() != m.cols() {
        return f64::INFINITY;
    }
    isometry_residual(m).max(isometry_residual(&m.adjoint()))
}

pub fn check_isometry(m: &Matrix) -> bool {
    isometry_residual(m) < eps()
}

pub fn check_unitary(m: &Matrix) -> bool {
    unitary_residual(m) < eps()
}

// ---- bases ----

/// Closed basis values of a type in increasing basis order.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisEnumeration {
    pub ty: Type,
    pub cutoff: usize,
    pub elems: Vec<Term>,
}

impl BasisEnumeration {
    pub fn dim(&self) -> usize {
        self.elems.len()
    }

    pub fn index_of(&self, v: &Term) -> Option<usize> {
        self.elems.binary_search_by(|e| cmp_basis_unchecked(e, v)).ok()
    }
}

/// Quantum types enumerate their basis with `Nat` truncated to
/// `0..cutoff`; recursive classical types enumerate the closed values with at
/// most `cutoff` folds.
pub fn enumerate_basis(ty: &Type, cutoff: usize) -> Result<BasisEnumeration, DenoteError> {
    let mut elems: Vec<Term> = values_upto(ty, cutoff)?.into_iter().map(|(v, _)| v).collect();
    elems.sort_by(cmp_basis_unchecked);
    elems.dedup_by(|a, b| cmp_basis_unchecked(a, b) == Ordering::Equal);
    Ok(BasisEnumeration {
        ty: ty.clone(),
        cutoff,
        elems,
    })
}

fn values_upto(ty: &Type, budget: usize) -> Result<Vec<(Term, usize)>, DenoteError> {
    Ok(match ty {
        Type::Unit => vec![(Term::Unit, 0)],
        Type::Sum(a, b) => {
            let mut out: Vec<(Term, usize)> = values_upto(a, budget)?.into_iter().map(|(v, n)| (inl(v), n)).collect();
            out.extend(values_upto(b, budget)?.into_iter().map(|(v, n)| (inr(v), n)));
            out
        }
        Type::Tensor(a, b) => {
            let mut out = Vec::new();
            for (x, n) in values_upto(a, budget)? {
                for (y, m) in values_upto(b, budget - n)? {
                    out.push((pair(x.clone(), y), n + m));
                }
            }
            out
        }
        Type::Nat => (0..budget).map(|k| (qnumeral(k), 0)).collect(),
        Type::Mu(..) => {
            if budget == 0 {
                return Ok(Vec::new());
            }
            let unfolded = ty.unfold().expect("mu type");
            values_upto(&unfolded, budget - 1)?
                .into_iter()
                .map(|(v, n)| (fold(v), n + 1))
                .collect()
        }
        Type::Var(_) | Type::Meta(_) => {
            return Err(DenoteError::Unsupported(format!("the open type {}", pretty_type(ty))))
        }
    })
}

// ---- quantum semantics ----

struct Denoter {
    table: TypeTable,
    cutoff: usize,
    bases: RefCell<HashMap<Type, Rc<BasisEnumeration>>>,
}

impl Denoter {
    fn basis(&self, ty: &Type) -> Result<Rc<BasisEnumeration>, DenoteError> {
        if let Some(b) = self.bases.borrow().get(ty) {
            return Ok(b.clone());
        }
        let b = Rc::new(enumerate_basis(ty, self.cutoff)?);
        self.bases.borrow_mut().insert(ty.clone(), b.clone());
        Ok(b)
    }

    fn dim(&self, ty: &Type) -> Result<usize, DenoteError> {
        Ok(self.basis(ty)?.dim())
    }

    fn type_of(&self, t: &Term) -> Result<Type, DenoteError> {
        self.table
            .term(t)
            .cloned()
            .ok_or_else(|| DenoteError::Unsupported(format!("untyped subterm `{}`", pretty_term(t))))
    }

    fn iso_type_of(&self, w: &Iso) -> Result<(Type, Type), DenoteError> {
        match self.table.iso(w) {
            Some(IsoType::Ground(a, b)) => Ok((a.clone(), b.clone())),
            _ => Err(DenoteError::Unsupported("an iso without a ground type".into())),
        }
    }

    fn vec(&self, t: &Term, sigma: &BTreeMap<String, Term>) -> Result<Vec<C64>, DenoteError> {
        let ty = self.type_of(t)?;
        match t {
            Term::Unit => Ok(vec![real(1.0)]),
            Term::Var(x) => {
                let basis = self.basis(&ty)?;
                let v = sigma
                    .get(x)
                    .ok_or_else(|| DenoteError::Unsupported(format!("free variable `{x}`")))?;
                let idx = basis.index_of(v).ok_or_else(|| {
                    DenoteError::Cutoff(format!("`{}` lies outside the truncated basis", pretty_term(v)))
                })?;
                let mut out = vec![zero(); basis.dim()];
                out[idx] = real(1.0);
                Ok(out)
            }
            Term::InL(u) | Term::InR(u) => {
                let Type::Sum(l, r) = &ty else {
                    return Err(DenoteError::Unsupported(format!("injection at {}", pretty_type(&ty))));
                };
                let inner = self.vec(u, sigma)?;
                let (left, right) = (self.dim(l)?, self.dim(r)?);
                let mut out = vec![zero(); left + right];
                let offset = if matches!(t, Term::InL(_)) { 0 } else { left };
                out[offset..offset + inner.len()].copy_from_slice(&inner);
                Ok(out)
            }
            Term::Pair(a, b) => {
                let x = self.vec(a, sigma)?;
                let y = self.vec(b, sigma)?;
                let mut out = Vec::with_capacity(x.len() * y.len());
                for p in &x {
                    for q in &y {
                        out.push(p * q);
                    }
                }
                Ok(out)
            }
            Term::Zero => {
                if self.cutoff == 0 {
                    return Err(DenoteError::Cutoff("cutoff 0 leaves no room for `zero`".into()));
                }
                let mut out = vec![zero(); self.cutoff];
                out[0] = real(1.0);
                Ok(out)
            }
            Term::Suc(u) => {
                let inner = self.vec(u, sigma)?;
                if inner.last().is_some_and(|x| !is_zero(*x)) {
                    return Err(DenoteError::Cutoff(format!(
                        "`{}` leaves the space truncated at {}",
                        pretty_term(t),
                        self.cutoff
                    )));
                }
                let mut out = vec![zero(); inner.len()];
                out[1..].copy_from_slice(&inner[..inner.len() - 1]);
                Ok(out)
            }
            Term::Sum(ps) => {
                let mut out = vec![zero(); self.dim(&ty)?];
                for (a, u) in ps {
                    for (o, x) in out.iter_mut().zip(self.vec(u, sigma)?) {
                        *o += a * x;
                    }
                }
                Ok(out)
            }
            Term::App(w, u) => self.iso(w)?.mul_vec(&self.vec(u, sigma)?),
            Term::Fold(_) | Term::Let(..) => Err(DenoteError::Unsupported(format!(
                "the classical term `{}`",
                pretty_term(t)
            ))),
        }
    }

    fn iso(&self, w: &Iso) -> Result<Matrix, DenoteError> {
        let (a, b) = self.iso_type_of(w)?;
        match w {
            Iso::Clauses(cs) => {
                let mut m = Matrix::zeros(self.dim(&b)?, self.dim(&a)?);
                for (l, r) in cs {
                    for sigma in self.valuations(l)? {
                        let input = match self.vec(l, &sigma) {
                            Ok(v) => v,
                            Err(DenoteError::Cutoff(_)) => continue,
                            Err(e) => return Err(e),
                        };
                        let j = input.iter().position(|x| !is_zero(*x)).expect("basis vector");
                        for (i, x) in self.vec(r, &sigma)?.into_iter().enumerate() {
                            if !is_zero(x) {
                                m.add_at(i, j, x);
                            }
                        }
                    }
                }
                Ok(m)
            }
            Iso::Tensor(w1, w2) => Ok(self.iso(w1)?.kron(&self.iso(w2)?)),
            Iso::Sum(w1, w2) => Ok(self.iso(w1)?.direct_sum(&self.iso(w2)?)),
            Iso::Compose(outer, inner) => self.iso(outer)?.mul(&self.iso(inner)?),
            Iso::Inverse(u) => Ok(self.iso(u)?.adjoint()),
            Iso::Ctrl(u) => {
                let inner = self.iso(u)?;
                Ok(Matrix::identity(inner.cols()).direct_sum(&inner))
            }
            Iso::Ann(u, _) => self.iso(u),
            _ => Err(DenoteError::Unsupported(format!("`{}`", crate::parser::pretty_iso(w)))),
        }
    }

    /// Every assignment of basis values to the variables of a pattern.
    fn valuations(&self, pattern: &Term) -> Result<Vec<BTreeMap<String, Term>>, DenoteError> {
        let mut vars: Vec<(String, Type)> = Vec::new();
        collect_var_nodes(pattern, &mut |node| {
            if let Term::Var(x) = node {
                vars.push((x.clone(), self.table.term(node).cloned().unwrap_or(Type::Unit)));
            }
        });
        let mut out = vec![BTreeMap::new()];
        for (x, ty) in vars {
            let basis = self.basis(&ty)?;
            let mut next = Vec::with_capacity(out.len() * basis.dim());
            for sigma in &out {
                for v in &basis.elems {
                    let mut s = sigma.clone();
                    s.insert(x.clone(), v.clone());
                    next.push(s);
                }
            }
            out = next;
        }
        Ok(out)
    }
}

fn collect_var_nodes(t: &Term, f: &mut dyn FnMut(&Term)) {
    match t {
        Term::Var(_) => f(t),
        Term::InL(u) | Term::InR(u) | Term::Suc(u) | Term::Fold(u) => collect_var_nodes(u, f),
        Term::Pair(a, b) => {
            collect_var_nodes(a, f);
            collect_var_nodes(b, f);
        }
        _ => {}
    }
}

/// Drops annotations that mention type variables so that the annotated isos
/// are typed at their use site.
fn strip_polymorphic_annotations(w: &Iso) -> Iso {
    let rec = |u: &Iso| Box::new(strip_polymorphic_annotations(u));
    match w {
        Iso::Ann(u, t) => {
            if iso_type_is_closed(t) {
                Iso::Ann(rec(u), t.clone())
            } else {
                strip_polymorphic_annotations(u)
            }
        }
        Iso::Clauses(cs) => Iso::Clauses(cs.iter().map(|(l, r)| (l.clone(), strip_term(r))).collect()),
        Iso::Tensor(a, b) => Iso::Tensor(rec(a), rec(b)),
        Iso::Sum(a, b) => Iso::Sum(rec(a), rec(b)),
        Iso::Compose(a, b) => Iso::Compose(rec(a), rec(b)),
        Iso::App(a, b) => Iso::App(rec(a), rec(b)),
        Iso::Inverse(a) => Iso::Inverse(rec(a)),
        Iso::Ctrl(a) => Iso::Ctrl(rec(a)),
        Iso::Lambda(x, b) => Iso::Lambda(x.clone(), rec(b)),
        Iso::Fix(x, b) => Iso::Fix(x.clone(), rec(b)),
        Iso::NFix(n, x, b) => Iso::NFix(*n, x.clone(), rec(b)),
        Iso::Var(_) | Iso::Omega => w.clone(),
    }
}

fn strip_term(t: &Term) -> Term {
    t.map_isos(&mut strip_polymorphic_annotations)
}

fn iso_type_is_closed(t: &IsoType) -> bool {
    match t {
        IsoType::Ground(a, b) => a
            .free_vars()
            .iter()
            .chain(b.free_vars().iter())
            .all(|x| x.starts_with('\'')),
        IsoType::Arrow(a, b) => iso_type_is_closed(a) && iso_type_is_closed(b),
        IsoType::Meta(_) => true,
    }
}

/// Matrix of a closed quantum iso. Returns the matrix together with its
/// ground type.
pub fn sem_iso_typed(w: &Iso, at: Option<&IsoType>, cutoff: usize) -> Result<(Matrix, IsoType), DenoteError> {
    let w = strip_polymorphic_annotations(w);
    let (ty, table) = typeck::iso_type_table(&w, at, Dialect::Quantum)?;
    let d = Denoter {
        table,
        cutoff,
        bases: RefCell::new(HashMap::new()),
    };
    Ok((d.iso(&w)?, ty))
}

pub fn sem_iso(w: &Iso, cutoff: usize) -> Result<Matrix, DenoteError> {
    Ok(sem_iso_typed(w, None, cutoff)?.0)
}

/// Matrix `dim [[A]] x dim [[Delta]]` of a term in context; the context basis
/// is the product of the variable bases in name order.
pub fn sem_term(ctx: &Context, t: &Term, cutoff: usize) -> Result<Matrix, DenoteError> {
    Ok(sem_term_typed(ctx, t, cutoff)?.0)
}

pub fn sem_term_typed(ctx: &Context, t: &Term, cutoff: usize) -> Result<(Matrix, Type), DenoteError> {
    let t = strip_term(t);
    let (ty, table) = typeck::type_table(ctx, &t, Dialect::Quantum)?;
    let d = Denoter {
        table,
        cutoff,
        bases: RefCell::new(HashMap::new()),
    };
    let mut columns: Vec<BTreeMap<String, Term>> = vec![BTreeMap::new()];
    for (x, xty) in &ctx.linear {
        let basis = d.basis(xty)?;
        let mut next = Vec::new();
        for sigma in &columns {
            for v in &basis.elems {
                let mut s = sigma.clone();
                s.insert(x.clone(), v.clone());
                next.push(s);
            }
        }
        columns = next;
    }
    let rows = d.dim(&ty)?;
    let mut m = Matrix::zeros(rows, columns.len());
    for (j, sigma) in columns.iter().enumerate() {
        for (i, x) in d.vec(&t, sigma)?.into_iter().enumerate() {
            if !is_zero(x) {
                m.add_at(i, j, x);
            }
        }
    }
    Ok((m, ty))
}

/// Column vector of a closed term.
pub fn sem_value(t: &Term, cutoff: usize) -> Result<Matrix, DenoteError> {
    sem_term(&Context::new(), t, cutoff)
}

/// Column vector of a closed term at a given type.
pub fn sem_value_at(t: &Term, ty: &Type, cutoff: usize) -> Result<Matrix, DenoteError> {
    let ann = app(
        Iso::Ann(
            Box::new(clauses(vec![(var("x"), var("x"))])),
            IsoType::Ground(ty.clone(), ty.clone()),
        ),
        t.clone(),
    );
    sem_value(&ann, cutoff)
}

// ---- classical semantics ----

/// Table of a classical iso on the enumerated values of its domain.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialInjection {
    pub ty: IsoType,
    pub domain: Vec<Term>,
    pub points: Vec<(usize, Term)>,
    pub undefined: Vec<(usize, Outcome)>,
}

impl PartialInjection {
    pub fn apply(&self, v: &Term) -> Option<&Term> {
        let idx = self.domain.iter().position(|d| d == v)?;
        self.points.iter().find(|(i, _)| *i == idx).map(|(_, w)| w)
    }

    pub fn is_injective(&self) -> bool {
        for (k, (_, a)) in self.points.iter().enumerate() {
            if self.points[k + 1..].iter().any(|(_, b)| a == b) {
                return false;
            }
        }
        true
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.domain.iter().enumerate() {
            let rhs = match self.points.iter().find(|(k, _)| *k == i) {
                Some((_, w)) => pretty_term(w),
                None => "undefined".to_string(),
            };
            out.push_str(&format!("{} -> {}\n", pretty_term(v), rhs));
        }
        out
    }
}

/// Runs `w` on every domain value with at most `bound` folds.
pub fn sem_pinj(w: &Iso, bound: usize, fuel: usize) -> Result<PartialInjection, DenoteError> {
    let ty = typeck::typecheck_iso(&Context::new(), w, Dialect::Classical)?;
    let ty = typeck::default_iso_metas(&ty);
    let IsoType::Ground(a, _) = &ty else {
        return Err(DenoteError::Unsupported("an iso of function type".into()));
    };
    let domain = enumerate_basis(a, bound)?.elems;
    let mut points = Vec::new();
    let mut undefined = Vec::new();
    for (i, v) in domain.iter().enumerate() {
        match ceval::eval(&app(w.clone(), v.clone()), fuel) {
            Outcome::Value(out) => points.push((i, out)),
            other => undefined.push((i, other)),
        }
    }
    let table = PartialInjection {
        ty,
        domain,
        points,
        undefined,
    };
    if !table.is_injective() {
        return Err(DenoteError::NotInjective(format!(
            "two inputs of {} share an image",
            crate::parser::pretty_iso_type(&table.ty)
        )));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_iso, parse_term, parse_type};
    use crate::qeval;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn q(s: &str) -> Term {
        parse_term(s, Dialect::Quantum, &[]).unwrap()
    }

    fn qi(s: &str) -> Iso {
        parse_iso(s, Dialect::Quantum, &[]).unwrap()
    }

    const HAD: &str = "{| inl * <-> 1/sqrt2 * inl * + 1/sqrt2 * inr * | inr * <-> 1/sqrt2 * inl * - 1/sqrt2 * inr * }";

    #[test]
    fn enumeration_examples() {
        let e = enumerate_basis(&Type::qubit(), 4).unwrap();
        assert_eq!(e.elems, vec![q("inl *"), q("inr *")]);
        let e = enumerate_basis(&Type::Nat, 3).unwrap();
        assert_eq!(e.elems, vec![qnumeral(0), qnumeral(1), qnumeral(2)]);
        let e = enumerate_basis(&parse_type("I * (I + I)").unwrap(), 4).unwrap();
        assert_eq!(e.elems, vec![q("(*, inl *)"), q("(*, inr *)")]);
        let e = enumerate_basis(&parse_type("(I + I) * (I + I + I)").unwrap(), 4).unwrap();
        assert_eq!(e.dim(), 6);
        assert_eq!(e.index_of(&q("(inr *, inr (inl *))")), Some(4));
    }

    #[test]
    fn classical_enumeration_by_size() {
        let e = enumerate_basis(&Type::nat(), 3).unwrap();
        assert_eq!(e.dim(), 3);
        let lists = enumerate_basis(&Type::list(Type::qubit()), 3).unwrap();
        assert_eq!(lists.dim(), 1 + 2 + 4);
    }

    #[test]
    fn term_vectors() {
        let m = sem_value(&q("inl *"), 4);
        assert!(m.is_err() || m.as_ref().unwrap().rows() == 2);
        let m = sem_value_at(&q("inl *"), &Type::qubit(), 4).unwrap();
        assert_eq!(m.entries(), vec![(0, 0, real(1.0))]);
        let m = sem_value(&q("1/sqrt2 * inl * + 1/sqrt2 * inr *"), 4).unwrap();
        assert!((m.get(0, 0).re - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((m.get(1, 0).re - FRAC_1_SQRT_2).abs() < 1e-12);
        let m = sem_value(&q("suc zero"), 3).unwrap();
        assert_eq!(m.entries(), vec![(1, 0, real(1.0))]);
        assert!(matches!(
            sem_value(&q("suc suc suc zero"), 3),
            Err(DenoteError::Cutoff(_))
        ));
    }

    #[test]
    fn hadamard_matrix() {
        let m = sem_iso(&qi(HAD), 4).unwrap();
        let h = FRAC_1_SQRT_2;
        let expected = Matrix::from_rows(&[vec![real(h), real(h)], vec![real(h), real(-h)]]);
        assert!(m.max_abs_diff(&expected) < 1e-12);
        assert!(check_unitary(&m));
        let json = m.to_json();
        assert_eq!(json["rows"], 2);
        assert_eq!(json["entries"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn swap_matrix_and_inverse() {
        let swap = qi("{| inl * <-> inr * | inr * <-> inl * }");
        let m = sem_iso(&swap, 4).unwrap();
        assert_eq!(m.entries(), vec![(0, 1, real(1.0)), (1, 0, real(1.0))]);
        let w = qi(&format!(
            "{HAD} <<< {{| inl * <-> 0.6 * inl * + 0.8i * inr * | inr * <-> 0.8i * inl * + 0.6 * inr * }}"
        ));
        let m = sem_iso(&w, 4).unwrap();
        let inv = sem_iso(&Iso::Inverse(Box::new(w)), 4).unwrap();
        assert!(inv.max_abs_diff(&m.adjoint()) < 1e-12);
        assert!(check_unitary(&m));
    }

    #[test]
    fn controlled_gate() {
        let cnot = qi("ctrl {| inl * <-> inr * | inr * <-> inl * }");
        let m = sem_iso(&cnot, 4).unwrap();
        let expected: Vec<(usize, usize, C64)> = vec![
            (0, 0, real(1.0)),
            (1, 1, real(1.0)),
            (2, 3, real(1.0)),
            (3, 2, real(1.0)),
        ];
        assert_eq!(m.entries(), expected);
    }

    #[test]
    fn isometry_checks() {
        assert!(check_isometry(&Matrix::identity(3)) && check_unitary(&Matrix::identity(3)));
        let col = Matrix::column(&[real(1.0), real(0.0)]);
        assert!(check_isometry(&col));
        assert!(!check_unitary(&col));
    }

    #[test]
    fn open_term_matrix() {
        let ctx = Context::new().with_var("x", Type::qubit());
        let m = sem_term(&ctx, &q("(x, inl *)"), 4).unwrap();
        assert_eq!(m.rows(), 4);
        assert_eq!(m.cols(), 2);
        assert!(check_isometry(&m));
    }

    #[test]
    fn soundness_against_normalization() {
        let t = q(&format!("({HAD} (inl *), {HAD} (inr *))"));
        let a = sem_value(&t, 4).unwrap();
        let n = qevalnorm(&t);
        let b = sem_value_at(&n, &parse_type("(I + I) * (I + I)").unwrap(), 4).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-9);
    }

    fn qevalnorm(t: &Term) -> Term {
        qeval::normalize(t).unwrap().to_term()
    }

    #[test]
    fn nat_iso_truncates_domain() {
        let pred = qi("{| zero <-> inl * | suc n <-> inr n }");
        let m = sem_iso(&pred, 3).unwrap();
        assert_eq!((m.rows(), m.cols()), (4, 3));
        assert!(check_isometry(&m));
    }

    #[test]
    fn sparse_storage_above_limit() {
        let m = Matrix::identity(80);
        assert!(m.is_sparse());
        assert!(check_unitary(&m));
        assert!(!Matrix::identity(8).is_sparse());
    }

    #[test]
    fn pinj_examples() {
        let swap = parse_iso("{| inl * <-> inr * | inr * <-> inl * }", Dialect::Classical, &[]).unwrap();
        let t = sem_pinj(&swap, 4, 100).unwrap();
        assert_eq!(t.points.len(), 2);
        assert_eq!(t.apply(&q("inl *")), Some(&q("inr *")));
        let partial = parse_iso("{| inr * <-> inl * }", Dialect::Classical, &[]).unwrap();
        let t = sem_pinj(&partial, 4, 100).unwrap();
        assert_eq!(t.points, vec![(1, q("inl *"))]);
        assert_eq!(t.undefined.len(), 1);
    }
}
