//! Orthogonality of terms, orthogonal decompositions (OD and its extension by
//! unitary changes of basis) and decomposition of closed values over them.

use crate::ast::*;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OrthoError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("not an orthogonal decomposition of {0}")]
    NotOd(String),
    #[error("value cannot be expressed over the decomposition: {0}")]
    NotExpressible(String),
}

impl From<AstError> for OrthoError {
    fn from(e: AstError) -> Self {
        match e {
            AstError::Malformed(m) => OrthoError::Malformed(m),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OdKind {
    Basis,
    Extended,
}

// ---- orthogonality ----

pub fn orthogonal(t1: &Term, t2: &Term, dialect: Dialect) -> bool {
    match dialect {
        Dialect::Quantum => q_orth(t1, t2),
        Dialect::Classical => c_orth(t1, t2),
    }
}

pub fn pairwise_orthogonal(ts: &[Term], dialect: Dialect) -> bool {
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            if !orthogonal(&ts[i], &ts[j], dialect) {
                return false;
            }
        }
    }
    true
}

fn q_orth(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::InL(_), Term::InR(_)) | (Term::InR(_), Term::InL(_)) => true,
        (Term::Zero, Term::Suc(_)) | (Term::Suc(_), Term::Zero) => true,
        (Term::InL(x), Term::InL(y)) | (Term::InR(x), Term::InR(y)) | (Term::Suc(x), Term::Suc(y)) => q_orth(x, y),
        (Term::Pair(a1, b1), Term::Pair(a2, b2)) => q_orth(a1, a2) || q_orth(b1, b2),
        (Term::App(w1, x), Term::App(w2, y)) if w1.approx_eq(w2) => q_orth(x, y),
        (Term::Sum(xs), Term::Sum(ys)) => sums_orth(xs, ys),
        (_, Term::Sum(ys)) => sums_orth(&[(real(1.0), a.clone())], ys),
        (Term::Sum(xs), _) => sums_orth(xs, &[(real(1.0), b.clone())]),
        _ => false,
    }
}

/// Both sums are read over a common family of pairwise orthogonal terms,
/// identified up to syntactic equality; the inner product over the shared
/// part must vanish.
fn sums_orth(xs: &[(C64, Term)], ys: &[(C64, Term)]) -> bool {
    let mut family: Vec<Term> = Vec::new();
    let mut left: Vec<(usize, C64)> = Vec::new();
    let mut right: Vec<(usize, C64)> = Vec::new();
    for (side, parts) in [(&mut left, xs), (&mut right, ys)] {
        for (alpha, t) in parts {
            let idx = match family.iter().position(|u| u.approx_eq(t)) {
                Some(i) => i,
                None => {
                    family.push(t.clone());
                    family.len() - 1
                }
            };
            if side.iter().any(|(i, _)| *i == idx) {
                return false;
            }
            side.push((idx, *alpha));
        }
    }
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            if !q_orth(&family[i], &family[j]) {
                return false;
            }
        }
    }
    let mut inner = C64::new(0.0, 0.0);
    for (i, a) in &left {
        if let Some((_, b)) = right.iter().find(|(j, _)| j == i) {
            inner += a.conj() * b;
        }
    }
    inner.norm() < eps()
}

fn c_orth(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Let(_, _, body), _) => c_orth(body, b),
        (_, Term::Let(_, _, body)) => c_orth(a, body),
        (Term::InL(_), Term::InR(_)) | (Term::InR(_), Term::InL(_)) => true,
        (Term::InL(x), Term::InL(y)) | (Term::InR(x), Term::InR(y)) | (Term::Fold(x), Term::Fold(y)) => c_orth(x, y),
        (Term::Pair(a1, b1), Term::Pair(a2, b2)) => c_orth(a1, a2) || c_orth(b1, b2),
        _ => false,
    }
}

// ---- orthogonal decompositions ----

#[derive(Clone, Debug, PartialEq)]
enum OdTree {
    Var(String),
    Unit,
    /// Indices (into the node's element list) of the `inl` and `inr` groups.
    Plus {
        left: Vec<usize>,
        ltree: Box<OdTree>,
        right: Vec<usize>,
        rtree: Box<OdTree>,
    },
    Nat {
        zero: usize,
        sucs: Vec<usize>,
        tree: Box<OdTree>,
    },
    /// Projection rule; `first` tells whether components are grouped by the
    /// first (`pi_1`) or the second (`pi_2`) component.
    Tensor {
        first: bool,
        heads: Vec<Term>,
        head_tree: Box<OdTree>,
        groups: Vec<(Vec<usize>, OdTree)>,
    },
    /// Unitary change of basis: element `k` equals `sum_i alpha[k][i] * base[i]`.
    Change {
        alpha: Vec<Vec<C64>>,
        tree: Box<OdTree>,
    },
}

#[derive(Clone, Copy)]
enum Shape {
    Unit,
    Plus,
    Nat,
    Tensor,
    Unknown,
}

fn shape_of_type(ty: &Type) -> Shape {
    match ty {
        Type::Unit => Shape::Unit,
        Type::Sum(..) => Shape::Plus,
        Type::Nat => Shape::Nat,
        Type::Tensor(..) => Shape::Tensor,
        _ => Shape::Unknown,
    }
}

fn shape_of_terms(s: &[Term]) -> Shape {
    for t in s {
        match t {
            Term::Unit => return Shape::Unit,
            Term::InL(_) | Term::InR(_) => return Shape::Plus,
            Term::Zero | Term::Suc(_) => return Shape::Nat,
            Term::Pair(..) => return Shape::Tensor,
            _ => {}
        }
    }
    Shape::Unknown
}

fn unknown() -> Type {
    Type::Meta(u32::MAX)
}

fn sub_types(ty: &Type) -> (Type, Type) {
    match ty {
        Type::Sum(a, b) | Type::Tensor(a, b) => ((**a).clone(), (**b).clone()),
        _ => (unknown(), unknown()),
    }
}

fn is_top_sum(t: &Term) -> bool {
    matches!(t, Term::Sum(_))
}

fn derive(ty: &Type, s: &[Term], ext: bool) -> Option<OdTree> {
    derive_with(ty, s, ext, true)
}

fn derive_with(ty: &Type, s: &[Term], ext: bool, strict: bool) -> Option<OdTree> {
    if s.is_empty() {
        return None;
    }
    if s.len() == 1 {
        if let Term::Var(x) = &s[0] {
            return Some(OdTree::Var(x.clone()));
        }
    }
    if s.iter().any(is_top_sum) {
        if !ext {
            return None;
        }
        return derive_change(ty, s, strict);
    }
    let shape = match shape_of_type(ty) {
        Shape::Unknown => shape_of_terms(s),
        known => known,
    };
    match shape {
        Shape::Unit => (s.len() == 1 && s[0] == Term::Unit).then_some(OdTree::Unit),
        Shape::Plus => {
            let (ta, tb) = sub_types(ty);
            let mut left = Vec::new();
            let mut right = Vec::new();
            let mut ls = Vec::new();
            let mut rs = Vec::new();
            for (i, t) in s.iter().enumerate() {
                match t {
                    Term::InL(x) => {
                        left.push(i);
                        ls.push((**x).clone());
                    }
                    Term::InR(x) => {
                        right.push(i);
                        rs.push((**x).clone());
                    }
                    _ => return None,
                }
            }
            let ltree = derive_with(&ta, &ls, ext, strict)?;
            let rtree = derive_with(&tb, &rs, ext, strict)?;
            Some(OdTree::Plus {
                left,
                ltree: Box::new(ltree),
                right,
                rtree: Box::new(rtree),
            })
        }
        Shape::Nat => {
            let mut zero = None;
            let mut sucs = Vec::new();
            let mut inner = Vec::new();
            for (i, t) in s.iter().enumerate() {
                match t {
                    Term::Zero => {
                        if zero.is_some() {
                            return None;
                        }
                        zero = Some(i);
                    }
                    Term::Suc(x) => {
                        sucs.push(i);
                        inner.push((**x).clone());
                    }
                    _ => return None,
                }
            }
            let zero = zero?;
            let tree = derive_with(&Type::Nat, &inner, ext, strict)?;
            Some(OdTree::Nat {
                zero,
                sucs,
                tree: Box::new(tree),
            })
        }
        Shape::Tensor => {
            let mut comps = Vec::new();
            for t in s {
                match t {
                    Term::Pair(a, b) => comps.push(((**a).clone(), (**b).clone())),
                    _ => return None,
                }
            }
            let (ta, tb) = sub_types(ty);
            derive_tensor(&ta, &tb, &comps, true, ext, strict)
                .or_else(|| derive_tensor(&ta, &tb, &comps, false, ext, strict))
        }
        Shape::Unknown => None,
    }
}

fn derive_tensor(ta: &Type, tb: &Type, comps: &[(Term, Term)], first: bool, ext: bool, strict: bool) -> Option<OdTree> {
    let (head_ty, rest_ty) = if first { (ta, tb) } else { (tb, ta) };
    let mut heads: Vec<Term> = Vec::new();
    let mut groups: Vec<(Vec<usize>, Vec<Term>)> = Vec::new();
    for (i, (a, b)) in comps.iter().enumerate() {
        let (h, r) = if first { (a, b) } else { (b, a) };
        match heads.iter().position(|x| x.approx_eq(h)) {
            Some(k) => {
                groups[k].0.push(i);
                groups[k].1.push(r.clone());
            }
            None => {
                heads.push(h.clone());
                groups.push((vec![i], vec![r.clone()]));
            }
        }
    }
    let head_tree = derive_with(head_ty, &heads, ext, strict)?;
    let mut out_groups = Vec::new();
    for (idx, members) in groups {
        let tree = derive_with(rest_ty, &members, ext, strict)?;
        out_groups.push((idx, tree));
    }
    Some(OdTree::Tensor {
        first,
        heads,
        head_tree: Box::new(head_tree),
        groups: out_groups,
    })
}

/// Reads every element as a combination over a common component family and
/// checks that the coefficient matrix is unitary.
fn derive_change(ty: &Type, s: &[Term], strict: bool) -> Option<OdTree> {
    let mut base: Vec<Term> = Vec::new();
    let mut rows: Vec<Vec<(usize, C64)>> = Vec::new();
    for t in s {
        let mut row: Vec<(usize, C64)> = Vec::new();
        for (alpha, comp) in top_components(t) {
            let idx = match base.iter().position(|b| b.approx_eq(&comp)) {
                Some(i) => i,
                None => {
                    base.push(comp);
                    base.len() - 1
                }
            };
            match row.iter_mut().find(|(i, _)| *i == idx) {
                Some((_, a)) => *a += alpha,
                None => row.push((idx, alpha)),
            }
        }
        rows.push(row);
    }
    if base.len() != s.len() || base.iter().any(is_top_sum) {
        return None;
    }
    let n = s.len();
    let mut alpha = vec![vec![C64::new(0.0, 0.0); n]; n];
    for (k, row) in rows.iter().enumerate() {
        for (i, a) in row {
            alpha[k][*i] = *a;
        }
    }
    if strict && !is_unitary(&alpha) {
        return None;
    }
    let tree = derive_with(ty, &base, true, strict)?;
    Some(OdTree::Change {
        alpha,
        tree: Box::new(tree),
    })
}

fn top_components(t: &Term) -> Vec<(C64, Term)> {
    match t {
        Term::Sum(ps) => {
            let mut out = Vec::new();
            for (a, u) in ps {
                for (b, v) in top_components(u) {
                    out.push((a * b, v));
                }
            }
            out
        }
        _ => vec![(real(1.0), t.clone())],
    }
}

#[allow(clippy::needless_range_loop)]
pub(crate) fn is_unitary(m: &[Vec<C64>]) -> bool {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return false;
    }
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            let mut acc_t = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += m[i][k] * m[j][k].conj();
                acc_t += m[k][i].conj() * m[k][j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            if (acc - target).norm() >= eps() || (acc_t - target).norm() >= eps() {
                return false;
            }
        }
    }
    true
}

/// A validated orthogonal decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct OdSet {
    pub ty: Type,
    pub elements: Vec<Term>,
    pub kind: OdKind,
    tree: OdTree,
}

impl OdSet {
    pub fn new(ty: &Type, elements: Vec<Term>, kind: OdKind) -> Result<OdSet, OrthoError> {
        validate_elements(&elements, kind)?;
        match derive(ty, &elements, kind == OdKind::Extended) {
            Some(tree) => Ok(OdSet {
                ty: ty.clone(),
                elements,
                kind,
                tree,
            }),
            None => Err(OrthoError::NotOd(crate::parser::pretty_type(ty))),
        }
    }

    /// Decomposes a closed application-free value as `sum_j alpha_j * sigma_j(s_j)`.
    /// Entries are `(alpha_j, index of s_j, sigma_j)`.
    pub fn decompose_indexed(&self, e: &Term) -> Result<Vec<(C64, usize, Valuation)>, OrthoError> {
        if !e.free_vars().is_empty() {
            return Err(OrthoError::Malformed("decompose expects a closed term".into()));
        }
        let parts = linear_parts(e)?;
        self.decompose_parts(&parts)
    }

    pub fn decompose_parts(&self, parts: &[(C64, Term)]) -> Result<Vec<(C64, usize, Valuation)>, OrthoError> {
        let mut acc: Vec<(C64, usize, Valuation)> = Vec::new();
        for (gamma, b) in parts {
            for (c, idx, sigma) in decompose_basis(&self.tree, b)? {
                let coeff = gamma * c;
                match acc.iter_mut().find(|(_, i, s)| *i == idx && *s == sigma) {
                    Some((a, _, _)) => *a += coeff,
                    None => acc.push((coeff, idx, sigma)),
                }
            }
        }
        acc.retain(|(a, _, _)| !is_zero(*a));
        Ok(acc)
    }

    pub fn decompose(&self, e: &Term) -> Result<Vec<(C64, Term, Valuation)>, OrthoError> {
        Ok(self
            .decompose_indexed(e)?
            .into_iter()
            .map(|(a, i, s)| (a, self.elements[i].clone(), s))
            .collect())
    }
}

fn validate_elements(elements: &[Term], kind: OdKind) -> Result<(), OrthoError> {
    for e in elements {
        let ok = match kind {
            OdKind::Basis => e.is_basis_value(),
            OdKind::Extended => is_quantum_value(e),
        };
        if !ok {
            return Err(OrthoError::Malformed(format!(
                "`{}` is not a {}",
                crate::parser::pretty_term(e),
                if kind == OdKind::Basis { "basis value" } else { "value" }
            )));
        }
    }
    Ok(())
}

/// Quantum values: basis values closed under linear combinations.
pub fn is_quantum_value(t: &Term) -> bool {
    match t {
        Term::Unit | Term::Var(_) | Term::Zero => true,
        Term::InL(a) | Term::InR(a) | Term::Suc(a) => is_quantum_value(a),
        Term::Pair(a, b) => is_quantum_value(a) && is_quantum_value(b),
        Term::Sum(ps) => ps.iter().all(|(_, u)| is_quantum_value(u)),
        Term::Fold(_) | Term::App(..) | Term::Let(..) => false,
    }
}

/// True when `s` would be an extended decomposition of `ty` if coefficient
/// matrices were not required to be unitary.
pub fn od_ext_fails_only_on_unitarity(ty: &Type, s: &[Term]) -> bool {
    validate_elements(s, OdKind::Extended).is_ok()
        && derive_with(ty, s, true, true).is_none()
        && derive_with(ty, s, true, false).is_some()
}

pub fn check_od(ty: &Type, s: &[Term], kind: OdKind) -> Result<bool, OrthoError> {
    validate_elements(s, kind)?;
    Ok(derive(ty, s, kind == OdKind::Extended).is_some())
}

fn decompose_basis(tree: &OdTree, b: &Term) -> Result<Vec<(C64, usize, Valuation)>, OrthoError> {
    let fail = || OrthoError::NotExpressible(crate::parser::pretty_term(b));
    match tree {
        OdTree::Var(x) => Ok(vec![(real(1.0), 0, Valuation::singleton(x, b.clone()))]),
        OdTree::Unit => match b {
            Term::Unit => Ok(vec![(real(1.0), 0, Valuation::new())]),
            _ => Err(fail()),
        },
        OdTree::Plus {
            left,
            ltree,
            right,
            rtree,
        } => match b {
            Term::InL(x) => Ok(remap(decompose_basis(ltree, x)?, left)),
            Term::InR(x) => Ok(remap(decompose_basis(rtree, x)?, right)),
            _ => Err(fail()),
        },
        OdTree::Nat { zero, sucs, tree } => match b {
            Term::Zero => Ok(vec![(real(1.0), *zero, Valuation::new())]),
            Term::Suc(x) => Ok(remap(decompose_basis(tree, x)?, sucs)),
            _ => Err(fail()),
        },
        OdTree::Tensor {
            first,
            head_tree,
            groups,
            ..
        } => {
            let (x, y) = match b {
                Term::Pair(x, y) => (x, y),
                _ => return Err(fail()),
            };
            let (h, r) = if *first { (x, y) } else { (y, x) };
            let mut out = Vec::new();
            for (c1, k, s1) in decompose_basis(head_tree, h)? {
                let (members, sub) = &groups[k];
                for (c2, j, s2) in decompose_basis(sub, r)? {
                    let sigma = s1
                        .clone()
                        .union(s2)
                        .ok_or_else(|| OrthoError::Malformed("pattern variables overlap".into()))?;
                    out.push((c1 * c2, members[j], sigma));
                }
            }
            Ok(out)
        }
        OdTree::Change { alpha, tree } => {
            let mut out = Vec::new();
            for (c, i, sigma) in decompose_basis(tree, b)? {
                for (k, row) in alpha.iter().enumerate() {
                    let coeff = c * row[i].conj();
                    if !is_zero(coeff) {
                        out.push((coeff, k, sigma.clone()));
                    }
                }
            }
            Ok(out)
        }
    }
}

fn remap(v: Vec<(C64, usize, Valuation)>, idx: &[usize]) -> Vec<(C64, usize, Valuation)> {
    v.into_iter().map(|(c, i, s)| (c, idx[i], s)).collect()
}

/// Groups decomposition entries by element index.
pub fn group_by_element(entries: &[(C64, usize, Valuation)]) -> BTreeMap<usize, Vec<(C64, Valuation)>> {
    let mut m: BTreeMap<usize, Vec<(C64, Valuation)>> = BTreeMap::new();
    for (a, i, s) in entries {
        m.entry(*i).or_default().push((*a, s.clone()));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_term;
    use std::f64::consts::FRAC_1_SQRT_2 as H;

    fn q(s: &str) -> Term {
        parse_term(s, Dialect::Quantum, &[]).unwrap()
    }

    fn cl(s: &str) -> Term {
        parse_term(s, Dialect::Classical, &[]).unwrap()
    }

    fn plus() -> Term {
        q("1/sqrt2 * inl * + 1/sqrt2 * inr *")
    }

    fn minus() -> Term {
        q("1/sqrt2 * inl * - 1/sqrt2 * inr *")
    }

    #[test]
    fn base_rules() {
        assert!(orthogonal(&q("inl *"), &q("inr x"), Dialect::Quantum));
        assert!(!orthogonal(&q("x"), &q("y"), Dialect::Quantum));
        assert!(orthogonal(&q("zero"), &q("suc x"), Dialect::Quantum));
        assert!(orthogonal(&q("(x, inl *)"), &q("(y, inr *)"), Dialect::Quantum));
        assert!(!orthogonal(&q("(x, inl *)"), &q("(y, inl *)"), Dialect::Quantum));
    }

    #[test]
    fn kets_are_orthogonal() {
        assert!(orthogonal(&plus(), &minus(), Dialect::Quantum));
        assert!(!orthogonal(&plus(), &plus(), Dialect::Quantum));
        assert!(!orthogonal(&plus(), &q("inl *"), Dialect::Quantum));
        assert!(orthogonal(
            &q("inl (1/sqrt2 * inl * + 1/sqrt2 * inr *)"),
            &q("inr *"),
            Dialect::Quantum
        ));
    }

    #[test]
    fn sum_with_duplicate_components_is_not_orthogonal() {
        let bad = q("1/sqrt2 * inl * + 1/sqrt2 * inl *");
        assert!(!orthogonal(&bad, &q("inr *"), Dialect::Quantum));
    }

    #[test]
    fn iso_applications() {
        let w = Iso::Clauses(vec![(var("x"), var("x"))]);
        let a = app(w.clone(), q("inl *"));
        let b = app(w, q("inr *"));
        assert!(orthogonal(&a, &b, Dialect::Quantum));
        let s = Iso::Clauses(vec![(q("inl x"), q("inr x")), (q("inr y"), q("inl y"))]);
        assert!(!orthogonal(&app(s, q("inl *")), &q("inl *"), Dialect::Quantum));
    }

    #[test]
    fn classical_rules() {
        assert!(orthogonal(&cl("inl x"), &cl("inr y"), Dialect::Classical));
        assert!(orthogonal(&cl("[]"), &cl("h :: t"), Dialect::Classical));
        assert!(orthogonal(&cl("(#0, x)"), &cl("(#1, y)"), Dialect::Classical));
        assert!(!orthogonal(&cl("x"), &cl("inl y"), Dialect::Classical));
    }

    #[test]
    fn od_examples() {
        assert!(check_od(&Type::qubit(), &[var("x")], OdKind::Basis).unwrap());
        assert!(check_od(&Type::Nat, &[q("zero"), q("suc zero"), q("suc suc x")], OdKind::Basis).unwrap());
        assert!(check_od(&Type::qubit(), &[plus(), minus()], OdKind::Extended).unwrap());
        assert!(check_od(&Type::qubit(), &[plus(), minus()], OdKind::Basis).is_err());
        assert!(!check_od(&Type::qubit(), &[q("inl *")], OdKind::Basis).unwrap());
        assert!(!check_od(&Type::Nat, &[q("zero"), q("suc zero")], OdKind::Basis).unwrap());
        let nat_ext = vec![
            q("1/sqrt2 * zero + 1/sqrt2 * suc zero"),
            q("1/sqrt2 * zero - 1/sqrt2 * suc zero"),
            q("suc suc x"),
        ];
        assert!(check_od(&Type::Nat, &nat_ext, OdKind::Extended).unwrap());
    }

    #[test]
    fn non_unitary_change_rejected() {
        let s = vec![q("0.6 * inl * + 0.8 * inr *"), q("0.6 * inl * + 0.8 * inr *")];
        assert!(!check_od(&Type::qubit(), &s, OdKind::Extended).unwrap());
        let s = vec![q("0.5 * inl * + 0.5 * inr *"), q("0.5 * inl * - 0.5 * inr *")];
        assert!(!check_od(&Type::qubit(), &s, OdKind::Extended).unwrap());
        assert!(od_ext_fails_only_on_unitarity(&Type::qubit(), &s));
        assert!(!od_ext_fails_only_on_unitarity(&Type::qubit(), &[q("inl *")]));
    }

    #[test]
    fn tensor_needs_both_projection_orders() {
        let ty = Type::tensor(Type::sum(Type::Unit, Type::qubit()), Type::qubit());
        let s = vec![q("(inl *, y)"), q("(inr x, inl *)"), q("(inr x, inr *)")];
        assert!(check_od(&ty, &s, OdKind::Basis).unwrap());
        let s2 = vec![q("(x, inl *)"), q("(inl *, inr *)"), q("(inr y, inr *)")];
        assert!(check_od(&Type::tensor(Type::qubit(), Type::qubit()), &s2, OdKind::Basis).unwrap());
    }

    #[test]
    fn malformed_elements() {
        let w = Iso::Clauses(vec![]);
        assert!(check_od(&Type::Unit, &[app(w, Term::Unit)], OdKind::Basis).is_err());
    }

    #[test]
    fn decompose_variable() {
        let od = OdSet::new(&Type::qubit(), vec![var("x")], OdKind::Extended).unwrap();
        let d = od.decompose(&plus()).unwrap();
        assert_eq!(d.len(), 2);
        assert!(scalar_eq(d[0].0, real(H)));
        assert_eq!(d[0].2.get("x"), Some(&q("inl *")));
        assert_eq!(d[1].2.get("x"), Some(&q("inr *")));
    }

    #[test]
    fn decompose_unit() {
        let od = OdSet::new(&Type::Unit, vec![Term::Unit], OdKind::Basis).unwrap();
        let d = od.decompose(&Term::Unit).unwrap();
        assert_eq!(d, vec![(real(1.0), Term::Unit, Valuation::new())]);
    }

    #[test]
    fn decompose_over_hadamard_pair() {
        let od = OdSet::new(&Type::qubit(), vec![plus(), minus()], OdKind::Extended).unwrap();
        let d = od.decompose_indexed(&q("inl *")).unwrap();
        // Oracle: solve [[h, h], [h, -h]]^T c = (1, 0) by the conjugate transpose.
        let m = [[H, H], [H, -H]];
        let expect = [m[0][0], m[1][0]];
        assert_eq!(d.len(), 2);
        for (c, i, s) in d {
            assert!(s.is_empty());
            assert!((c.re - expect[i]).abs() < 1e-12);
        }
    }

    fn recombine(od: &OdSet, entries: &[(C64, usize, Valuation)]) -> Vec<(C64, Term)> {
        let mut parts = Vec::new();
        for (a, i, s) in entries {
            for (b, t) in linear_parts(&od.elements[*i].subst(s)).unwrap() {
                parts.push((a * b, t));
            }
        }
        canonical_parts(&parts).unwrap()
    }

    #[test]
    fn decompose_round_trip_nested() {
        let ty = Type::tensor(Type::qubit(), Type::Nat);
        let elems = vec![
            q("(inl *, 1/sqrt2 * zero + 1/sqrt2 * suc zero)"),
            q("(inl *, 1/sqrt2 * zero - 1/sqrt2 * suc zero)"),
            q("(inl *, suc suc n)"),
            q("(inr *, m)"),
        ];
        let od = OdSet::new(&ty, elems, OdKind::Extended).unwrap();
        let e = q("0.6 * (inl *, suc zero) + 0.8i * (inr *, suc suc zero)");
        let entries = od.decompose_indexed(&e).unwrap();
        let back = recombine(&od, &entries);
        let want = linear_parts(&e).unwrap();
        assert_eq!(back.len(), want.len());
        for ((a, s), (b, t)) in back.iter().zip(&want) {
            assert!(scalar_eq(*a, *b));
            assert_eq!(s, t);
        }
    }

    #[test]
    fn od_elements_pairwise_orthogonal_examples() {
        let elems = vec![q("zero"), q("suc zero"), q("suc suc x")];
        assert!(pairwise_orthogonal(&elems, Dialect::Quantum));
        assert!(pairwise_orthogonal(&[plus(), minus()], Dialect::Quantum));
    }
}
