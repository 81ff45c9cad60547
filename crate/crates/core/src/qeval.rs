//! Evaluation of the quantum dialect: pattern matching, normalization of
//! closed terms to canonical linear combinations, forward and inverse
//! application of isos, and equality of closed terms.

use crate::ast::*;
use crate::ortho::{OdKind, OdSet, OrthoError};
use crate::parser::{pretty_iso, pretty_term};
use crate::typeck;
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("term is not closed: free variable `{0}`")]
    NotClosed(String),
    #[error("no clause matches `{0}`")]
    NoMatch(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("`{0}` cannot be evaluated in the quantum dialect")]
    NotQuantum(String),
    #[error("{0}")]
    Ortho(#[from] OrthoError),
    #[error("type error: {0}")]
    Type(String),
}

impl From<AstError> for EvalError {
    fn from(e: AstError) -> Self {
        match e {
            AstError::Malformed(m) => EvalError::Malformed(m),
        }
    }
}

/// Canonical form `sum_i alpha_i * b_i`: basis values strictly increasing,
/// scalars nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalValue {
    pub parts: Vec<(C64, Term)>,
}

impl NormalValue {
    fn from_parts(parts: &[(C64, Term)]) -> Result<Self, EvalError> {
        Ok(NormalValue {
            parts: canonical_parts(parts)?,
        })
    }

    pub fn to_term(&self) -> Term {
        parts_to_term(self.parts.clone())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.parts.iter().map(|(a, _)| a.norm_sqr()).sum()
    }

    /// Same basis values and scalars within `eps`.
    pub fn approx_eq(&self, other: &NormalValue) -> bool {
        self.parts.len() == other.parts.len()
            && self
                .parts
                .iter()
                .zip(&other.parts)
                .all(|((a, s), (b, t))| s == t && scalar_eq(*a, *b))
    }
}

impl fmt::Display for NormalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", pretty_term(&self.to_term()))
    }
}

/// Matches a basis-value pattern against a closed basis value. `Ok(None)`
/// means the two are orthogonal.
pub fn match_value(pattern: &Term, subject: &Term) -> Result<Option<Valuation>, EvalError> {
    if !pattern.is_basis_value() || !subject.is_basis_value() {
        return Err(EvalError::Malformed("matching is defined on basis values".into()));
    }
    if let Some(x) = subject.free_vars().into_iter().next() {
        return Err(EvalError::NotClosed(x));
    }
    go_match(pattern, subject)
}

fn go_match(p: &Term, v: &Term) -> Result<Option<Valuation>, EvalError> {
    Ok(match (p, v) {
        (Term::Var(x), _) => Some(Valuation::singleton(x, v.clone())),
        (Term::Unit, Term::Unit) | (Term::Zero, Term::Zero) => Some(Valuation::new()),
        (Term::InL(a), Term::InL(b))
        | (Term::InR(a), Term::InR(b))
        | (Term::Suc(a), Term::Suc(b))
        | (Term::Fold(a), Term::Fold(b)) => go_match(a, b)?,
        (Term::Pair(p1, p2), Term::Pair(v1, v2)) => {
            let (Some(s1), Some(s2)) = (go_match(p1, v1)?, go_match(p2, v2)?) else {
                return Ok(None);
            };
            if s1.support().intersection(&s2.support()).next().is_some() {
                return Err(EvalError::Malformed(format!(
                    "pattern `{}` binds a variable twice",
                    pretty_term(p)
                )));
            }
            s1.union(s2)
        }
        _ => None,
    })
}

/// `sigma(t)`, requiring every free variable of `t` to be bound.
pub fn substitute(sigma: &Valuation, t: &Term) -> Result<Term, EvalError> {
    let support = sigma.support();
    if let Some(x) = t.free_vars().into_iter().find(|x| !support.contains(x)) {
        return Err(EvalError::NotClosed(x));
    }
    Ok(t.subst(sigma))
}

/// Normal form of a closed quantum term.
pub fn normalize(t: &Term) -> Result<NormalValue, EvalError> {
    if let Some(x) = t.free_vars().into_iter().next() {
        return Err(EvalError::NotClosed(x));
    }
    NormalValue::from_parts(&eval(t)?)
}

/// `omega v` in normal form.
pub fn apply(w: &Iso, v: &Term) -> Result<NormalValue, EvalError> {
    normalize(&app(w.clone(), v.clone()))
}

/// `omega^-1 v` in normal form.
pub fn apply_inverse(w: &Iso, v: &Term) -> Result<NormalValue, EvalError> {
    let parts = eval(v)?;
    let mut out = Vec::new();
    for (a, b) in parts {
        scale_into(&mut out, a, apply_inverse_basis(w, &b)?);
    }
    NormalValue::from_parts(&out)
}

/// Decides equality of closed terms of the same type by comparing normal forms.
pub fn equal_terms(t1: &Term, t2: &Term) -> Result<bool, EvalError> {
    let ty = typeck::typecheck_term(&typeck::Context::new(), t1, Dialect::Quantum)
        .map_err(|d| EvalError::Type(d.message))?;
    typeck::check_term_at(t2, &ty, Dialect::Quantum).map_err(|d| EvalError::Type(d.message))?;
    Ok(normalize(t1)?.approx_eq(&normalize(t2)?))
}

fn scale_into(out: &mut Vec<(C64, Term)>, a: C64, parts: Vec<(C64, Term)>) {
    out.extend(parts.into_iter().map(|(b, t)| (a * b, t)));
}

fn merged(parts: Vec<(C64, Term)>) -> Result<Vec<(C64, Term)>, EvalError> {
    Ok(canonical_parts(&parts)?)
}

/// Linear combination of closed basis values equal to `t`.
fn eval(t: &Term) -> Result<Vec<(C64, Term)>, EvalError> {
    let one = real(1.0);
    let parts = match t {
        Term::Unit | Term::Zero => vec![(one, t.clone())],
        Term::Var(x) => return Err(EvalError::NotClosed(x.clone())),
        Term::InL(u) => eval(u)?.into_iter().map(|(a, b)| (a, inl(b))).collect(),
        Term::InR(u) => eval(u)?.into_iter().map(|(a, b)| (a, inr(b))).collect(),
        Term::Suc(u) => eval(u)?.into_iter().map(|(a, b)| (a, suc(b))).collect(),
        Term::Pair(l, r) => kron(&eval(l)?, &eval(r)?),
        Term::Sum(ps) => {
            let mut out = Vec::new();
            for (a, u) in ps {
                scale_into(&mut out, *a, eval(u)?);
            }
            out
        }
        Term::App(w, u) => {
            let mut out = Vec::new();
            for (a, b) in eval(u)? {
                scale_into(&mut out, a, apply_basis(w, &b)?);
            }
            out
        }
        Term::Fold(_) | Term::Let(..) => return Err(EvalError::NotQuantum(pretty_term(t))),
    };
    merged(parts)
}

fn kron(l: &[(C64, Term)], r: &[(C64, Term)]) -> Vec<(C64, Term)> {
    let mut out = Vec::with_capacity(l.len() * r.len());
    for (a, x) in l {
        for (b, y) in r {
            out.push((a * b, pair(x.clone(), y.clone())));
        }
    }
    out
}

fn apply_basis(w: &Iso, b: &Term) -> Result<Vec<(C64, Term)>, EvalError> {
    match w {
        Iso::Clauses(cs) => {
            for (l, r) in cs {
                if let Some(sigma) = match_value(l, b)? {
                    return eval(&substitute(&sigma, r)?);
                }
            }
            Err(EvalError::NoMatch(format!("{} in {}", pretty_term(b), short_iso(w))))
        }
        Iso::Compose(outer, inner) => {
            let mut out = Vec::new();
            for (a, c) in apply_basis(inner, b)? {
                scale_into(&mut out, a, apply_basis(outer, &c)?);
            }
            merged(out)
        }
        Iso::Tensor(w1, w2) => match b {
            Term::Pair(x, y) => Ok(kron(&apply_basis(w1, x)?, &apply_basis(w2, y)?)),
            _ => Err(shape_error(w, b)),
        },
        Iso::Sum(w1, w2) => match b {
            Term::InL(x) => Ok(apply_basis(w1, x)?.into_iter().map(|(a, t)| (a, inl(t))).collect()),
            Term::InR(x) => Ok(apply_basis(w2, x)?.into_iter().map(|(a, t)| (a, inr(t))).collect()),
            _ => Err(shape_error(w, b)),
        },
        Iso::Ctrl(u) => ctrl(b, w, |y| apply_basis(u, y)),
        Iso::Inverse(u) => apply_inverse_basis(u, b),
        Iso::Ann(u, _) => apply_basis(u, b),
        _ => Err(EvalError::NotQuantum(short_iso(w))),
    }
}

fn ctrl(
    b: &Term,
    w: &Iso,
    f: impl Fn(&Term) -> Result<Vec<(C64, Term)>, EvalError>,
) -> Result<Vec<(C64, Term)>, EvalError> {
    match b {
        Term::Pair(c, y) => match c.as_ref() {
            Term::InL(_) => Ok(vec![(real(1.0), b.clone())]),
            Term::InR(_) => Ok(f(y)?.into_iter().map(|(a, t)| (a, pair((**c).clone(), t))).collect()),
            _ => Err(shape_error(w, b)),
        },
        _ => Err(shape_error(w, b)),
    }
}

fn apply_inverse_basis(w: &Iso, b: &Term) -> Result<Vec<(C64, Term)>, EvalError> {
    match w {
        Iso::Clauses(cs) => {
            let rhs: Vec<Term> = cs.iter().map(|(_, r)| r.clone()).collect();
            let od = OdSet::new(&Type::Meta(u32::MAX), rhs, OdKind::Extended)?;
            let mut out = Vec::new();
            for (a, idx, sigma) in od.decompose_parts(&[(real(1.0), b.clone())])? {
                scale_into(&mut out, a, eval(&substitute(&sigma, &cs[idx].0)?)?);
            }
            merged(out)
        }
        Iso::Compose(outer, inner) => {
            let mut out = Vec::new();
            for (a, c) in apply_inverse_basis(outer, b)? {
                scale_into(&mut out, a, apply_inverse_basis(inner, &c)?);
            }
            merged(out)
        }
        Iso::Tensor(w1, w2) => match b {
            Term::Pair(x, y) => Ok(kron(&apply_inverse_basis(w1, x)?, &apply_inverse_basis(w2, y)?)),
            _ => Err(shape_error(w, b)),
        },
        Iso::Sum(w1, w2) => match b {
            Term::InL(x) => Ok(apply_inverse_basis(w1, x)?
                .into_iter()
                .map(|(a, t)| (a, inl(t)))
                .collect()),
            Term::InR(x) => Ok(apply_inverse_basis(w2, x)?
                .into_iter()
                .map(|(a, t)| (a, inr(t)))
                .collect()),
            _ => Err(shape_error(w, b)),
        },
        Iso::Ctrl(u) => ctrl(b, w, |y| apply_inverse_basis(u, y)),
        Iso::Inverse(u) => apply_basis(u, b),
        Iso::Ann(u, _) => apply_inverse_basis(u, b),
        _ => Err(EvalError::NotQuantum(short_iso(w))),
    }
}

fn shape_error(w: &Iso, b: &Term) -> EvalError {
    EvalError::Malformed(format!(
        "`{}` does not fit the input of {}",
        pretty_term(b),
        short_iso(w)
    ))
}

fn short_iso(w: &Iso) -> String {
    let s = pretty_iso(w);
    if s.chars().count() > 60 {
        format!("`{}...`", s.chars().take(57).collect::<String>())
    } else {
        format!("`{s}`")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_iso, parse_term};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn q(s: &str) -> Term {
        parse_term(s, Dialect::Quantum, &[]).unwrap()
    }

    fn qi(s: &str) -> Iso {
        parse_iso(s, Dialect::Quantum, &[]).unwrap()
    }

    const HAD: &str = "{| inl * <-> 1/sqrt2 * inl * + 1/sqrt2 * inr * | inr * <-> 1/sqrt2 * inl * - 1/sqrt2 * inr * }";
    const SWAP: &str = "{| inl x <-> inr x | inr x <-> inl x }";

    #[test]
    fn matching_examples() {
        let s = match_value(&q("(x, y)"), &q("(inl *, inr *)")).unwrap().unwrap();
        assert_eq!(s.get("x"), Some(&q("inl *")));
        assert_eq!(s.get("y"), Some(&q("inr *")));
        assert_eq!(match_value(&q("inl x"), &q("inr *")).unwrap(), None);
        let s = match_value(&q("suc x"), &q("suc zero")).unwrap().unwrap();
        assert_eq!(s.get("x"), Some(&Term::Zero));
        assert!(match_value(&q("(x, x)"), &q("(*, *)")).is_err());
    }

    #[test]
    fn substitution_examples() {
        let s = Valuation::singleton("x", q("inl (inr *)"));
        assert_eq!(substitute(&s, &var("x")).unwrap(), q("inl (inr *)"));
        assert_eq!(substitute(&Valuation::new(), &Term::Unit).unwrap(), Term::Unit);
        let w = qi(SWAP);
        assert_eq!(
            substitute(&s, &app(w.clone(), var("x"))).unwrap(),
            app(w, q("inl (inr *)"))
        );
        assert!(substitute(&Valuation::new(), &var("y")).is_err());
    }

    #[test]
    fn hadamard_examples() {
        let h = qi(HAD);
        let plus = apply(&h, &q("inl *")).unwrap();
        assert_eq!(plus.parts.len(), 2);
        assert!(scalar_eq(plus.parts[0].0, real(FRAC_1_SQRT_2)));
        assert_eq!(plus.parts[0].1, q("inl *"));
        assert_eq!(plus.parts[1].1, q("inr *"));
        let back = normalize(&app(h.clone(), app(h.clone(), q("inl *")))).unwrap();
        assert_eq!(back.to_term(), q("inl *"));
        let inv = apply_inverse(&h, &q("1/sqrt2 * inl * + 1/sqrt2 * inr *")).unwrap();
        assert_eq!(inv.to_term(), q("inl *"));
    }

    #[test]
    fn ctrl_on_passive_branch() {
        let w = Iso::Ctrl(Box::new(qi(HAD)));
        let v = q("(inl *, inr *)");
        assert_eq!(apply(&w, &v).unwrap().to_term(), v);
        let r = apply(&w, &q("(inr *, inl *)")).unwrap();
        assert_eq!(r.parts.len(), 2);
    }

    #[test]
    fn swap_inverse_and_equality() {
        let w = qi(SWAP);
        assert_eq!(apply_inverse(&w, &q("inl *")).unwrap().to_term(), q("inr *"));
        assert!(equal_terms(&app(w.clone(), q("inl *")), &q("inr *")).unwrap());
        let t = q("(inl *, 1/sqrt2 * inl * + 1/sqrt2 * inr *)");
        assert!(equal_terms(&t, &t).unwrap());
        let h = qi(HAD);
        assert!(!equal_terms(&app(h.clone(), q("inl *")), &app(h, q("inr *"))).unwrap());
    }

    #[test]
    fn equality_requires_shared_type() {
        assert!(equal_terms(&q("*"), &q("inl *")).is_err());
    }

    #[test]
    fn nat_iso() {
        let pred = qi("{| zero <-> inl * | suc n <-> inr n }");
        assert_eq!(apply(&pred, &q("#2")).unwrap().to_term(), q("inr (suc zero)"));
        assert_eq!(apply_inverse(&pred, &q("inr #3")).unwrap().to_term(), q("#4"));
    }

    #[test]
    fn no_match_is_reported() {
        let w = qi("{| inl * <-> inl * }");
        assert!(matches!(apply(&w, &q("inr *")), Err(EvalError::NoMatch(_))));
    }

    fn qubit_value() -> impl Strategy<Value = Term> {
        (0.0f64..std::f64::consts::TAU, 0.0f64..std::f64::consts::TAU).prop_map(|(th, ph)| {
            let a = real(th.cos());
            let b = C64::from_polar(th.sin(), ph);
            Term::Sum(vec![(a, q("inl *")), (b, q("inr *"))])
        })
    }

    proptest! {
        #[test]
        fn inverse_round_trip(v in qubit_value(), u in qubit_value()) {
            let w = Iso::Tensor(Box::new(qi(HAD)), Box::new(qi(SWAP)));
            let input = pair(v, u);
            let out = apply(&w, &input).unwrap();
            let back = apply_inverse(&w, &out.to_term()).unwrap();
            prop_assert!(back.approx_eq(&normalize(&input).unwrap()));
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn normal_form_is_idempotent(v in qubit_value()) {
            let n = normalize(&app(qi(HAD), v)).unwrap();
            prop_assert!(normalize(&n.to_term()).unwrap().approx_eq(&n));
        }
    }
}
