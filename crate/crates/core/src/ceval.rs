//! Small-step evaluation of the classical dialect: iso reduction, fueled
//! call-by-value term reduction and the finitary fragment (`nfix`, `omega`).

use crate::ast::*;
use crate::parser::{pretty_iso, pretty_term};
use std::collections::BTreeSet;
use std::fmt;

pub const DEFAULT_FUEL: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Value(Term),
    Stuck(String),
    OutOfFuel(usize),
    Bottom,
}

impl Outcome {
    pub fn value(&self) -> Option<&Term> {
        match self {
            Outcome::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Value(v) => write!(f, "{}", pretty_term(v)),
            Outcome::Stuck(site) => write!(f, "stuck: {site}"),
            Outcome::OutOfFuel(n) => write!(f, "out-of-fuel after {n} steps"),
            Outcome::Bottom => write!(f, "bottom"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum IsoStep {
    Next(Iso),
    Done,
}

/// One step of iso reduction; `Done` on iso values and on isos that cannot
/// move.
pub fn step_iso(w: &Iso) -> IsoStep {
    match w {
        Iso::Fix(phi, body) => IsoStep::Next(body.subst(phi, w)),
        Iso::NFix(0, ..) => IsoStep::Next(Iso::Omega),
        Iso::NFix(n, phi, body) => IsoStep::Next(body.subst(phi, &Iso::NFix(n - 1, phi.clone(), body.clone()))),
        Iso::App(f, arg) => match f.as_ref() {
            Iso::Lambda(phi, body) => IsoStep::Next(body.subst(phi, arg)),
            _ => match step_iso(f) {
                IsoStep::Next(g) => IsoStep::Next(Iso::App(Box::new(g), arg.clone())),
                IsoStep::Done => IsoStep::Done,
            },
        },
        Iso::Ann(u, _) => IsoStep::Next((**u).clone()),
        Iso::Inverse(u) => match invert_iso(u) {
            Ok(inv) => IsoStep::Next(inv),
            Err(_) => IsoStep::Done,
        },
        _ => IsoStep::Done,
    }
}

/// Syntactic inverse of a classical iso. Clause bodies must be chains of
/// `let p = omega q in ...` ending in a value, with `p` and `q` patterns.
pub fn invert_iso(w: &Iso) -> Result<Iso, String> {
    Ok(match w {
        Iso::Clauses(cs) => Iso::Clauses(cs.iter().map(flip_clause).collect::<Result<_, _>>()?),
        Iso::Compose(outer, inner) => Iso::Compose(Box::new(inv(inner)), Box::new(inv(outer))),
        Iso::Inverse(u) => (**u).clone(),
        Iso::Lambda(phi, body) => Iso::Lambda(phi.clone(), Box::new(invert_iso(body)?)),
        Iso::App(f, arg) => Iso::App(Box::new(invert_iso(f)?), arg.clone()),
        Iso::Fix(phi, body) => Iso::Fix(phi.clone(), Box::new(swap_inverse(&invert_iso(body)?, phi))),
        Iso::NFix(n, phi, body) => Iso::NFix(*n, phi.clone(), Box::new(swap_inverse(&invert_iso(body)?, phi))),
        Iso::Ann(u, t) => match inverse_annotation(t) {
            Some(t) => Iso::Ann(Box::new(invert_iso(u)?), t),
            None => invert_iso(u)?,
        },
        Iso::Var(_) => Iso::Inverse(Box::new(w.clone())),
        Iso::Omega => Iso::Omega,
        Iso::Tensor(a, b) => Iso::Tensor(Box::new(inv(a)), Box::new(inv(b))),
        Iso::Sum(a, b) => Iso::Sum(Box::new(inv(a)), Box::new(inv(b))),
        Iso::Ctrl(a) => Iso::Ctrl(Box::new(inv(a))),
    })
}

fn inverse_annotation(t: &IsoType) -> Option<IsoType> {
    match t {
        IsoType::Ground(a, b) => Some(IsoType::Ground(b.clone(), a.clone())),
        IsoType::Arrow(a, b) => Some(IsoType::Arrow(a.clone(), Box::new(inverse_annotation(b)?))),
        IsoType::Meta(_) => None,
    }
}

fn inv(w: &Iso) -> Iso {
    match w {
        Iso::Inverse(u) => (**u).clone(),
        _ => Iso::Inverse(Box::new(w.clone())),
    }
}

/// Inside the inverse of a fixpoint body, `phi` names the inverted fixpoint:
/// `inv phi` becomes `phi` and `phi` becomes `inv phi`.
fn swap_inverse(w: &Iso, phi: &str) -> Iso {
    let rec = |u: &Iso| swap_inverse(u, phi);
    match w {
        Iso::Inverse(u) if matches!(u.as_ref(), Iso::Var(x) if x == phi) => Iso::Var(phi.to_string()),
        Iso::Var(x) if x == phi => Iso::Inverse(Box::new(w.clone())),
        Iso::Lambda(x, _) | Iso::Fix(x, _) | Iso::NFix(_, x, _) if x == phi => w.clone(),
        Iso::Lambda(x, b) => Iso::Lambda(x.clone(), Box::new(rec(b))),
        Iso::Fix(x, b) => Iso::Fix(x.clone(), Box::new(rec(b))),
        Iso::NFix(n, x, b) => Iso::NFix(*n, x.clone(), Box::new(rec(b))),
        Iso::Clauses(cs) => Iso::Clauses(
            cs.iter()
                .map(|(l, r)| (l.clone(), r.map_isos(&mut |u| swap_inverse(u, phi))))
                .collect(),
        ),
        Iso::Tensor(a, b) => Iso::Tensor(Box::new(rec(a)), Box::new(rec(b))),
        Iso::Sum(a, b) => Iso::Sum(Box::new(rec(a)), Box::new(rec(b))),
        Iso::Compose(a, b) => Iso::Compose(Box::new(rec(a)), Box::new(rec(b))),
        Iso::App(a, b) => Iso::App(Box::new(rec(a)), Box::new(rec(b))),
        Iso::Inverse(a) => Iso::Inverse(Box::new(rec(a))),
        Iso::Ctrl(a) => Iso::Ctrl(Box::new(rec(a))),
        Iso::Ann(a, t) => Iso::Ann(Box::new(rec(a)), t.clone()),
        Iso::Var(_) | Iso::Omega => w.clone(),
    }
}

fn flip_clause((lhs, rhs): &(Term, Term)) -> Result<(Term, Term), String> {
    let mut steps: Vec<(Term, Option<Iso>, Term)> = Vec::new();
    let mut cur = rhs.clone();
    let mut avoid: BTreeSet<String> = lhs.free_vars();
    avoid.extend(rhs.vars_in_order());
    loop {
        match cur {
            Term::Let(p, bound, rest) => {
                let (w, arg) = split_bound(&bound)?;
                steps.push(((*p).clone(), w, arg));
                cur = *rest;
            }
            Term::App(..) => {
                let z = fresh_name("r", &avoid);
                avoid.insert(z.clone());
                let (w, arg) = split_bound(&cur)?;
                steps.push((var(&z), w, arg));
                cur = var(&z);
            }
            _ => break,
        }
    }
    if !cur.is_value() {
        return Err(format!("clause body `{}` does not end in a value", pretty_term(rhs)));
    }
    let mut body = lhs.clone();
    for (p, w, arg) in steps.into_iter() {
        let bound = match w {
            Some(w) => app(inv(&w), p),
            None => p,
        };
        body = let_in(arg, bound, body);
    }
    Ok((cur, body))
}

fn split_bound(t: &Term) -> Result<(Option<Iso>, Term), String> {
    let (w, arg) = match t {
        Term::App(w, arg) => (Some((**w).clone()), (**arg).clone()),
        other => (None, other.clone()),
    };
    if !arg.is_pattern() {
        return Err(format!(
            "`{}` cannot be inverted: the argument must be a pattern",
            pretty_term(t)
        ));
    }
    Ok((w, arg))
}

enum Step {
    Next(Term, usize),
    Value,
    Stuck(String),
    Bottom,
}

/// Matches a value pattern against a closed value.
pub fn match_value(p: &Term, v: &Term) -> Option<Valuation> {
    match (p, v) {
        (Term::Var(x), _) => Some(Valuation::singleton(x, v.clone())),
        (Term::Unit, Term::Unit) | (Term::Zero, Term::Zero) => Some(Valuation::new()),
        (Term::InL(a), Term::InL(b))
        | (Term::InR(a), Term::InR(b))
        | (Term::Fold(a), Term::Fold(b))
        | (Term::Suc(a), Term::Suc(b)) => match_value(a, b),
        (Term::Pair(p1, p2), Term::Pair(v1, v2)) => match_value(p1, v1)?.union(match_value(p2, v2)?),
        _ => None,
    }
}

fn wrap(s: Step, f: impl FnOnce(Term) -> Term) -> Step {
    match s {
        Step::Next(t, n) => Step::Next(f(t), n),
        other => other,
    }
}

fn step(t: &Term) -> Step {
    if t.is_value() {
        return Step::Value;
    }
    match t {
        Term::InL(u) => wrap(step(u), inl),
        Term::InR(u) => wrap(step(u), inr),
        Term::Fold(u) => wrap(step(u), fold),
        Term::Pair(a, b) => {
            if !a.is_value() {
                let b = (**b).clone();
                wrap(step(a), |a| pair(a, b))
            } else {
                let a = (**a).clone();
                wrap(step(b), |b| pair(a, b))
            }
        }
        Term::Let(p, t1, t2) => {
            if !t1.is_value() {
                let (p, t2) = ((**p).clone(), (**t2).clone());
                return wrap(step(t1), |t1| let_in(p, t1, t2));
            }
            match match_value(p, t1) {
                Some(sigma) => Step::Next(t2.subst(&sigma), 1),
                None => Step::Stuck(format!(
                    "pattern `{}` does not match `{}`",
                    pretty_term(p),
                    pretty_term(t1)
                )),
            }
        }
        Term::App(w, u) => step_app(w, u),
        Term::Var(x) => Step::Stuck(format!("free variable `{x}`")),
        Term::Unit | Term::Zero | Term::Suc(_) | Term::Sum(_) => {
            Step::Stuck(format!("`{}` is not a classical term", pretty_term(t)))
        }
    }
}

fn peel_ann(w: &Iso) -> &Iso {
    match w {
        Iso::Ann(u, _) => peel_ann(u),
        _ => w,
    }
}

fn step_app(w: &Iso, u: &Term) -> Step {
    match peel_ann(w) {
        Iso::Clauses(cs) => {
            if !u.is_value() {
                let w = w.clone();
                return wrap(step(u), |u| app(w, u));
            }
            let mut matches = 0;
            let mut first = None;
            for (l, r) in cs {
                if let Some(sigma) = match_value(l, u) {
                    matches += 1;
                    if first.is_none() {
                        first = Some(r.subst(&sigma));
                    }
                }
            }
            match first {
                Some(t) => Step::Next(t, matches),
                None => Step::Stuck(format!("no clause matches `{}`", pretty_term(u))),
            }
        }
        Iso::Omega => {
            if !u.is_value() {
                let w = w.clone();
                return wrap(step(u), |u| app(w, u));
            }
            Step::Bottom
        }
        Iso::Compose(outer, inner) if !matches!(w, Iso::Ann(..)) => {
            Step::Next(app((**outer).clone(), app((**inner).clone(), u.clone())), 1)
        }
        _ => match step_iso(w) {
            IsoStep::Next(w2) => Step::Next(app(w2, u.clone()), 1),
            IsoStep::Done => Step::Stuck(format!("iso `{}` cannot be applied", short(&pretty_iso(w)))),
        },
    }
}

fn short(s: &str) -> String {
    if s.chars().count() > 60 {
        format!("{}...", s.chars().take(57).collect::<String>())
    } else {
        s.to_string()
    }
}

/// Runs at most `fuel` steps.
pub fn eval(t: &Term, fuel: usize) -> Outcome {
    let mut cur = t.clone();
    for _ in 0..fuel {
        match step(&cur) {
            Step::Next(next, _) => cur = next,
            Step::Value => return Outcome::Value(cur),
            Step::Stuck(site) => return Outcome::Stuck(site),
            Step::Bottom => return Outcome::Bottom,
        }
    }
    if cur.is_value() {
        Outcome::Value(cur)
    } else {
        Outcome::OutOfFuel(fuel)
    }
}

/// A reduction sequence with the number of rules applicable at each step.
#[derive(Clone, Debug)]
pub struct Trace {
    pub terms: Vec<Term>,
    pub applicable: Vec<usize>,
    pub outcome: Outcome,
}

pub fn eval_traced(t: &Term, fuel: usize) -> Trace {
    let mut terms = vec![t.clone()];
    let mut applicable = Vec::new();
    for _ in 0..fuel {
        let cur = terms.last().expect("non-empty trace");
        let outcome = match step(cur) {
            Step::Next(next, n) => {
                applicable.push(n);
                terms.push(next);
                continue;
            }
            Step::Value => Outcome::Value(cur.clone()),
            Step::Stuck(site) => Outcome::Stuck(site),
            Step::Bottom => Outcome::Bottom,
        };
        return Trace {
            terms,
            applicable,
            outcome,
        };
    }
    let last = terms.last().expect("non-empty trace").clone();
    let outcome = if last.is_value() {
        Outcome::Value(last)
    } else {
        Outcome::OutOfFuel(fuel)
    };
    Trace {
        terms,
        applicable,
        outcome,
    }
}

/// Runs a finitary term to completion.
pub fn eval_finitary(t: &Term) -> Outcome {
    let mut cur = t.clone();
    loop {
        match step(&cur) {
            Step::Next(next, _) => cur = next,
            Step::Value => return Outcome::Value(cur),
            Step::Stuck(site) => return Outcome::Stuck(site),
            Step::Bottom => return Outcome::Bottom,
        }
    }
}

/// Replaces every `fix` by `nfix n`.
pub fn finitize_iso(w: &Iso, n: u32) -> Iso {
    let rec = |u: &Iso| finitize_iso(u, n);
    match w {
        Iso::Fix(phi, body) => Iso::NFix(n, phi.clone(), Box::new(rec(body))),
        Iso::NFix(k, phi, body) => Iso::NFix(*k, phi.clone(), Box::new(rec(body))),
        Iso::Lambda(x, b) => Iso::Lambda(x.clone(), Box::new(rec(b))),
        Iso::Clauses(cs) => Iso::Clauses(
            cs.iter()
                .map(|(l, r)| (finitize_term(l, n), finitize_term(r, n)))
                .collect(),
        ),
        Iso::Tensor(a, b) => Iso::Tensor(Box::new(rec(a)), Box::new(rec(b))),
        Iso::Sum(a, b) => Iso::Sum(Box::new(rec(a)), Box::new(rec(b))),
        Iso::Compose(a, b) => Iso::Compose(Box::new(rec(a)), Box::new(rec(b))),
        Iso::App(a, b) => Iso::App(Box::new(rec(a)), Box::new(rec(b))),
        Iso::Inverse(a) => Iso::Inverse(Box::new(rec(a))),
        Iso::Ctrl(a) => Iso::Ctrl(Box::new(rec(a))),
        Iso::Ann(a, t) => Iso::Ann(Box::new(rec(a)), t.clone()),
        Iso::Var(_) | Iso::Omega => w.clone(),
    }
}

pub fn finitize_term(t: &Term, n: u32) -> Term {
    t.map_isos(&mut |w| finitize_iso(w, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, parse_iso, parse_term};
    use crate::typeck::{check_term_at, elaborate_term, typecheck_term, Context};
    use proptest::prelude::*;

    fn ct(s: &str) -> Term {
        parse_term(s, Dialect::Classical, &[]).unwrap()
    }

    fn ci(s: &str) -> Iso {
        parse_iso(s, Dialect::Classical, &[]).unwrap()
    }

    const MAP: &str = "iso map : (A <-> B) -> ([A] <-> [B]) = \\g. fix f. {| [] <-> [] | h :: t <-> let h2 = g h in let t2 = f t in h2 :: t2 };\n\
                       iso succ : nat <-> nat = {| n <-> fold (inr n) };\n";

    fn program_term(src: &str, term: &str) -> Term {
        let p = parse(&format!("{src}main = {term};"), Dialect::Classical).unwrap();
        let main = p.main().unwrap();
        match &main.kind {
            crate::parser::DeclKind::Main { term, .. } => p.close_term(term),
            _ => unreachable!(),
        }
    }

    #[test]
    fn fix_unfolds_to_itself() {
        let w = ci("fix f. f");
        assert_eq!(step_iso(&w), IsoStep::Next(w.clone()));
        assert_eq!(step_iso(&ci("{| x <-> x }")), IsoStep::Done);
    }

    #[test]
    fn beta() {
        let w = ci("(\\g. {| x <-> let y = g x in y }) {| a <-> a }");
        match step_iso(&w) {
            IsoStep::Next(Iso::Clauses(cs)) => assert!(matches!(&cs[0].1, Term::Let(..))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stuck_on_missing_clause() {
        let t = ct("{| inr * <-> inl * } (inl *)");
        assert!(matches!(eval(&t, 100), Outcome::Stuck(_)));
    }

    #[test]
    fn divergence() {
        let t = ct("(fix f. f) (inl *)");
        assert_eq!(eval(&t, 100), Outcome::OutOfFuel(100));
        let t = ct("(fix f. {| x <-> let y = f x in y }) (inl *)");
        assert_eq!(eval(&t, 100), Outcome::OutOfFuel(100));
        for n in 0..5 {
            assert_eq!(
                eval_finitary(&finitize_term(&ct("(fix f. f) (inl *)"), n)),
                Outcome::Bottom
            );
            let t = finitize_term(&ct("(fix f. {| x <-> let y = f x in y }) (inl *)"), n);
            assert_eq!(eval_finitary(&t), Outcome::Bottom);
        }
    }

    #[test]
    fn finitize_is_identity_without_fix() {
        let t = ct("{| x <-> x } *");
        assert_eq!(finitize_term(&t, 3), t);
        assert_eq!(
            finitize_iso(&ci("fix f. f"), 0),
            Iso::NFix(0, "f".into(), Box::new(Iso::Var("f".into())))
        );
    }

    #[test]
    fn map_successor() {
        let t = program_term(MAP, "(map succ) [#0, #1]");
        assert_eq!(eval(&t, DEFAULT_FUEL), Outcome::Value(ct("[#1, #2]")));
        let fin = finitize_term(&t, 3);
        assert_eq!(eval_finitary(&fin), Outcome::Value(ct("[#1, #2]")));
        let t = program_term(MAP, "(map succ) [#0, #1, #2, #3]");
        assert_eq!(eval_finitary(&finitize_term(&t, 3)), Outcome::Bottom);
    }

    #[test]
    fn inverse_of_map() {
        let t = program_term(MAP, "(inv (map succ)) [#1, #2]");
        assert_eq!(eval(&t, DEFAULT_FUEL), Outcome::Value(ct("[#0, #1]")));
        let t = program_term(MAP, "(inv (map succ)) [#0]");
        assert!(matches!(eval(&t, DEFAULT_FUEL), Outcome::Stuck(_)));
    }

    #[test]
    fn values_return_themselves() {
        let v = ct("(inl *, fold (inr *))");
        assert_eq!(eval_finitary(&v), Outcome::Value(v.clone()));
        assert_eq!(eval(&v, 0), Outcome::Value(v));
    }

    #[test]
    fn trace_is_deterministic_and_typed() {
        let t = program_term(MAP, "(map succ) [#0, #1]");
        let ty = typecheck_term(&Context::new(), &t, Dialect::Classical).unwrap();
        let t = elaborate_term(&t, Dialect::Classical).unwrap();
        let trace = eval_traced(&t, DEFAULT_FUEL);
        assert!(trace.applicable.iter().all(|n| *n == 1));
        for s in &trace.terms {
            if let Err(e) = check_term_at(s, &ty, Dialect::Classical) {
                panic!("{e} at {}", pretty_term(s));
            }
        }
    }

    proptest! {
        #[test]
        fn finitization_is_monotone(xs in proptest::collection::vec(0usize..4, 0..4), extra in 0u32..3) {
            let items: Vec<String> = xs.iter().map(|n| format!("#{n}")).collect();
            let t = program_term(MAP, &format!("(map succ) [{}]", items.join(", ")));
            let depth = xs.len() as u32 + 1;
            let fin = eval_finitary(&finitize_term(&t, depth + extra));
            prop_assert_eq!(fin.clone(), eval(&t, DEFAULT_FUEL));
            prop_assert!(fin.value().is_some());
        }
    }
}
