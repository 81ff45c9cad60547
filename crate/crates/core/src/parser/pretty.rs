use crate::ast::*;
use std::f64::consts::FRAC_1_SQRT_2;

fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if (x - FRAC_1_SQRT_2).abs() < 1e-12 {
        return "1/sqrt2".into();
    }
    let rounded: f64 = format!("{:.11e}", x).parse().unwrap_or(x);
    if rounded.fract() == 0.0 && rounded.abs() < 1e15 {
        return format!("{}", rounded as i64);
    }
    let s = format!("{}", rounded);
    if s.len() > 20 {
        let e = format!("{:.11e}", rounded);
        let (mant, exp) = e.split_once('e').unwrap_or((&e, "0"));
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        return format!("{mant}e{exp}");
    }
    s
}

/// Prints a scalar so that the lexer reads it back as one literal (or
/// `1/sqrt2`). Complex values with both parts nonzero are parenthesized.
pub fn pretty_scalar(a: C64) -> String {
    let re_zero = a.re.abs() < 1e-15;
    let im_zero = a.im.abs() < 1e-15;
    if im_zero {
        if a.re < 0.0 {
            return format!("(-{})", fmt_real(-a.re));
        }
        return fmt_real(a.re);
    }
    if re_zero {
        if a.im < 0.0 {
            return format!("(-{}i)", fmt_plain(-a.im));
        }
        return format!("{}i", fmt_plain(a.im));
    }
    let sign = if a.im < 0.0 { '-' } else { '+' };
    if a.re < 0.0 {
        format!("(-{}{}{}i)", fmt_plain(-a.re), flip(sign), fmt_plain(a.im.abs()))
    } else {
        format!("({}{}{}i)", fmt_plain(a.re), sign, fmt_plain(a.im.abs()))
    }
}

fn flip(sign: char) -> char {
    if sign == '+' {
        '-'
    } else {
        '+'
    }
}

fn fmt_plain(x: f64) -> String {
    let s = fmt_real(x);
    if s == "1/sqrt2" {
        let rounded: f64 = format!("{:.11e}", x).parse().unwrap_or(x);
        format!("{}", rounded)
    } else {
        s
    }
}

// ---- types ----

pub fn pretty_type(t: &Type) -> String {
    ty_at(t, 0)
}

fn ty_at(t: &Type, level: u8) -> String {
    if t.is_classical_nat() {
        return "nat".into();
    }
    if let Some(elem) = t.as_list_elem() {
        return format!("[{}]", ty_at(elem, 0));
    }
    let (own, s) = match t {
        Type::Unit => (3, "I".to_string()),
        Type::Nat => (3, "Nat".to_string()),
        Type::Var(x) => (3, x.clone()),
        Type::Meta(n) => (3, format!("?{n}")),
        Type::Sum(a, b) => (0, format!("{} + {}", ty_at(a, 1), ty_at(b, 0))),
        Type::Tensor(a, b) => (1, format!("{} * {}", ty_at(a, 2), ty_at(b, 1))),
        Type::Mu(x, b) => (0, format!("mu {x}. {}", ty_at(b, 0))),
    };
    if own < level || (matches!(t, Type::Mu(..)) && level > 0) {
        format!("({s})")
    } else {
        s
    }
}

pub fn pretty_iso_type(t: &IsoType) -> String {
    match t {
        IsoType::Ground(a, b) => format!("{} <-> {}", pretty_type(a), pretty_type(b)),
        IsoType::Arrow(a, b) => {
            let l = match a.as_ref() {
                IsoType::Ground(..) | IsoType::Arrow(..) => format!("({})", pretty_iso_type(a)),
                IsoType::Meta(_) => pretty_iso_type(a),
            };
            format!("{l} -> {}", pretty_iso_type(b))
        }
        IsoType::Meta(n) => format!("?{n}"),
    }
}

// ---- terms ----

const T_FULL: u8 = 0;
const T_CONS: u8 = 1;
const T_APP: u8 = 2;
const T_ATOM: u8 = 3;

pub fn pretty_term(t: &Term) -> String {
    term_at(t, T_FULL)
}

fn as_numeral(t: &Term) -> Option<usize> {
    let mut n = 0;
    let mut cur = t;
    loop {
        match cur {
            Term::Fold(inner) => match inner.as_ref() {
                Term::InL(u) if **u == Term::Unit => return Some(n),
                Term::InR(rest) => {
                    n += 1;
                    cur = rest;
                }
                _ => return None,
            },
            _ => return None,
        }
    }
}

fn cons_parts(t: &Term) -> Option<(&Term, &Term)> {
    if let Term::Fold(inner) = t {
        if let Term::InR(p) = inner.as_ref() {
            if let Term::Pair(h, tl) = p.as_ref() {
                return Some((h, tl));
            }
        }
    }
    None
}

fn is_nil(t: &Term) -> bool {
    as_numeral(t) == Some(0)
}

fn list_items(t: &Term) -> Option<Vec<&Term>> {
    let mut items = Vec::new();
    let mut cur = t;
    while let Some((h, tl)) = cons_parts(cur) {
        items.push(h);
        cur = tl;
    }
    if is_nil(cur) && !items.is_empty() {
        Some(items)
    } else {
        None
    }
}

fn term_level(t: &Term) -> u8 {
    match t {
        Term::Sum(_) | Term::Let(..) => T_FULL,
        Term::Fold(_) if as_numeral(t).is_some() || list_items(t).is_some() => T_ATOM,
        Term::Fold(_) if cons_parts(t).is_some() => T_CONS,
        Term::InL(_) | Term::InR(_) | Term::Suc(_) | Term::Fold(_) | Term::App(..) => T_APP,
        _ => T_ATOM,
    }
}

fn term_at(t: &Term, level: u8) -> String {
    let s = term_raw(t);
    if term_level(t) < level {
        format!("({s})")
    } else {
        s
    }
}

fn prefix_arg(t: &Term) -> String {
    term_at(t, T_APP)
}

fn term_raw(t: &Term) -> String {
    match t {
        Term::Unit => "*".into(),
        Term::Var(x) => x.clone(),
        Term::Zero => "zero".into(),
        Term::Suc(a) => format!("suc {}", prefix_arg(a)),
        Term::InL(a) => format!("inl {}", prefix_arg(a)),
        Term::InR(a) => format!("inr {}", prefix_arg(a)),
        Term::Fold(a) => {
            if let Some(n) = as_numeral(t) {
                return format!("#{n}");
            }
            if let Some(items) = list_items(t) {
                let inner: Vec<String> = items.iter().map(|i| term_at(i, T_FULL)).collect();
                return format!("[{}]", inner.join(", "));
            }
            if let Some((h, tl)) = cons_parts(t) {
                return format!("{} :: {}", term_at(h, T_APP), term_at(tl, T_CONS));
            }
            format!("fold {}", prefix_arg(a))
        }
        Term::Pair(a, b) => {
            let mut items = vec![term_at(a, T_FULL)];
            let mut cur: &Term = b;
            while let Term::Pair(x, y) = cur {
                items.push(term_at(x, T_FULL));
                cur = y;
            }
            items.push(term_at(cur, T_FULL));
            format!("({})", items.join(", "))
        }
        Term::App(w, a) => format!("{} {}", iso_at(w, I_ATOM), term_at(a, T_ATOM)),
        Term::Let(p, a, b) => format!("let {} = {} in {}", term_raw(p), term_at(a, T_FULL), term_at(b, T_FULL)),
        Term::Sum(parts) => {
            if parts.is_empty() {
                return "0 * *".into();
            }
            let mut out = String::new();
            for (i, (alpha, u)) in parts.iter().enumerate() {
                let body = term_at(u, T_CONS);
                let real_neg = alpha.im.abs() < 1e-15 && alpha.re < 0.0;
                let coeff = if real_neg {
                    pretty_scalar(-*alpha)
                } else {
                    pretty_scalar(*alpha)
                };
                if i == 0 {
                    if real_neg {
                        out.push_str(&format!("-{coeff} * {body}"));
                    } else {
                        out.push_str(&format!("{coeff} * {body}"));
                    }
                } else if real_neg {
                    out.push_str(&format!(" - {coeff} * {body}"));
                } else {
                    out.push_str(&format!(" + {coeff} * {body}"));
                }
            }
            out
        }
    }
}

/// Prints a value using the sugar suggested by its type (numerals only at
/// `nat`, list brackets only at list types).
pub fn pretty_value_at(t: &Term, ty: &Type) -> String {
    if ty.is_classical_nat() {
        if let Some(n) = as_numeral(t) {
            return format!("#{n}");
        }
    }
    if let Some(elem) = ty.as_list_elem() {
        let mut items = Vec::new();
        let mut cur = t;
        while let Some((h, tl)) = cons_parts(cur) {
            items.push(pretty_value_at(h, elem));
            cur = tl;
        }
        if is_nil(cur) {
            return format!("[{}]", items.join(", "));
        }
    }
    match (t, ty) {
        (Term::InL(a), Type::Sum(l, _)) => format!("inl {}", paren_value(a, l)),
        (Term::InR(a), Type::Sum(_, r)) => format!("inr {}", paren_value(a, r)),
        (Term::Pair(a, b), Type::Tensor(l, r)) => {
            format!("({}, {})", pretty_value_at(a, l), pretty_value_at(b, r))
        }
        (Term::Fold(a), Type::Mu(..)) => {
            let unfolded = ty.unfold().unwrap_or_else(|| ty.clone());
            format!("fold {}", paren_value(a, &unfolded))
        }
        (Term::Sum(parts), _) => {
            let mut out = String::new();
            for (i, (alpha, u)) in parts.iter().enumerate() {
                let body = pretty_value_at(u, ty);
                let body = if term_level(u) < T_CONS {
                    format!("({body})")
                } else {
                    body
                };
                let real_neg = alpha.im.abs() < 1e-15 && alpha.re < 0.0;
                let coeff = if real_neg {
                    pretty_scalar(-*alpha)
                } else {
                    pretty_scalar(*alpha)
                };
                let sep = match (i, real_neg) {
                    (0, true) => "-".to_string(),
                    (0, false) => String::new(),
                    (_, true) => " - ".to_string(),
                    (_, false) => " + ".to_string(),
                };
                out.push_str(&format!("{sep}{coeff} * {body}"));
            }
            out
        }
        _ => pretty_term(t),
    }
}

fn paren_value(t: &Term, ty: &Type) -> String {
    let s = pretty_value_at(t, ty);
    let atomic = matches!(t, Term::Unit | Term::Var(_) | Term::Zero | Term::Pair(..))
        || (ty.is_classical_nat() && as_numeral(t).is_some())
        || (ty.as_list_elem().is_some() && s.starts_with('['));
    if atomic || matches!(t, Term::InL(_) | Term::InR(_) | Term::Suc(_)) {
        s
    } else {
        format!("({s})")
    }
}

// ---- isos ----

const I_COMPOSE: u8 = 0;
const I_SUM: u8 = 1;
const I_TENSOR: u8 = 2;
const I_APP: u8 = 3;
const I_ATOM: u8 = 4;

pub fn pretty_iso(w: &Iso) -> String {
    iso_at(w, I_COMPOSE)
}

fn iso_level(w: &Iso) -> u8 {
    match w {
        Iso::Compose(..) | Iso::Lambda(..) | Iso::Fix(..) | Iso::NFix(..) => I_COMPOSE,
        Iso::Sum(..) => I_SUM,
        Iso::Tensor(..) => I_TENSOR,
        Iso::App(..) => I_APP,
        _ => I_ATOM,
    }
}

fn iso_at(w: &Iso, level: u8) -> String {
    let s = iso_raw(w);
    if iso_level(w) < level {
        format!("({s})")
    } else {
        s
    }
}

fn iso_raw(w: &Iso) -> String {
    match w {
        Iso::Clauses(cs) => {
            if cs.is_empty() {
                return "{}".into();
            }
            let body: Vec<String> = cs
                .iter()
                .map(|(l, r)| format!("| {} <-> {}", term_at(l, T_FULL), term_at(r, T_FULL)))
                .collect();
            format!("{{ {} }}", body.join(" "))
        }
        Iso::Tensor(a, b) => format!("{} * {}", iso_at(a, I_APP), iso_at(b, I_TENSOR)),
        Iso::Sum(a, b) => format!("{} + {}", iso_at(a, I_TENSOR), iso_at(b, I_SUM)),
        Iso::Compose(a, b) => format!("{} <<< {}", iso_at(a, I_SUM), iso_at(b, I_COMPOSE)),
        Iso::Inverse(a) => format!("inv {}", iso_at(a, I_ATOM)),
        Iso::Ctrl(a) => format!("ctrl {}", iso_at(a, I_ATOM)),
        Iso::Lambda(x, b) => format!("\\{x}. {}", iso_at(b, I_COMPOSE)),
        Iso::Var(x) => x.clone(),
        Iso::App(a, b) => format!("{} {}", iso_at(a, I_APP), iso_at(b, I_ATOM)),
        Iso::Fix(x, b) => format!("fix {x}. {}", iso_at(b, I_COMPOSE)),
        Iso::NFix(n, x, b) => format!("nfix {n} {x}. {}", iso_at(b, I_COMPOSE)),
        Iso::Omega => "omega".into(),
        Iso::Ann(a, t) => format!("({} : {})", iso_at(a, I_COMPOSE), pretty_iso_type(t)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_iso, parse_term, parse_type};
    use proptest::prelude::*;

    #[test]
    fn simple_terms() {
        assert_eq!(pretty_term(&inl(Term::Unit)), "inl *");
        assert_eq!(pretty_term(&suc(suc(Term::Zero))), "suc suc zero");
        assert_eq!(pretty_term(&numeral(3)), "#3");
        assert_eq!(pretty_term(&list_of(vec![numeral(1), numeral(2)])), "[#1, #2]");
        assert_eq!(pretty_term(&cons(var("h"), var("t"))), "h :: t");
        assert_eq!(pretty_term(&tuple(vec![var("a"), var("b"), var("c")])), "(a, b, c)");
    }

    #[test]
    fn ket_plus() {
        let h = FRAC_1_SQRT_2;
        let t = Term::Sum(vec![(real(h), inl(Term::Unit)), (real(h), inr(Term::Unit))]);
        assert_eq!(pretty_term(&t), "1/sqrt2 * inl * + 1/sqrt2 * inr *");
        let m = Term::Sum(vec![(real(h), inl(Term::Unit)), (real(-h), inr(Term::Unit))]);
        assert_eq!(pretty_term(&m), "1/sqrt2 * inl * - 1/sqrt2 * inr *");
    }

    #[test]
    fn scalars() {
        assert_eq!(pretty_scalar(real(0.5)), "0.5");
        assert_eq!(pretty_scalar(real(2.0)), "2");
        assert_eq!(pretty_scalar(c(0.0, 1.0)), "1i");
        assert_eq!(pretty_scalar(c(0.5, -0.25)), "(0.5-0.25i)");
        assert_eq!(pretty_scalar(c(-0.5, 0.25)), "(-0.5-0.25i)");
    }

    #[test]
    fn types() {
        assert_eq!(pretty_type(&Type::nat()), "nat");
        assert_eq!(pretty_type(&Type::list(Type::nat())), "[nat]");
        assert_eq!(pretty_type(&Type::tensor(Type::qubit(), Type::Unit)), "(I + I) * I");
        assert_eq!(
            pretty_type(&Type::mu(
                "X",
                Type::sum(Type::Unit, Type::tensor(Type::Var("X".into()), Type::Unit))
            )),
            "mu X. I + X * I"
        );
    }

    #[test]
    fn typed_values() {
        let t = list_of(vec![]);
        assert_eq!(pretty_value_at(&t, &Type::list(Type::nat())), "[]");
        assert_eq!(pretty_value_at(&t, &Type::nat()), "#0");
    }

    fn rt_iso(s: &str, d: Dialect) {
        let w = parse_iso(s, d, &[]).unwrap();
        let printed = pretty_iso(&w);
        let again = parse_iso(&printed, d, &[]).unwrap();
        assert!(w.approx_eq(&again), "{s} => {printed}");
    }

    #[test]
    fn round_trip_examples() {
        rt_iso(
            "{| inl * <-> 1/sqrt2 * inl * + 1/sqrt2 * inr * | inr * <-> 1/sqrt2 * inl * - 1/sqrt2 * inr * }",
            Dialect::Quantum,
        );
        rt_iso(
            "fix f. { | inl x <-> inl x | inr y <-> let z = f y in inr z }",
            Dialect::Classical,
        );
        rt_iso("(\\g. fix f. g <<< f) {| x <-> x }", Dialect::Classical);
        rt_iso(
            "ctrl ({ x <-> x } * inv {| * <-> * }) + { x <-> x } <<< { x <-> x }",
            Dialect::Quantum,
        );
        rt_iso("nfix 3 f. ({ x <-> x } : nat <-> nat)", Dialect::Classical);
        rt_iso("{}", Dialect::Classical);
        let t = parse_term("(0.5 * inl * + 0.5 * inr *, *)", Dialect::Quantum, &[]).unwrap();
        assert!(matches!(t, Term::Pair(..)));
    }

    fn arb_type() -> impl Strategy<Value = Type> {
        let leaf = prop_oneof![Just(Type::Unit), Just(Type::nat()), Just(Type::Var("X".into()))];
        leaf.prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::sum(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Type::tensor(a, b)),
                inner.clone().prop_map(|a| Type::mu("Y", Type::sum(Type::Unit, a))),
                inner.prop_map(Type::list),
            ]
        })
    }

    fn arb_scalar() -> impl Strategy<Value = C64> {
        prop_oneof![
            Just(real(FRAC_1_SQRT_2)),
            Just(real(-FRAC_1_SQRT_2)),
            (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| c(a, b)),
            (-2.0f64..2.0).prop_map(real),
        ]
    }

    fn arb_qterm() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            Just(Term::Unit),
            Just(Term::Zero),
            prop::sample::select(vec!["x", "y"]).prop_map(var),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(inl),
                inner.clone().prop_map(inr),
                inner.clone().prop_map(suc),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| pair(a, b)),
                prop::collection::vec((arb_scalar(), inner.clone()), 1..3).prop_map(Term::Sum),
                inner.prop_map(|t| app(Iso::Clauses(vec![(var("z"), var("z"))]), t)),
            ]
        })
    }

    fn arb_cterm() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![Just(Term::Unit), prop::sample::select(vec!["x", "y"]).prop_map(var)];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(inl),
                inner.clone().prop_map(inr),
                inner.clone().prop_map(fold),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| pair(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| let_in(pair(var("p"), var("q")), a, b)),
                inner.prop_map(|t| app(Iso::Fix("f".into(), Box::new(Iso::Var("f".into()))), t)),
            ]
        })
    }

    proptest! {
        #[test]
        fn types_round_trip(t in arb_type()) {
            let back = parse_type(&pretty_type(&t)).unwrap();
            prop_assert!(back.alpha_eq(&t), "{:?} vs {:?}", back, t);
        }

        #[test]
        fn quantum_terms_round_trip(t in arb_qterm()) {
            let s = pretty_term(&t);
            let back = parse_term(&s, Dialect::Quantum, &[]).unwrap();
            prop_assert!(back.approx_eq(&t), "{} reparsed as {:?}", s, back);
        }

        #[test]
        fn classical_terms_round_trip(t in arb_cterm()) {
            let s = pretty_term(&t);
            let back = parse_term(&s, Dialect::Classical, &[]).unwrap();
            prop_assert!(back.approx_eq(&t), "{} reparsed as {:?}", s, back);
        }

        #[test]
        fn scalars_round_trip(a in arb_scalar()) {
            let t = Term::Sum(vec![(a, Term::Unit)]);
            let back = parse_term(&pretty_term(&t), Dialect::Quantum, &[]).unwrap();
            prop_assert!(back.approx_eq(&t));
        }
    }
}
