//! Concrete syntax for both dialects and a pretty-printer whose output parses
//! back to the same tree.

mod lexer;
pub mod pretty;

pub use lexer::{lex, Tok};
pub use pretty::{pretty_iso, pretty_iso_type, pretty_scalar, pretty_term, pretty_type, pretty_value_at};

use crate::ast::*;
use crate::diag::{Diagnostic, Pos, E_SYNTAX, E_UNBOUND_ISO};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub enum DeclKind {
    Iso { iso: Iso, ty: Option<IsoType> },
    Val { term: Term, ty: Option<Type> },
    Main { term: Term, ty: Option<Type> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decl {
    pub name: String,
    pub pos: Pos,
    pub kind: DeclKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceProgram {
    pub dialect: Dialect,
    pub decls: Vec<Decl>,
}

impl SourceProgram {
    pub fn iso_names(&self) -> Vec<String> {
        self.decls
            .iter()
            .filter(|d| matches!(d.kind, DeclKind::Iso { .. }))
            .map(|d| d.name.clone())
            .collect()
    }

    pub fn main(&self) -> Option<&Decl> {
        self.decls.iter().find(|d| matches!(d.kind, DeclKind::Main { .. }))
    }

    /// The iso named `main`, otherwise the last iso declaration.
    pub fn entry_iso_name(&self) -> Option<String> {
        let names = self.iso_names();
        if names.iter().any(|n| n == "main") {
            return Some("main".into());
        }
        names.last().cloned()
    }

    /// Declared isos with every reference to an earlier declaration inlined.
    /// Annotated declarations are wrapped in `Iso::Ann`.
    pub fn closed_isos(&self) -> BTreeMap<String, Iso> {
        let mut env: Vec<(String, Iso)> = Vec::new();
        for d in &self.decls {
            if let DeclKind::Iso { iso, ty } = &d.kind {
                let mut closed = close_iso(iso, &env);
                if let Some(t) = ty {
                    closed = Iso::Ann(Box::new(closed), t.clone());
                }
                env.push((d.name.clone(), closed));
            }
        }
        env.into_iter().collect()
    }

    pub fn closed_iso(&self, name: &str) -> Option<Iso> {
        self.closed_isos().remove(name)
    }

    /// Closes a term parsed against this program: iso references are inlined
    /// and free variables naming earlier `val` declarations are replaced.
    pub fn close_term(&self, t: &Term) -> Term {
        let isos = self.closed_isos();
        let env: Vec<(String, Iso)> = isos.into_iter().collect();
        let mut out = close_term_isos(t, &env);
        let mut vals = Valuation::new();
        for d in &self.decls {
            if let DeclKind::Val { term, .. } = &d.kind {
                let closed = close_term_isos(term, &env).subst(&vals);
                if closed.free_vars().is_empty() && vals.get(&d.name).is_none() {
                    let _ = vals.bind(&d.name, closed);
                }
            }
        }
        out = out.subst(&vals);
        out
    }

    pub fn pos_of(&self, name: &str) -> Pos {
        self.decls
            .iter()
            .find(|d| d.name == name)
            .map(|d| d.pos)
            .unwrap_or_default()
    }
}

fn close_iso(w: &Iso, env: &[(String, Iso)]) -> Iso {
    let free = w.free_iso_vars();
    let mut out = w.clone();
    for (name, def) in env.iter().rev() {
        if free.contains(name) {
            out = out.subst(name, def);
        }
    }
    out
}

fn close_term_isos(t: &Term, env: &[(String, Iso)]) -> Term {
    let free = t.free_iso_vars();
    let mut out = t.clone();
    for (name, def) in env {
        if free.contains(name) {
            out = out.subst_iso(name, def);
        }
    }
    out
}

const KEYWORDS: &[&str] = &[
    "dialect",
    "quantum",
    "classical",
    "iso",
    "val",
    "main",
    "let",
    "in",
    "inl",
    "inr",
    "zero",
    "suc",
    "fold",
    "fix",
    "nfix",
    "ctrl",
    "inv",
    "omega",
    "mu",
    "nat",
    "sqrt2inv",
    "sqrt2",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub fn dialect_for_path(path: &str) -> Option<Dialect> {
    if path.ends_with(".qrev") {
        Some(Dialect::Quantum)
    } else if path.ends_with(".rev") {
        Some(Dialect::Classical)
    } else {
        None
    }
}

/// Parses a whole program. A `dialect` header, when present, must agree with `dialect`.
pub fn parse(text: &str, dialect: Dialect) -> Result<SourceProgram, Diagnostic> {
    let toks = lex(text)?;
    let mut p = Parser::new(toks, dialect, &[]);
    p.program()
}

/// Parses a program whose dialect comes from its header, falling back to `default`.
pub fn parse_auto(text: &str, default: Dialect) -> Result<SourceProgram, Diagnostic> {
    let toks = lex(text)?;
    let mut d = default;
    if let (Some((Tok::Ident(kw), _)), Some((Tok::Ident(which), _))) = (toks.first(), toks.get(1)) {
        if kw == "dialect" {
            if which == "quantum" {
                d = Dialect::Quantum;
            } else if which == "classical" {
                d = Dialect::Classical;
            }
        }
    }
    let mut p = Parser::new(toks, d, &[]);
    p.program()
}

pub fn parse_term(text: &str, dialect: Dialect, iso_scope: &[String]) -> Result<Term, Diagnostic> {
    let mut p = Parser::new(lex(text)?, dialect, iso_scope);
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_iso(text: &str, dialect: Dialect, iso_scope: &[String]) -> Result<Iso, Diagnostic> {
    let mut p = Parser::new(lex(text)?, dialect, iso_scope);
    let w = p.iso()?;
    p.expect_eof()?;
    Ok(w)
}

pub fn parse_type(text: &str) -> Result<Type, Diagnostic> {
    let mut p = Parser::new(lex(text)?, Dialect::Classical, &[]);
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_iso_type(text: &str) -> Result<IsoType, Diagnostic> {
    let mut p = Parser::new(lex(text)?, Dialect::Classical, &[]);
    let t = p.iso_ty()?;
    p.expect_eof()?;
    Ok(t)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    dialect: Dialect,
    scope: Vec<String>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn new(toks: Vec<(Tok, Pos)>, dialect: Dialect, scope: &[String]) -> Self {
        Parser {
            toks,
            i: 0,
            dialect,
            scope: scope.to_vec(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::new(self.pos(), E_SYNTAX, msg))
    }

    fn unexpected<T>(&self, what: &str) -> PResult<T> {
        self.err(format!("expected {what}, found {}", self.peek().describe()))
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    fn name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn program(&mut self) -> PResult<SourceProgram> {
        if self.eat_kw("dialect") {
            let d = if self.eat_kw("quantum") {
                Dialect::Quantum
            } else if self.eat_kw("classical") {
                Dialect::Classical
            } else {
                return self.unexpected("`quantum` or `classical`");
            };
            if d != self.dialect {
                return self.err(format!("dialect header says {d} but {} was requested", self.dialect));
            }
            self.expect_sym(";")?;
        }
        let mut decls: Vec<Decl> = Vec::new();
        while !matches!(self.peek(), Tok::Eof) {
            let pos = self.pos();
            let decl = if self.eat_kw("iso") {
                let name = self.name()?;
                let ty = if self.eat_sym(":") { Some(self.iso_ty()?) } else { None };
                self.expect_sym("=")?;
                let iso = self.iso()?;
                Decl {
                    name,
                    pos,
                    kind: DeclKind::Iso { iso, ty },
                }
            } else if self.eat_kw("val") {
                let name = self.name()?;
                let ty = if self.eat_sym(":") { Some(self.ty()?) } else { None };
                self.expect_sym("=")?;
                let term = self.term()?;
                Decl {
                    name,
                    pos,
                    kind: DeclKind::Val { term, ty },
                }
            } else if self.eat_kw("main") {
                let ty = if self.eat_sym(":") { Some(self.ty()?) } else { None };
                self.expect_sym("=")?;
                let term = self.term()?;
                Decl {
                    name: "main".into(),
                    pos,
                    kind: DeclKind::Main { term, ty },
                }
            } else {
                return self.unexpected("`iso`, `val` or `main`");
            };
            self.expect_sym(";")?;
            if decls.iter().any(|d| d.name == decl.name) {
                return Err(Diagnostic::new(
                    pos,
                    E_SYNTAX,
                    format!("duplicate declaration `{}`", decl.name),
                ));
            }
            if let DeclKind::Iso { .. } = decl.kind {
                self.scope.push(decl.name.clone());
            }
            decls.push(decl);
        }
        Ok(SourceProgram {
            dialect: self.dialect,
            decls,
        })
    }

    // ---- types ----

    fn ty(&mut self) -> PResult<Type> {
        let left = self.ty_prod()?;
        if self.eat_sym("+") {
            Ok(Type::sum(left, self.ty()?))
        } else {
            Ok(left)
        }
    }

    fn ty_prod(&mut self) -> PResult<Type> {
        let left = self.ty_atom()?;
        if self.eat_sym("*") {
            Ok(Type::tensor(left, self.ty_prod()?))
        } else {
            Ok(left)
        }
    }

    fn ty_atom(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Upper(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "I" => Type::Unit,
                    "Nat" => Type::Nat,
                    _ => Type::Var(s),
                })
            }
            Tok::Meta(s) => {
                self.bump();
                Ok(Type::Var(s))
            }
            Tok::Ident(s) if s == "nat" => {
                self.bump();
                Ok(Type::nat())
            }
            Tok::Ident(s) if s == "mu" => {
                self.bump();
                let x = match self.bump() {
                    Tok::Upper(x) if x != "I" && x != "Nat" => x,
                    _ => return self.err("expected a type variable after `mu`"),
                };
                self.expect_sym(".")?;
                let body = self.ty()?;
                Ok(Type::Mu(x, Box::new(body)))
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Sym("[") => {
                self.bump();
                let t = self.ty()?;
                self.expect_sym("]")?;
                Ok(Type::list(t))
            }
            _ => self.unexpected("a type"),
        }
    }

    fn iso_ty(&mut self) -> PResult<IsoType> {
        let left = self.iso_ty_atom()?;
        if self.eat_sym("->") {
            Ok(IsoType::arrow(left, self.iso_ty()?))
        } else {
            Ok(left)
        }
    }

    fn iso_ty_atom(&mut self) -> PResult<IsoType> {
        let save = self.i;
        let ground = (|| -> PResult<IsoType> {
            let a = self.ty()?;
            self.expect_sym("<->")?;
            let b = self.ty()?;
            Ok(IsoType::Ground(a, b))
        })();
        match ground {
            Ok(t) => Ok(t),
            Err(e) => {
                self.i = save;
                if self.eat_sym("(") {
                    let t = self.iso_ty()?;
                    self.expect_sym(")")?;
                    Ok(t)
                } else {
                    Err(e)
                }
            }
        }
    }

    // ---- isos ----

    fn iso(&mut self) -> PResult<Iso> {
        let left = self.iso_sum()?;
        if self.eat_sym("<<<") {
            Ok(Iso::Compose(Box::new(left), Box::new(self.iso()?)))
        } else {
            Ok(left)
        }
    }

    fn iso_sum(&mut self) -> PResult<Iso> {
        let left = self.iso_prod()?;
        if self.eat_sym("+") {
            Ok(Iso::Sum(Box::new(left), Box::new(self.iso_sum()?)))
        } else {
            Ok(left)
        }
    }

    fn iso_prod(&mut self) -> PResult<Iso> {
        let left = self.iso_app()?;
        if self.eat_sym("*") {
            Ok(Iso::Tensor(Box::new(left), Box::new(self.iso_prod()?)))
        } else {
            Ok(left)
        }
    }

    fn iso_app(&mut self) -> PResult<Iso> {
        let mut head = self.iso_atom()?;
        loop {
            if self.is_sym("(") {
                let save = self.i;
                match self.iso_atom() {
                    Ok(arg) => head = Iso::App(Box::new(head), Box::new(arg)),
                    Err(_) => {
                        self.i = save;
                        break;
                    }
                }
            } else if self.starts_iso_definitely() {
                let arg = self.iso_atom()?;
                head = Iso::App(Box::new(head), Box::new(arg));
            } else {
                break;
            }
        }
        Ok(head)
    }

    /// Tokens that can only begin an iso (parentheses are ambiguous).
    fn starts_iso_definitely(&self) -> bool {
        match self.peek() {
            Tok::Sym("{") | Tok::Sym("\\") => true,
            Tok::Ident(s) => matches!(s.as_str(), "inv" | "ctrl" | "fix" | "nfix" | "omega") || self.scope.contains(s),
            _ => false,
        }
    }

    fn binder(&mut self) -> PResult<String> {
        let x = self.name()?;
        self.expect_sym(".")?;
        Ok(x)
    }

    fn scoped<T>(&mut self, x: &str, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.scope.push(x.to_string());
        let r = f(self);
        self.scope.pop();
        r
    }

    fn iso_atom(&mut self) -> PResult<Iso> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Sym("{") => {
                self.bump();
                let mut cs = Vec::new();
                if self.eat_sym("}") {
                    return Ok(Iso::Clauses(cs));
                }
                self.eat_sym("|");
                loop {
                    let lhs = self.term()?;
                    self.expect_sym("<->")?;
                    let rhs = self.term()?;
                    cs.push((lhs, rhs));
                    if self.eat_sym("|") {
                        continue;
                    }
                    self.expect_sym("}")?;
                    break;
                }
                Ok(Iso::Clauses(cs))
            }
            Tok::Sym("(") => {
                self.bump();
                let w = self.iso()?;
                let w = if self.eat_sym(":") {
                    let t = self.iso_ty()?;
                    Iso::Ann(Box::new(w), t)
                } else {
                    w
                };
                self.expect_sym(")")?;
                Ok(w)
            }
            Tok::Sym("\\") => {
                self.bump();
                let x = self.binder()?;
                let body = self.scoped(&x, |p| p.iso())?;
                Ok(Iso::Lambda(x, Box::new(body)))
            }
            Tok::Ident(s) => match s.as_str() {
                "inv" => {
                    self.bump();
                    Ok(Iso::Inverse(Box::new(self.iso_atom()?)))
                }
                "ctrl" => {
                    self.bump();
                    Ok(Iso::Ctrl(Box::new(self.iso_atom()?)))
                }
                "omega" => {
                    self.bump();
                    Ok(Iso::Omega)
                }
                "fix" => {
                    self.bump();
                    let x = self.binder()?;
                    let body = self.scoped(&x, |p| p.iso())?;
                    Ok(Iso::Fix(x, Box::new(body)))
                }
                "nfix" => {
                    self.bump();
                    let n = match self.bump() {
                        Tok::Num(v, true) if v.re >= 0.0 && v.re <= u32::MAX as f64 => v.re as u32,
                        _ => return self.err("`nfix` expects a natural number bound"),
                    };
                    let x = self.binder()?;
                    let body = self.scoped(&x, |p| p.iso())?;
                    Ok(Iso::NFix(n, x, Box::new(body)))
                }
                _ if is_keyword(&s) => self.unexpected("an iso"),
                _ => {
                    if self.scope.contains(&s) {
                        self.bump();
                        Ok(Iso::Var(s))
                    } else {
                        Err(Diagnostic::new(
                            pos,
                            E_UNBOUND_ISO,
                            format!("unbound iso variable `{s}`"),
                        ))
                    }
                }
            },
            _ => self.unexpected("an iso"),
        }
    }

    // ---- terms ----

    fn term(&mut self) -> PResult<Term> {
        if self.eat_kw("let") {
            let ppos = self.pos();
            let pat = self.term_cons()?;
            if !pat.is_pattern() {
                return Err(Diagnostic::new(
                    ppos,
                    E_SYNTAX,
                    "let patterns are built from variables and tuples",
                ));
            }
            self.expect_sym("=")?;
            let bound = self.term()?;
            self.expect_kw("in")?;
            let body = self.term()?;
            return Ok(let_in(pat, bound, body));
        }
        self.term_sum()
    }

    fn starts_scalar(&self) -> bool {
        match self.peek() {
            Tok::Num(..) => true,
            Tok::Ident(s) => s == "sqrt2inv" || s == "sqrt2",
            Tok::Sym("(") => match self.peek_at(1) {
                Tok::Num(..) => true,
                Tok::Sym("-") => matches!(self.peek_at(2), Tok::Num(..)),
                _ => false,
            },
            _ => false,
        }
    }

    fn scalar(&mut self) -> PResult<C64> {
        if self.eat_sym("(") {
            let neg = self.eat_sym("-");
            let v = self.scalar()?;
            self.expect_sym(")")?;
            return Ok(if neg { -v } else { v });
        }
        let base = match self.bump() {
            Tok::Num(v, _) => v,
            Tok::Ident(s) if s == "sqrt2inv" => return Ok(real(std::f64::consts::FRAC_1_SQRT_2)),
            Tok::Ident(s) if s == "sqrt2" => return Ok(real(std::f64::consts::SQRT_2)),
            _ => {
                self.i -= 1;
                return self.unexpected("a scalar");
            }
        };
        if self.eat_sym("/") {
            match self.bump() {
                Tok::Num(d, _) if d.norm() > 0.0 => Ok(base / d),
                Tok::Ident(s) if s == "sqrt2" => Ok(base / std::f64::consts::SQRT_2),
                _ => {
                    self.i -= 1;
                    self.unexpected("a divisor")
                }
            }
        } else {
            Ok(base)
        }
    }

    /// `scalar *`, restoring the position when the prefix is not a scalar.
    fn try_scalar_times(&mut self) -> Option<C64> {
        if !self.starts_scalar() {
            return None;
        }
        let save = self.i;
        match self.scalar() {
            Ok(a) if self.eat_sym("*") => Some(a),
            _ => {
                self.i = save;
                None
            }
        }
    }

    fn term_sum(&mut self) -> PResult<Term> {
        let mut parts = Vec::new();
        let mut explicit = false;
        let mut sign = 1.0;
        if self.eat_sym("-") {
            sign = -1.0;
            explicit = true;
        }
        loop {
            let (alpha, t) = match self.try_scalar_times() {
                Some(a) => {
                    explicit = true;
                    (a, self.term_cons()?)
                }
                None => (real(1.0), self.term_cons()?),
            };
            parts.push((alpha * sign, t));
            if self.eat_sym("+") {
                sign = 1.0;
            } else if self.eat_sym("-") {
                sign = -1.0;
            } else {
                break;
            }
        }
        if parts.len() == 1 && !explicit {
            Ok(parts.pop().unwrap().1)
        } else {
            Ok(Term::Sum(parts))
        }
    }

    fn term_cons(&mut self) -> PResult<Term> {
        let head = self.term_app()?;
        if self.is_sym("::") {
            if self.dialect == Dialect::Quantum {
                return self.err("list syntax belongs to the classical dialect");
            }
            self.bump();
            let tail = self.term_cons()?;
            return Ok(cons(head, tail));
        }
        Ok(head)
    }

    fn starts_term_arg(&self) -> bool {
        let plain = match self.peek() {
            Tok::Sym("*") | Tok::Sym("(") | Tok::Sym("[") | Tok::Sym("|") | Tok::Hash(_) => true,
            Tok::Ident(s) => !is_keyword(s) || matches!(s.as_str(), "inl" | "inr" | "suc" | "fold" | "zero"),
            _ => false,
        };
        plain || self.starts_iso_definitely()
    }

    fn term_app(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "inl" => {
                self.bump();
                return Ok(inl(self.term_app()?));
            }
            Tok::Ident(s) if s == "inr" => {
                self.bump();
                return Ok(inr(self.term_app()?));
            }
            Tok::Ident(s) if s == "suc" => {
                self.bump();
                return Ok(suc(self.term_app()?));
            }
            Tok::Ident(s) if s == "fold" => {
                self.bump();
                return Ok(fold(self.term_app()?));
            }
            _ => {}
        }
        if self.starts_iso_definitely() {
            let w = self.iso_app()?;
            if !self.starts_term_arg() {
                return self.unexpected("an argument for the iso");
            }
            let arg = self.term_app()?;
            return Ok(app(w, arg));
        }
        if self.is_sym("(") {
            let save = self.i;
            if let Ok(w) = self.iso_app() {
                if self.starts_term_arg() {
                    let arg = self.term_app()?;
                    return Ok(app(w, arg));
                }
            }
            self.i = save;
        }
        self.term_atom()
    }

    fn term_atom(&mut self) -> PResult<Term> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Sym("*") => {
                self.bump();
                Ok(Term::Unit)
            }
            Tok::Hash(n) => {
                self.bump();
                Ok(match self.dialect {
                    Dialect::Quantum => qnumeral(n),
                    Dialect::Classical => numeral(n),
                })
            }
            Tok::Sym("(") => {
                self.bump();
                let mut items = vec![self.term()?];
                while self.eat_sym(",") {
                    items.push(self.term()?);
                }
                self.expect_sym(")")?;
                Ok(tuple(items))
            }
            Tok::Sym("[") => {
                if self.dialect == Dialect::Quantum {
                    return self.err("list syntax belongs to the classical dialect");
                }
                self.bump();
                let mut items = Vec::new();
                if !self.is_sym("]") {
                    items.push(self.term()?);
                    while self.eat_sym(",") {
                        items.push(self.term()?);
                    }
                }
                self.expect_sym("]")?;
                Ok(list_of(items))
            }
            Tok::Sym("|") => {
                self.bump();
                let t = self.term()?;
                self.expect_sym(">")?;
                Ok(t)
            }
            Tok::Ident(s) if s == "zero" => {
                self.bump();
                Ok(Term::Zero)
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(Term::Var(s))
            }
            _ => Err(Diagnostic::new(
                pos,
                E_SYNTAX,
                format!("expected a term, found {}", self.peek().describe()),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::E_LEX;

    fn q(s: &str) -> Term {
        parse_term(s, Dialect::Quantum, &[]).unwrap()
    }

    fn ciso(s: &str) -> Iso {
        parse_iso(s, Dialect::Classical, &[]).unwrap()
    }

    #[test]
    fn swap_clauses() {
        let w = parse_iso("{| inl * <-> inr * | inr * <-> inl * }", Dialect::Quantum, &[]).unwrap();
        assert_eq!(
            w,
            Iso::Clauses(vec![
                (inl(Term::Unit), inr(Term::Unit)),
                (inr(Term::Unit), inl(Term::Unit))
            ])
        );
    }

    #[test]
    fn fix_loop() {
        assert_eq!(ciso("fix f. f"), Iso::Fix("f".into(), Box::new(Iso::Var("f".into()))));
    }

    #[test]
    fn unnormalized_sum_parses() {
        let t = q("0.5*|inl *> + 0.5*|inr *>");
        assert_eq!(
            t,
            Term::Sum(vec![(real(0.5), inl(Term::Unit)), (real(0.5), inr(Term::Unit))])
        );
    }

    #[test]
    fn scalar_forms() {
        let t = q("1/sqrt2 * inl * - sqrt2inv * inr *");
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(t.approx_eq(&Term::Sum(vec![
            (real(h), inl(Term::Unit)),
            (real(-h), inr(Term::Unit))
        ])));
        let t = q("-(0.5+0.5i) * inl * + 0.5i * inr *");
        assert!(t.approx_eq(&Term::Sum(vec![
            (c(-0.5, -0.5), inl(Term::Unit)),
            (c(0.0, 0.5), inr(Term::Unit))
        ])));
    }

    #[test]
    fn unbound_iso_variable() {
        let e = parse_iso("\\f. g", Dialect::Classical, &[]).unwrap_err();
        assert_eq!(e.code, E_UNBOUND_ISO);
    }

    #[test]
    fn lexical_error_has_position() {
        let e = parse("iso f = { x <-> x };\n main = f $;", Dialect::Quantum).unwrap_err();
        assert_eq!(e.code, E_LEX);
        assert_eq!(e.pos, Pos::new(2, 11));
    }

    #[test]
    fn application_and_tuples() {
        let p = parse("iso f = { x <-> x };\nmain = f (inl *, inr *);", Dialect::Quantum).unwrap();
        let m = p.main().unwrap();
        match &m.kind {
            DeclKind::Main { term, .. } => {
                assert_eq!(*term, app(Iso::Var("f".into()), pair(inl(Term::Unit), inr(Term::Unit))));
            }
            _ => unreachable!(),
        }
        let closed = p.close_term(match &m.kind {
            DeclKind::Main { term, .. } => term,
            _ => unreachable!(),
        });
        assert!(closed.free_iso_vars().is_empty());
    }

    #[test]
    fn iso_application_chain() {
        let p = parse(
            "iso map = \\f. fix g. { [] <-> [] | h :: t <-> let h2 = f h in let t2 = g t in h2 :: t2 };\n\
             iso s = { x <-> fold (inr x) };\n\
             main = map s [#0, #1];",
            Dialect::Classical,
        )
        .unwrap();
        match &p.main().unwrap().kind {
            DeclKind::Main {
                term: Term::App(w, arg),
                ..
            } => {
                assert!(matches!(**w, Iso::App(..)));
                assert_eq!(**arg, list_of(vec![numeral(0), numeral(1)]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parenthesized_iso_in_term_position() {
        let t = parse_term("(inv f) x", Dialect::Quantum, &["f".to_string()]).unwrap();
        assert_eq!(t, app(Iso::Inverse(Box::new(Iso::Var("f".into()))), var("x")));
        let t = parse_term("(x, y)", Dialect::Quantum, &["f".to_string()]).unwrap();
        assert_eq!(t, pair(var("x"), var("y")));
    }

    #[test]
    fn types_and_iso_types() {
        assert_eq!(
            parse_type("I + I * I").unwrap(),
            Type::sum(Type::Unit, Type::tensor(Type::Unit, Type::Unit))
        );
        assert!(parse_type("[nat]").unwrap().alpha_eq(&Type::list(Type::nat())));
        let t = parse_iso_type("('a <-> 'b) -> (['a] <-> ['b])").unwrap();
        assert!(matches!(t, IsoType::Arrow(..)));
        let g = parse_iso_type("(I + I) * I <-> I").unwrap();
        assert!(matches!(g, IsoType::Ground(..)));
    }

    #[test]
    fn dialect_header_and_extension() {
        assert!(parse("dialect classical;", Dialect::Quantum).is_err());
        assert_eq!(
            parse_auto("dialect classical;", Dialect::Quantum).unwrap().dialect,
            Dialect::Classical
        );
        assert_eq!(dialect_for_path("a/b.qrev"), Some(Dialect::Quantum));
    }

    #[test]
    fn duplicate_declarations_rejected() {
        let e = parse("iso f = {};\niso f = {};", Dialect::Quantum).unwrap_err();
        assert_eq!(e.pos, Pos::new(2, 1));
    }

    #[test]
    fn let_and_lists() {
        let t = parse_term("let (x, y) = f z in h :: x", Dialect::Classical, &["f".to_string()]).unwrap();
        assert_eq!(
            t,
            let_in(
                pair(var("x"), var("y")),
                app(Iso::Var("f".into()), var("z")),
                cons(var("h"), var("x"))
            )
        );
    }
}
