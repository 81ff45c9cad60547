use crate::ast::{c, C64};
use crate::diag::{Diagnostic, Pos, E_LEX};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Upper(String),
    Meta(String),
    Num(C64, bool),
    Hash(usize),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Upper(s) | Tok::Meta(s) => format!("`{s}`"),
            Tok::Num(v, _) => format!("number {}", v.re),
            Tok::Hash(n) => format!("`#{n}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

const SYMBOLS: &[&str] = &[
    "<->", "<<<", "->", "::", "{", "}", "(", ")", "[", "]", "|", "*", "+", "-", ",", ";", ":", "=", ".", "\\", ">", "/",
];

fn is_ident_char(ch: char) -> bool {
    ch.is_ascii_alphanumeric() || ch == '_' || ch == '\''
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize, chars: &[char]| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1, &chars);
            continue;
        }
        if ch == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            continue;
        }
        let pos = Pos::new(line, col);
        if ch.is_ascii_digit() {
            let (value, len) =
                lex_number(&chars, i).ok_or_else(|| Diagnostic::new(pos, E_LEX, "malformed number literal"))?;
            advance(&mut i, &mut line, &mut col, len, &chars);
            out.push((value, pos));
            continue;
        }
        if ch == '#' {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j == i + 1 {
                return Err(Diagnostic::new(pos, E_LEX, "`#` must be followed by a natural number"));
            }
            let text: String = chars[i + 1..j].iter().collect();
            let n = text
                .parse::<usize>()
                .map_err(|_| Diagnostic::new(pos, E_LEX, "numeral out of range"))?;
            let len = j - i;
            advance(&mut i, &mut line, &mut col, len, &chars);
            out.push((Tok::Hash(n), pos));
            continue;
        }
        if ch == '\'' {
            let mut j = i + 1;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            if j == i + 1 {
                return Err(Diagnostic::new(pos, E_LEX, "stray `'`"));
            }
            let text: String = chars[i..j].iter().collect();
            let len = j - i;
            advance(&mut i, &mut line, &mut col, len, &chars);
            out.push((Tok::Meta(text), pos));
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == '_' {
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            let len = j - i;
            advance(&mut i, &mut line, &mut col, len, &chars);
            if ch.is_ascii_uppercase() {
                out.push((Tok::Upper(text), pos));
            } else {
                out.push((Tok::Ident(text), pos));
            }
            continue;
        }
        let mut matched = None;
        for sym in SYMBOLS {
            let n = sym.chars().count();
            if i + n <= chars.len() && chars[i..i + n].iter().copied().eq(sym.chars()) {
                matched = Some(*sym);
                break;
            }
        }
        match matched {
            Some(sym) => {
                advance(&mut i, &mut line, &mut col, sym.chars().count(), &chars);
                out.push((Tok::Sym(sym), pos));
            }
            None => {
                return Err(Diagnostic::new(pos, E_LEX, format!("unexpected character `{ch}`")));
            }
        }
    }
    out.push((Tok::Eof, Pos::new(line, col)));
    Ok(out)
}

/// Reads a decimal literal at `start`: `12`, `0.5`, `1e-3`, `0.5i`, or a
/// complex literal `a+bi` / `a-bi` written without spaces.
fn lex_number(chars: &[char], start: usize) -> Option<(Tok, usize)> {
    let (re, j) = read_decimal(chars, start)?;
    let integral = !chars[start..j].iter().any(|c| *c == '.' || *c == 'e' || *c == 'E');
    if chars.get(j) == Some(&'i') && !chars.get(j + 1).copied().is_some_and(is_ident_char) {
        return Some((Tok::Num(c(0.0, re), false), j + 1 - start));
    }
    if let Some(&sign) = chars.get(j) {
        if (sign == '+' || sign == '-') && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit()) {
            if let Some((im, k)) = read_decimal(chars, j + 1) {
                if chars.get(k) == Some(&'i') && !chars.get(k + 1).copied().is_some_and(is_ident_char) {
                    let im = if sign == '-' { -im } else { im };
                    return Some((Tok::Num(c(re, im), false), k + 1 - start));
                }
            }
        }
    }
    if chars
        .get(j)
        .copied()
        .is_some_and(|ch| ch.is_ascii_alphabetic() && ch != 'i')
    {
        return None;
    }
    Some((Tok::Num(c(re, 0.0), integral), j - start))
}

fn read_decimal(chars: &[char], start: usize) -> Option<(f64, usize)> {
    let mut j = start;
    while j < chars.len() && chars[j].is_ascii_digit() {
        j += 1;
    }
    if j == start {
        return None;
    }
    if chars.get(j) == Some(&'.') && chars.get(j + 1).is_some_and(|d| d.is_ascii_digit()) {
        j += 1;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
    }
    if matches!(chars.get(j), Some('e') | Some('E')) {
        let mut k = j + 1;
        if matches!(chars.get(k), Some('+') | Some('-')) {
            k += 1;
        }
        if chars.get(k).is_some_and(|d| d.is_ascii_digit()) {
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            j = k;
        }
    }
    let text: String = chars[start..j].iter().collect();
    text.parse::<f64>().ok().map(|v| (v, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn symbols_and_comments() {
        assert_eq!(
            toks("a <-> b -- trailing\n<<<"),
            vec![
                Tok::Ident("a".into()),
                Tok::Sym("<->"),
                Tok::Ident("b".into()),
                Tok::Sym("<<<"),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(toks("0.5")[0], Tok::Num(c(0.5, 0.0), false));
        assert_eq!(toks("3")[0], Tok::Num(c(3.0, 0.0), true));
        assert_eq!(toks("2i")[0], Tok::Num(c(0.0, 2.0), false));
        assert_eq!(toks("1.5-0.5i")[0], Tok::Num(c(1.5, -0.5), false));
        assert_eq!(toks("1e-3")[0], Tok::Num(c(1e-3, 0.0), false));
        assert_eq!(toks("#12")[0], Tok::Hash(12));
    }

    #[test]
    fn spaced_minus_is_a_symbol() {
        assert_eq!(toks("1 - 2")[1], Tok::Sym("-"));
    }

    #[test]
    fn positions() {
        let t = lex("a\n  b").unwrap();
        assert_eq!(t[1].1, Pos::new(2, 3));
    }

    #[test]
    fn bad_character() {
        let e = lex("a @ b").unwrap_err();
        assert_eq!(e.code, E_LEX);
        assert_eq!(e.pos, Pos::new(1, 3));
    }
}
