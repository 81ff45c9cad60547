//! Positioned diagnostics and their codes.

use std::fmt;

pub const E_LEX: &str = "E001";
pub const E_SYNTAX: &str = "E002";
pub const E_UNBOUND_ISO: &str = "E003";
pub const E_UNBOUND_VAR: &str = "E101";
pub const E_DUP_VAR: &str = "E102";
pub const E_UNUSED_VAR: &str = "E103";
pub const E_NORM: &str = "E104";
pub const E_NON_ORTHOGONAL: &str = "E105";
pub const E_DIALECT: &str = "E106";
pub const E_ARROW_APP: &str = "E107";
pub const E_TYPE_MISMATCH: &str = "E108";
pub const E_OD: &str = "E109";
pub const E_OD_EXT: &str = "E110";
pub const E_OVERLAP: &str = "E111";
pub const E_CLAUSE_VARS: &str = "E112";
pub const E_AMBIGUOUS: &str = "E113";
pub const E_MALFORMED: &str = "E114";
pub const E_NON_UNITARY: &str = "E115";
pub const E_CUTOFF: &str = "E201";
pub const E_EVAL: &str = "E202";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Pos {
    pub fn new(line: usize, col: usize) -> Self {
        Pos { line, col }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn new(pos: Pos, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            pos,
            code,
            message: message.into(),
        }
    }

    pub fn at_start(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(Pos::new(1, 1), code, message)
    }

    pub fn render(&self, file: &str) -> String {
        format!(
            "{}:{}:{}: {}: {}",
            file, self.pos.line, self.pos.col, self.code, self.message
        )
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.pos.line, self.pos.col, self.code, self.message)
    }
}

impl std::error::Error for Diagnostic {}
