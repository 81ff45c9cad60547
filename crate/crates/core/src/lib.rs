//! Type checking, evaluation and matrix / partial-injection semantics for a
//! quantum-control reversible language and a classical reversible language
//! with recursion.

pub mod ast;
pub mod ceval;
pub mod cli;
pub mod denote;
pub mod diag;
pub mod ortho;
pub mod parser;
pub mod qeval;
pub mod selftest;
pub mod stdlib;
pub mod typeck;
