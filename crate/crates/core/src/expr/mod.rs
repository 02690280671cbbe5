//! Scalar expression language: lexer, parser, canonical printer, and
//! evaluation in plain `f64` or forward-mode dual numbers.
//!
//! The grammar is documented in [`parser`]. Variables match
//! `[a-z][a-z0-9_]*`; `pi` and `e` are named constants; the callable
//! functions are `sin cos tan exp ln sqrt abs tanh`.

mod ast;
mod dual;
mod eval;
pub mod lexer;
pub mod parser;

pub use ast::{BinaryOp, Expr, Func};
pub use dual::{Dual, Gradient};
pub use eval::{Env, SlotEnv};
pub use parser::parse;

use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {position}: {message}")]
pub struct ParseError {
    pub message: String,
    pub position: usize,
}

impl ParseError {
    pub(crate) fn new(message: impl Into<String>, position: usize) -> ParseError {
        ParseError {
            message: message.into(),
            position,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogNonPositive,
    SqrtNegative,
    DivisionByZero,
    NegativeBasePower,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::LogNonPositive => "logarithm of a non-positive value",
            DomainKind::SqrtNegative => "square root of a negative value",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::NegativeBasePower => "negative base raised to a non-integer or variable power",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable '{0}'")]
    Unbound(String),
    #[error("{kind} in '{expr}'")]
    Domain { kind: DomainKind, expr: String },
}
