//! Surface syntax: lexing, parsing and monomorphic type checking.

mod lexer;
mod parser;
mod typecheck;

use crate::lang::{Loc, Pattern, Process, Value};
use crate::types::TypeDecl;

pub use lexer::{tokenize, LexError, Tok};
pub use typecheck::{typecheck, TypeError, TypedProgram};

/// A source file: type declarations followed by the main process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub type_decls: Vec<TypeDecl>,
    pub main: Process,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{loc}: syntax error: expected {}, found {found}", expected_list(.expected))]
pub struct SyntaxError {
    pub loc: Loc,
    pub expected: Vec<String>,
    pub found: String,
}

fn expected_list(expected: &[String]) -> String {
    if expected.is_empty() {
        "valid input".to_string()
    } else {
        expected.join(" or ")
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Accept compiler-private channel names `x@j`.
    pub allow_private: bool,
}

pub fn parse(text: &str) -> Result<Program, SyntaxError> {
    parse_with(text, ParseOptions::default())
}

pub fn parse_with(text: &str, opts: ParseOptions) -> Result<Program, SyntaxError> {
    parser::Parser::new(text, opts.allow_private)?.program()
}

/// Parses a standalone pattern such as `Cons(0, _)`.
pub fn parse_pattern(text: &str) -> Result<Pattern, SyntaxError> {
    let mut p = parser::Parser::new(text, false)?;
    let pat = p.pattern()?;
    p.end()?;
    Ok(pat)
}

/// Parses a closed value such as `Cons(1, Nil)`; capitalized names are constructors.
pub fn parse_value(text: &str) -> Result<Value, SyntaxError> {
    let mut p = parser::Parser::new(text, false)?.upper_ctors();
    let loc = Loc::new(1, 1);
    let e = p.expr()?;
    p.end()?;
    e.to_value().ok_or_else(|| SyntaxError { loc, expected: vec!["closed value".into()], found: "a variable".into() })
}
