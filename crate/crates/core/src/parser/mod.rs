//! Parsers for `.cise` specifications and `.tok` token systems.
//!
//! Specifications are lexed, parsed into an untyped term tree, elaborated
//! into [`Formula`]/[`Expr`]/[`Stmt`], and finally sort-checked. Every error
//! carries a `file:line:column` position.

mod elab;
mod lexer;
mod spec;
mod term;
mod tokens;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{Formula, Spec};
use crate::typecheck::DiagnosticKind;

pub use tokens::{parse_tokens, parse_tokens_named};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub file: String,
    /// 1-based.
    pub line: usize,
    /// 1-based.
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Lexical,
    Syntax,
    MissingState,
    MultipleState,
    MissingStateParam,
    Unsupported,
    Sort(DiagnosticKind),
    DuplicateToken,
    UndeclaredToken,
    UnknownOperation,
    UnknownArgument,
    ConflictBeforeDeclaration,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ErrorKind,
    pub message: String,
}

/// One or more errors from a single input file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseErrors(pub Vec<ParseError>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl From<ParseError> for ParseErrors {
    fn from(e: ParseError) -> ParseErrors {
        ParseErrors(vec![e])
    }
}

impl ParseErrors {
    pub fn kinds(&self) -> Vec<ErrorKind> {
        self.0.iter().map(|e| e.kind).collect()
    }
}

/// Parses and sort-checks a specification.
pub fn parse_spec(src: &str) -> Result<Spec, ParseErrors> {
    parse_spec_named(src, "<input>")
}

/// As [`parse_spec`], naming `file` in error positions.
pub fn parse_spec_named(src: &str, file: &str) -> Result<Spec, ParseErrors> {
    spec::parse(src, file)
}

/// Parses a standalone formula. Binder sorts are left as written.
pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let toks = lexer::lex(src, "<formula>")?;
    let mut p = term::Parser::new(toks, "<formula>");
    let t = p.term()?;
    p.expect_eof()?;
    elab::Elab::plain(&[]).formula(&t).map_err(|e| p.error_at(e.pos, ErrorKind::Syntax, e.message))
}
