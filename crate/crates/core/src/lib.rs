//! Static analysis of replicated-application specifications.
//!
//! A specification declares a state record, an invariant, and operations with
//! contracts. From it we generate the safety, commutativity/stability and
//! self-stability proof obligations, discharge them by bounded exhaustive
//! checking, and optionally emit them as SMT-LIB scripts.

pub mod analysis;
pub mod ast;
pub mod checker;
pub mod crdt;
pub mod eval;
pub mod parser;
pub mod pretty;
pub mod report;
pub mod rewrite;
pub mod smt;
pub mod sp;
pub mod token;
pub mod typecheck;
pub mod value;

pub use ast::{Expr, Formula, OpDecl, Sort, Spec, StateDecl, Stmt};
pub use eval::{DomainBounds, Env, EvalError};
pub use parser::{parse_formula, parse_spec, parse_tokens, ParseError, ParseErrors, SourceSpan};
pub use token::TokenSystem;
pub use value::{Elem, FiniteSet, Value};
