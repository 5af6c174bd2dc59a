//! Untyped term trees and the token-level parser shared by every clause.

use super::lexer::{Tok, Token};
use super::{ErrorKind, ParseError, SourceSpan};
use crate::ast::{Quantifier, Sort};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub kind: TermKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TermKind {
    Int(i64),
    Ident(String),
    /// `()`
    Unit,
    /// Parenthesised comma list with at least two items.
    Tuple(Vec<Term>),
    Field(Box<Term>, String),
    Old(Box<Term>),
    /// Juxtaposition `f a b`; a call `f(a, b)` is `f` applied to one tuple.
    App(String, Vec<Term>),
    Bin(&'static str, Box<Term>, Box<Term>),
    Not(Box<Term>),
    Quant(Quantifier, Vec<String>, Option<Sort>, Box<Term>),
}

const RESERVED: [&str; 17] = [
    "type", "invariant", "let", "ghost", "requires", "ensures", "predicate", "forall", "exists", "not", "old",
    "mutable", "begin", "end", "in", "val", "skip",
];

const CMP_OPS: [&str; 7] = ["=", "<>", "<", "<=", ">", ">=", "=="];

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    file: String,
    /// Name of the `[@state]` type, which may appear as a sort.
    pub state_name: Option<String>,
}

pub type PResult<T> = Result<T, ParseError>;

impl Parser {
    pub fn new(toks: Vec<Token>, file: &str) -> Parser {
        Parser { toks, pos: 0, file: file.to_string(), state_name: None }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn here(&self) -> Pos {
        let t = &self.toks[self.pos];
        Pos { line: t.line, column: t.column, len: t.len }
    }

    pub fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn at_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    pub fn eat_kw(&mut self, k: &str) -> bool {
        if self.at_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> PResult<Pos> {
        if self.at_sym(s) {
            let p = self.here();
            self.bump();
            Ok(p)
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub fn expect_kw(&mut self, k: &str) -> PResult<Pos> {
        if self.at_kw(k) {
            let p = self.here();
            self.bump();
            Ok(p)
        } else {
            Err(self.unexpected(&format!("`{k}`")))
        }
    }

    pub fn expect_eof(&self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => Err(self.unexpected("end of input")),
        }
    }

    /// A non-reserved identifier.
    pub fn ident(&mut self) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(name) if !RESERVED.contains(&name.as_str()) => {
                let p = self.here();
                self.bump();
                Ok((name, p))
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    pub fn span(&self, p: Pos) -> SourceSpan {
        SourceSpan { file: self.file.clone(), line: p.line, column: p.column, length: p.len }
    }

    pub fn error_at(&self, p: Pos, kind: ErrorKind, message: String) -> ParseError {
        ParseError { span: self.span(p), kind, message }
    }

    pub fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Attr(a) => format!("`[@{a}]`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        };
        self.error_at(self.here(), ErrorKind::Syntax, format!("expected {wanted}, found {found}"))
    }

    pub fn sort(&mut self) -> PResult<Sort> {
        if self.eat_kw("fset") {
            return Ok(Sort::set(self.sort_atom()?));
        }
        if self.eat_kw("remove_wins_set") {
            return Ok(Sort::rw_set(self.sort_atom()?));
        }
        self.sort_atom()
    }

    fn sort_atom(&mut self) -> PResult<Sort> {
        if self.eat_sym("(") {
            let first = self.sort()?;
            let s = if self.eat_sym(",") { Sort::pair(first, self.sort()?) } else { first };
            self.expect_sym(")")?;
            return Ok(s);
        }
        if self.at_kw("fset") || self.at_kw("remove_wins_set") {
            return self.sort();
        }
        let (name, p) = self.ident().map_err(|_| self.unexpected("a sort"))?;
        match name.as_str() {
            "int" => Ok(Sort::Int),
            "bool" => Ok(Sort::Bool),
            _ if self.state_name.as_deref() == Some(name.as_str()) => Ok(Sort::State),
            _ => Err(self.error_at(p, ErrorKind::Syntax, format!("unknown sort `{name}`"))),
        }
    }

    /// Whether the upcoming tokens read `name (a b : ...`, the header of an
    /// operation written without `let`.
    pub fn at_op_header(&self) -> bool {
        if !matches!(self.peek(), Tok::Ident(n) if !RESERVED.contains(&n.as_str())) {
            return false;
        }
        if !matches!(self.peek_at(1), Tok::Sym("(")) {
            return false;
        }
        let mut k = 2;
        while matches!(self.peek_at(k), Tok::Ident(_)) {
            k += 1;
        }
        k > 2 && matches!(self.peek_at(k), Tok::Sym(":"))
    }

    pub fn term(&mut self) -> PResult<Term> {
        let lhs = self.or_term()?;
        for op in ["->", "<->"] {
            if self.at_sym(op) {
                let pos = self.here();
                self.bump();
                let rhs = self.term()?;
                return Ok(Term { kind: TermKind::Bin(op, Box::new(lhs), Box::new(rhs)), pos });
            }
        }
        Ok(lhs)
    }

    fn left_assoc(&mut self, ops: &[&'static str], next: fn(&mut Parser) -> PResult<Term>) -> PResult<Term> {
        let mut lhs = next(self)?;
        'outer: loop {
            for op in ops {
                if self.at_sym(op) {
                    let pos = self.here();
                    self.bump();
                    let rhs = next(self)?;
                    lhs = Term { kind: TermKind::Bin(op, Box::new(lhs), Box::new(rhs)), pos };
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn or_term(&mut self) -> PResult<Term> {
        self.left_assoc(&["\\/", "||"], Parser::and_term)
    }

    fn and_term(&mut self) -> PResult<Term> {
        self.left_assoc(&["/\\", "&&"], Parser::not_term)
    }

    fn not_term(&mut self) -> PResult<Term> {
        let pos = self.here();
        if self.eat_kw("not") {
            let inner = self.not_term()?;
            return Ok(Term { kind: TermKind::Not(Box::new(inner)), pos });
        }
        for (kw, q) in [("forall", Quantifier::Forall), ("exists", Quantifier::Exists)] {
            if self.eat_kw(kw) {
                let mut names = vec![self.ident()?.0];
                while self.eat_sym(",") {
                    names.push(self.ident()?.0);
                }
                let sort = if self.eat_sym(":") { Some(self.sort()?) } else { None };
                self.expect_sym(".")?;
                let body = self.term()?;
                return Ok(Term { kind: TermKind::Quant(q, names, sort, Box::new(body)), pos });
            }
        }
        self.cmp_term()
    }

    fn cmp_term(&mut self) -> PResult<Term> {
        let lhs = self.arith_term()?;
        for op in CMP_OPS {
            if self.at_sym(op) {
                let pos = self.here();
                self.bump();
                let rhs = self.arith_term()?;
                return Ok(Term { kind: TermKind::Bin(op, Box::new(lhs), Box::new(rhs)), pos });
            }
        }
        Ok(lhs)
    }

    fn arith_term(&mut self) -> PResult<Term> {
        self.left_assoc(&["+", "-"], Parser::app_term)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::Sym("(") => true,
            Tok::Ident(n) => !RESERVED.contains(&n.as_str()) && !self.at_op_header(),
            _ => false,
        }
    }

    /// Application: `f a b`, `old e`, or a postfix term.
    pub fn app_term(&mut self) -> PResult<Term> {
        let pos = self.here();
        if self.eat_kw("old") {
            let inner = self.postfix_term()?;
            return Ok(Term { kind: TermKind::Old(Box::new(inner)), pos });
        }
        let head = self.postfix_term()?;
        let mut args = Vec::new();
        while self.starts_atom() || self.at_kw("old") {
            if self.at_kw("old") {
                let p = self.here();
                self.bump();
                let inner = self.postfix_term()?;
                args.push(Term { kind: TermKind::Old(Box::new(inner)), pos: p });
            } else {
                args.push(self.postfix_term()?);
            }
        }
        if args.is_empty() {
            return Ok(head);
        }
        match head.kind {
            TermKind::Ident(name) => Ok(Term { kind: TermKind::App(name, args), pos }),
            _ => Err(self.error_at(pos, ErrorKind::Syntax, "only named functions can be applied".into())),
        }
    }

    fn postfix_term(&mut self) -> PResult<Term> {
        let mut t = self.atom()?;
        while self.at_sym(".") && matches!(self.peek_at(1), Tok::Ident(_)) {
            self.bump();
            let (field, _) = self.ident()?;
            let pos = t.pos;
            t = Term { kind: TermKind::Field(Box::new(t), field), pos };
        }
        Ok(t)
    }

    fn atom(&mut self) -> PResult<Term> {
        let pos = self.here();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Term { kind: TermKind::Int(v), pos })
            }
            Tok::Sym("-") if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.bump();
                let Tok::Int(v) = self.bump().tok else { unreachable!() };
                Ok(Term { kind: TermKind::Int(-v), pos })
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat_sym(")") {
                    return Ok(Term { kind: TermKind::Unit, pos });
                }
                let mut items = vec![self.term()?];
                while self.eat_sym(",") {
                    items.push(self.term()?);
                }
                self.expect_sym(")")?;
                if items.len() == 1 {
                    Ok(items.pop().unwrap())
                } else {
                    Ok(Term { kind: TermKind::Tuple(items), pos })
                }
            }
            Tok::Ident(_) => {
                let (name, _) = self.ident()?;
                Ok(Term { kind: TermKind::Ident(name), pos })
            }
            _ => Err(self.unexpected("a term")),
        }
    }
}
