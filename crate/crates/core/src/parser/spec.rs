//! Top-level declarations of a `.cise` file.

use std::collections::HashMap;

use super::elab::Elab;
use super::lexer::{lex, Tok};
use super::term::{PResult, Parser, Pos, Term, TermKind};
use super::{ErrorKind, ParseError, ParseErrors};
use crate::ast::{Expr, FieldDecl, Formula, OpDecl, Param, Sort, Spec, StateDecl, StateEq, Stmt};
use crate::typecheck::infer_spec;

struct SpecParser {
    p: Parser,
    /// Position of each clause, keyed by its diagnostic label.
    clauses: HashMap<String, Pos>,
    fields: Vec<String>,
    state: Option<StateDecl>,
    ops: Vec<OpDecl>,
    state_eq: Option<StateEq>,
}

pub fn parse(src: &str, file: &str) -> Result<Spec, ParseErrors> {
    let toks = lex(src, file)?;
    let tagged: Vec<(String, Pos)> = toks
        .windows(3)
        .filter_map(|w| match (&w[0].tok, &w[1].tok, &w[2].tok) {
            (Tok::Ident(kw), Tok::Ident(name), Tok::Attr(a)) if kw == "type" && a == "state" => {
                Some((name.clone(), Pos { line: w[1].line, column: w[1].column, len: w[1].len }))
            }
            _ => None,
        })
        .collect();
    let mut p = Parser::new(toks, file);
    match tagged.as_slice() {
        [] => {
            let at = Pos { line: 1, column: 1, len: 0 };
            return Err(p.error_at(at, ErrorKind::MissingState, "no [@state] type declared".into()).into());
        }
        [_] => {}
        [_, (_, second), ..] => {
            return Err(p
                .error_at(*second, ErrorKind::MultipleState, "more than one [@state] type declared".into())
                .into());
        }
    }
    p.state_name = Some(tagged[0].0.clone());

    let mut sp = SpecParser {
        p,
        clauses: HashMap::new(),
        fields: Vec::new(),
        state: None,
        ops: Vec::new(),
        state_eq: None,
    };
    sp.items()?;
    let mut spec = Spec { state: sp.state.take().expect("state declared"), ops: sp.ops, state_eq: sp.state_eq };
    let diags = infer_spec(&mut spec);
    if diags.is_empty() {
        return Ok(spec);
    }
    let origin = Pos { line: 1, column: 1, len: 0 };
    Err(ParseErrors(
        diags
            .into_iter()
            .map(|d| {
                let at = sp.clauses.get(&d.clause).copied().unwrap_or(origin);
                sp.p.error_at(at, ErrorKind::Sort(d.kind), d.to_string())
            })
            .collect(),
    ))
}

impl SpecParser {
    fn error(&self, at: Pos, kind: ErrorKind, message: String) -> ParseError {
        self.p.error_at(at, kind, message)
    }

    fn elab_formula(&self, t: &Term, invariant: bool) -> PResult<Formula> {
        let mut e = if invariant { Elab::invariant(&self.fields) } else { Elab::plain(&self.fields) };
        e.formula(t).map_err(|e| self.error(e.pos, ErrorKind::Syntax, e.message))
    }

    fn elab_expr(&self, t: &Term) -> PResult<Expr> {
        Elab::plain(&self.fields).expr(t).map_err(|e| self.error(e.pos, ErrorKind::Syntax, e.message))
    }

    fn items(&mut self) -> PResult<()> {
        loop {
            let at = self.p.here();
            if matches!(self.p.peek(), Tok::Eof) {
                return Ok(());
            }
            if self.p.eat_kw("type") {
                self.type_decl(at)?;
            } else if self.p.eat_kw("predicate") {
                self.predicate(at)?;
            } else if self.p.eat_kw("let") {
                self.p.eat_kw("ghost");
                if self.p.eat_kw("predicate") {
                    self.predicate(at)?;
                } else {
                    self.op()?;
                }
            } else if self.p.at_op_header() {
                self.op()?;
            } else {
                return Err(self.p.unexpected("`type`, `let` or `predicate`"));
            }
        }
    }

    fn braced_term(&mut self) -> PResult<(Term, Pos)> {
        let at = self.p.expect_sym("{")?;
        let t = self.p.term()?;
        self.p.expect_sym("}")?;
        Ok((t, at))
    }

    fn type_decl(&mut self, at: Pos) -> PResult<()> {
        let (name, name_pos) = self.p.ident()?;
        let tagged = matches!(self.p.peek(), Tok::Attr(a) if a == "state");
        if !tagged {
            return Err(self.error(
                name_pos,
                ErrorKind::Unsupported,
                format!("type `{name}` is not tagged [@state]; only the state type may be declared"),
            ));
        }
        self.p.bump();
        self.p.expect_sym("=")?;
        self.p.expect_sym("{")?;
        let mut fields = Vec::new();
        while !self.p.at_sym("}") {
            self.p.eat_kw("mutable");
            let (fname, fpos) = self.p.ident()?;
            self.p.expect_sym(":")?;
            let sort = self.p.sort()?;
            self.clauses.entry(format!("field {fname}")).or_insert(fpos);
            fields.push(FieldDecl { name: fname, sort });
            if !self.p.eat_sym(";") && !self.p.at_sym("}") {
                return Err(self.p.unexpected("`;` or `}`"));
            }
        }
        self.p.expect_sym("}")?;
        self.fields = fields.iter().map(|f| f.name.clone()).collect();
        let invariant = if self.p.eat_kw("invariant") {
            let (t, pos) = self.braced_term()?;
            self.clauses.insert("invariant".into(), pos);
            self.elab_formula(&t, true)?
        } else {
            Formula::True
        };
        if self.state.is_some() {
            return Err(self.error(at, ErrorKind::MultipleState, "more than one [@state] type declared".into()));
        }
        self.state = Some(StateDecl { type_name: name, fields, invariant });
        Ok(())
    }

    /// `(a b : sort)` groups; `()` is accepted and ignored.
    fn param_groups(&mut self) -> PResult<Vec<(String, Sort, Pos)>> {
        let mut out = Vec::new();
        while self.p.at_sym("(") {
            self.p.bump();
            if self.p.eat_sym(")") {
                continue;
            }
            let mut names = vec![self.p.ident()?];
            while !self.p.at_sym(":") {
                names.push(self.p.ident()?);
            }
            self.p.expect_sym(":")?;
            let sort = self.p.sort()?;
            self.p.expect_sym(")")?;
            out.extend(names.into_iter().map(|(n, p)| (n, sort.clone(), p)));
        }
        Ok(out)
    }

    fn predicate(&mut self, at: Pos) -> PResult<()> {
        let (name, _) = self.p.ident()?;
        if !matches!(self.p.peek(), Tok::Attr(a) if a == "state_eq") {
            return Err(self.error(
                at,
                ErrorKind::Unsupported,
                format!("predicate `{name}` is not tagged [@state_eq]; only the state equality may be declared"),
            ));
        }
        self.p.bump();
        let params = self.param_groups()?;
        let states: Vec<&String> = params.iter().filter(|(_, s, _)| *s == Sort::State).map(|(n, ..)| n).collect();
        if params.len() != 2 || states.len() != 2 {
            return Err(self.error(
                at,
                ErrorKind::Syntax,
                format!("predicate `{name}` must take exactly two state parameters"),
            ));
        }
        let (left, right) = (states[0].clone(), states[1].clone());
        self.p.expect_sym("=")?;
        let body_pos = self.p.here();
        let t = self.p.term()?;
        let body = self.elab_formula(&t, false)?;
        if self.state_eq.is_some() {
            return Err(self.error(at, ErrorKind::Unsupported, "more than one [@state_eq] predicate".into()));
        }
        self.clauses.insert(format!("state_eq predicate {name}"), body_pos);
        self.state_eq = Some(StateEq { name, left, right, body });
        Ok(())
    }

    fn op(&mut self) -> PResult<()> {
        let (name, name_pos) = self.p.ident()?;
        self.clauses.entry(format!("operation {name}")).or_insert(name_pos);
        let groups = self.param_groups()?;
        if self.p.eat_sym(":") && !(self.p.eat_sym("(") && self.p.eat_sym(")")) {
            self.p.ident()?;
        }
        let mut state_params = groups.iter().filter(|(_, s, _)| *s == Sort::State);
        let state_param = match (state_params.next(), state_params.next()) {
            (Some((n, ..)), None) => n.clone(),
            (None, _) => {
                return Err(self.error(
                    name_pos,
                    ErrorKind::MissingStateParam,
                    format!("operation `{name}` has no state parameter"),
                ))
            }
            (Some(_), Some((_, _, p))) => {
                return Err(self.error(
                    *p,
                    ErrorKind::Unsupported,
                    format!("operation `{name}` has more than one state parameter"),
                ))
            }
        };
        let mut params = Vec::new();
        for (pname, sort, ppos) in groups {
            if sort != Sort::State {
                self.clauses.entry(format!("parameter {pname} of {name}")).or_insert(ppos);
                params.push(Param { name: pname, sort });
            }
        }
        let (mut requires, mut ensures) = (Vec::new(), Vec::new());
        loop {
            let is_requires = self.p.eat_kw("requires");
            if !is_requires && !self.p.eat_kw("ensures") {
                break;
            }
            let (t, pos) = self.braced_term()?;
            let f = self.elab_formula(&t, false)?;
            let list = if is_requires { &mut requires } else { &mut ensures };
            list.push(f);
            let kind = if is_requires { "requires" } else { "ensures" };
            self.clauses.insert(format!("{kind} #{} of {name}", list.len()), pos);
        }
        self.p.expect_sym("=")?;
        self.clauses.insert(format!("body of {name}"), self.p.here());
        let body = self.stmt()?;
        self.ops.push(OpDecl { name, params, state_param, requires, ensures, body });
        Ok(())
    }

    fn at_stmt_end(&self) -> bool {
        matches!(self.p.peek(), Tok::Eof)
            || ["end", "let", "predicate", "type"].iter().any(|k| self.p.at_kw(k))
            || self.p.at_op_header()
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let first = self.simple_stmt()?;
        if self.p.eat_sym(";") && !self.at_stmt_end() {
            let rest = self.stmt()?;
            return Ok(Stmt::seq(first, rest));
        }
        Ok(first)
    }

    fn simple_stmt(&mut self) -> PResult<Stmt> {
        let at = self.p.here();
        if self.p.eat_kw("begin") {
            if self.p.eat_kw("end") {
                return Ok(Stmt::Skip);
            }
            let s = self.stmt()?;
            self.p.expect_kw("end")?;
            return Ok(s);
        }
        if self.p.eat_kw("skip") {
            return Ok(Stmt::Skip);
        }
        if self.p.at_sym("(") && matches!(self.p.peek_at(1), Tok::Sym(")")) {
            self.p.bump();
            self.p.bump();
            return Ok(Stmt::Skip);
        }
        let target = self.p.app_term()?;
        if self.p.eat_sym("<-") {
            let rhs = self.p.term()?;
            let value = self.elab_expr(&rhs)?;
            return match &target.kind {
                TermKind::Field(base, field) => match &base.kind {
                    TermKind::Ident(state) => Ok(Stmt::assign(state, field, value)),
                    _ => Err(self.error(at, ErrorKind::Syntax, "assignment target must be `state.field`".into())),
                },
                _ => Err(self.error(at, ErrorKind::Syntax, "assignment target must be `state.field`".into())),
            };
        }
        // `add_element e state.f` updates a remove-wins field in place.
        if let TermKind::App(name, _) = &target.kind {
            if name == "add_element" || name == "remove_element" {
                let e = self.elab_expr(&target)?;
                let (Expr::RwAdd(_, s) | Expr::RwRemove(_, s)) = &e else { unreachable!() };
                if let Expr::Field(base, field) = s.as_ref() {
                    if let Expr::Var(state) = base.as_ref() {
                        return Ok(Stmt::assign(state, field, e.clone()));
                    }
                }
                return Err(self.error(at, ErrorKind::Syntax, format!("`{name}` must update a `state.field`")));
            }
        }
        Err(self.error(at, ErrorKind::Syntax, "expected a statement".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_spec() {
        let spec = parse(
            "type t [@state] = { mutable xs : fset int } invariant { forall i. mem i xs -> i >= 0 }\n\
             let f (x : int) (s : t) requires { x > 0 } = s.xs <- add x s.xs",
            "m.cise",
        )
        .unwrap();
        assert_eq!(spec.ops.len(), 1);
        assert_eq!(spec.ops[0].state_param, "s");
        let Formula::Quant(_, b, _) = &spec.state.invariant else { panic!() };
        assert_eq!(b.sort, Some(Sort::Int));
    }

    #[test]
    fn statement_forms() {
        let spec = parse(
            "type t [@state] = { a : fset int; b : remove_wins_set int }\n\
             f (x : int) (s : t) = begin s.a <- add(x, s.a); add_element x s.b; end\n\
             g (s : t) = ()",
            "m.cise",
        )
        .unwrap();
        assert_eq!(spec.ops[0].body.assignments().len(), 2);
        assert_eq!(spec.ops[1].body, Stmt::Skip);
    }

    #[test]
    fn missing_state_param_is_reported_at_the_operation() {
        let e = parse("type t [@state] = { a : int }\nlet f (x : int) = ()", "m.cise").unwrap_err();
        assert_eq!(e.kinds(), vec![ErrorKind::MissingStateParam]);
        assert_eq!(e.0[0].span.line, 2);
        assert_eq!(e.to_string(), "m.cise:2:5: operation `f` has no state parameter");
    }
}
