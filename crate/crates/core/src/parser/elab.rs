//! Elaboration of untyped terms into formulas and expressions.

use super::term::{Pos, Term, TermKind};
use crate::ast::{ArithOp, Binder, CmpOp, Expr, Formula, StateDecl};

#[derive(Debug)]
pub struct ElabError {
    pub pos: Pos,
    pub message: String,
}

const RW_COMPONENTS: [&str; 2] = ["remove_wins_add", "remove_wins_removes"];

pub struct Elab<'a> {
    fields: &'a [String],
    /// Resolve unbound field names to fields of the invariant's state.
    bare_fields: bool,
    bound: Vec<String>,
}

type EResult<T> = Result<T, ElabError>;

fn err<T>(pos: Pos, message: String) -> EResult<T> {
    Err(ElabError { pos, message })
}

fn cmp_op(op: &str) -> Option<CmpOp> {
    Some(match op {
        "=" => CmpOp::Eq,
        "<>" => CmpOp::Ne,
        "<" => CmpOp::Lt,
        "<=" => CmpOp::Le,
        ">" => CmpOp::Gt,
        ">=" => CmpOp::Ge,
        _ => return None,
    })
}

/// Accepts both `f a b` and `f(a, b)`.
fn uncurry<'t>(name: &str, args: &'t [Term], arity: usize, pos: Pos) -> EResult<Vec<&'t Term>> {
    let items: Vec<&Term> = match args {
        [Term { kind: TermKind::Tuple(items), .. }] if arity >= 2 && items.len() == arity => items.iter().collect(),
        [Term { kind: TermKind::Unit, .. }] if arity == 0 => vec![],
        _ => args.iter().collect(),
    };
    if items.len() != arity {
        let plural = if arity == 1 { "" } else { "s" };
        return err(pos, format!("`{name}` expects {arity} argument{plural}, found {}", items.len()));
    }
    Ok(items)
}

impl<'a> Elab<'a> {
    pub fn plain(fields: &'a [String]) -> Elab<'a> {
        Elab { fields, bare_fields: false, bound: Vec::new() }
    }

    pub fn invariant(fields: &'a [String]) -> Elab<'a> {
        Elab { fields, bare_fields: true, bound: Vec::new() }
    }

    fn is_field(&self, name: &str) -> bool {
        self.fields.iter().any(|f| f == name) || RW_COMPONENTS.contains(&name)
    }

    pub fn formula(&mut self, t: &Term) -> EResult<Formula> {
        match &t.kind {
            TermKind::Ident(n) if n == "true" => Ok(Formula::True),
            TermKind::Ident(n) if n == "false" => Ok(Formula::False),
            TermKind::Not(inner) => Ok(Formula::not(self.formula(inner)?)),
            TermKind::Bin(op, a, b) => match *op {
                "/\\" | "&&" => Ok(Formula::and(self.formula(a)?, self.formula(b)?)),
                "\\/" | "||" => Ok(Formula::or(self.formula(a)?, self.formula(b)?)),
                "->" => Ok(Formula::implies(self.formula(a)?, self.formula(b)?)),
                "<->" => Ok(Formula::iff(self.formula(a)?, self.formula(b)?)),
                "==" => Ok(Formula::SetEq(self.expr(a)?, self.expr(b)?)),
                op => match cmp_op(op) {
                    Some(c) => Ok(Formula::Cmp(c, self.expr(a)?, self.expr(b)?)),
                    None => err(t.pos, format!("expected a formula, found an arithmetic term `{op}`")),
                },
            },
            TermKind::Quant(q, names, sort, body) => {
                let depth = self.bound.len();
                self.bound.extend(names.iter().cloned());
                let inner = self.formula(body);
                self.bound.truncate(depth);
                let mut f = inner?;
                for name in names.iter().rev() {
                    f = Formula::Quant(*q, Binder { name: name.clone(), sort: sort.clone() }, Box::new(f));
                }
                Ok(f)
            }
            TermKind::App(name, args) => match name.as_str() {
                "mem" | "in_set" | "equal" => {
                    let xs = uncurry(name, args, 2, t.pos)?;
                    let (a, b) = (self.expr(xs[0])?, self.expr(xs[1])?);
                    Ok(match name.as_str() {
                        "mem" => Formula::Mem(a, b),
                        "in_set" => Formula::InSet(a, b),
                        _ => Formula::SetEq(a, b),
                    })
                }
                "is_empty" => {
                    let xs = uncurry(name, args, 1, t.pos)?;
                    Ok(Formula::IsEmpty(self.expr(xs[0])?))
                }
                _ => Ok(Formula::Atom(self.expr(t)?)),
            },
            _ => Ok(Formula::Atom(self.expr(t)?)),
        }
    }

    pub fn expr(&mut self, t: &Term) -> EResult<Expr> {
        match &t.kind {
            TermKind::Int(v) => Ok(Expr::Int(*v)),
            TermKind::Ident(n) => {
                if self.bound.contains(n) {
                    return Ok(Expr::var(n.as_str()));
                }
                Ok(match n.as_str() {
                    "true" => Expr::Bool(true),
                    "false" => Expr::Bool(false),
                    "empty" => Expr::Empty,
                    _ if self.bare_fields && self.fields.contains(n) => Expr::state_field(StateDecl::SELF, n),
                    _ => Expr::var(n.as_str()),
                })
            }
            TermKind::Unit => err(t.pos, "`()` is not a value".into()),
            TermKind::Tuple(items) => {
                if items.len() != 2 {
                    return err(t.pos, format!("tuples have two components, found {}", items.len()));
                }
                Ok(Expr::pair(self.expr(&items[0])?, self.expr(&items[1])?))
            }
            TermKind::Field(base, f) => Ok(Expr::field(self.expr(base)?, f.as_str())),
            TermKind::Old(inner) => Ok(Expr::Old(Box::new(self.expr(inner)?))),
            TermKind::Bin(op @ ("+" | "-"), a, b) => {
                let op = if *op == "+" { ArithOp::Add } else { ArithOp::Sub };
                Ok(Expr::arith(op, self.expr(a)?, self.expr(b)?))
            }
            TermKind::Bin(..) | TermKind::Not(_) | TermKind::Quant(..) => {
                err(t.pos, "expected an expression, found a formula".into())
            }
            TermKind::App(name, args) => {
                let boxed = |e: Expr| Box::new(e);
                match name.as_str() {
                    "add" | "remove" | "add_element" | "remove_element" => {
                        let xs = uncurry(name, args, 2, t.pos)?;
                        let (x, s) = (boxed(self.expr(xs[0])?), boxed(self.expr(xs[1])?));
                        Ok(match name.as_str() {
                            "add" => Expr::Add(x, s),
                            "remove" => Expr::Remove(x, s),
                            "add_element" => Expr::RwAdd(x, s),
                            _ => Expr::RwRemove(x, s),
                        })
                    }
                    "fst" | "snd" => {
                        let xs = uncurry(name, args, 1, t.pos)?;
                        let p = boxed(self.expr(xs[0])?);
                        Ok(if name == "fst" { Expr::Fst(p) } else { Expr::Snd(p) })
                    }
                    "empty_set" => {
                        uncurry(name, args, 0, t.pos)?;
                        Ok(Expr::RwEmpty)
                    }
                    "mem" | "in_set" | "equal" | "is_empty" => {
                        err(t.pos, format!("`{name}` is a predicate and cannot be used as a value"))
                    }
                    _ if self.is_field(name) && !self.bound.contains(name) && args.len() == 1 => {
                        Ok(Expr::field(self.expr(&args[0])?, name.as_str()))
                    }
                    _ => err(t.pos, format!("unknown function `{name}`")),
                }
            }
        }
    }
}
