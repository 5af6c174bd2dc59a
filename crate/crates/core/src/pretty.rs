//! Concrete syntax printing. Output of [`print_spec`] parses back to an equal
//! [`Spec`].

use std::fmt::{self, Display, Write};

use crate::ast::{ArithOp, Expr, Formula, Sort, Spec, StateDecl, Stmt};

/// Printing options.
#[derive(Debug, Clone, Copy)]
pub struct Style {
    /// Print binder sorts (`forall i: int. ...`). Without them the parser
    /// re-infers sorts from usage.
    pub annotate_binders: bool,
    /// Print reads of the invariant's implicit state as bare field names.
    pub bare_self_fields: bool,
}

impl Style {
    pub const FULL: Style = Style { annotate_binders: true, bare_self_fields: false };
    pub const COMPACT: Style = Style { annotate_binders: false, bare_self_fields: false };
}

impl Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => f.write_str("int"),
            Sort::Bool => f.write_str("bool"),
            Sort::Pair(a, b) => write!(f, "({a}, {b})"),
            Sort::Set(e) => write!(f, "fset {}", SortAtom(e)),
            Sort::RwSet(e) => write!(f, "remove_wins_set {}", SortAtom(e)),
            Sort::State => f.write_str("state"),
        }
    }
}

struct SortAtom<'a>(&'a Sort);

impl Display for SortAtom<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Sort::Set(_) | Sort::RwSet(_) => write!(f, "({})", self.0),
            other => write!(f, "{other}"),
        }
    }
}

// Formula precedences; expressions sit above all of them.
const P_QUANT: u8 = 0;
const P_IMPL: u8 = 1;
const P_OR: u8 = 2;
const P_AND: u8 = 3;
const P_NOT: u8 = 4;
const P_ATOM: u8 = 5;
const P_ARITH: u8 = 6;
const P_APP: u8 = 7;

fn formula_prec(f: &Formula) -> u8 {
    match f {
        Formula::Quant(..) => P_QUANT,
        Formula::Implies(..) | Formula::Iff(..) => P_IMPL,
        Formula::Or(..) => P_OR,
        Formula::And(..) => P_AND,
        Formula::Not(..) => P_NOT,
        _ => P_ATOM,
    }
}

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Arith(..) => P_ARITH,
        _ => P_APP,
    }
}

pub struct Printer {
    pub style: Style,
}

impl Printer {
    pub fn new(style: Style) -> Printer {
        Printer { style }
    }

    pub fn expr(&self, e: &Expr) -> String {
        let mut s = String::new();
        self.write_expr(&mut s, e);
        s
    }

    pub fn formula(&self, f: &Formula) -> String {
        let mut s = String::new();
        self.write_formula(&mut s, f, P_QUANT);
        s
    }

    pub fn stmt(&self, st: &Stmt) -> String {
        let mut s = String::new();
        self.write_stmt(&mut s, st, false);
        s
    }

    fn write_expr(&self, out: &mut String, e: &Expr) {
        match e {
            Expr::Int(v) if *v < 0 => write!(out, "({v})").unwrap(),
            Expr::Int(v) => write!(out, "{v}").unwrap(),
            Expr::Bool(b) => write!(out, "{b}").unwrap(),
            Expr::Var(v) => out.push_str(v),
            Expr::Field(base, field) => {
                match &**base {
                    Expr::Var(v) if self.style.bare_self_fields && v == StateDecl::SELF => {
                        out.push_str(field);
                        return;
                    }
                    Expr::Var(_) | Expr::Field(..) => self.write_expr(out, base),
                    _ => self.write_paren_expr(out, base),
                }
                write!(out, ".{field}").unwrap();
            }
            Expr::Old(inner) => {
                out.push_str("old ");
                match &**inner {
                    Expr::Var(_) | Expr::Field(..) => self.write_expr(out, inner),
                    _ => self.write_paren_expr(out, inner),
                }
            }
            Expr::Pair(a, b) => {
                out.push('(');
                self.write_expr(out, a);
                out.push_str(", ");
                self.write_expr(out, b);
                out.push(')');
            }
            Expr::Fst(p) => self.call(out, "fst", &[p]),
            Expr::Snd(p) => self.call(out, "snd", &[p]),
            Expr::Arith(op, a, b) => {
                self.write_operand(out, a, P_ARITH);
                out.push_str(match op {
                    ArithOp::Add => " + ",
                    ArithOp::Sub => " - ",
                });
                self.write_operand(out, b, P_ARITH + 1);
            }
            Expr::Empty => out.push_str("empty"),
            Expr::Add(x, s) => self.call(out, "add", &[x, s]),
            Expr::Remove(x, s) => self.call(out, "remove", &[x, s]),
            Expr::RwEmpty => out.push_str("empty_set()"),
            Expr::RwAdd(x, s) => self.call(out, "add_element", &[x, s]),
            Expr::RwRemove(x, s) => self.call(out, "remove_element", &[x, s]),
        }
    }

    fn write_operand(&self, out: &mut String, e: &Expr, min_prec: u8) {
        if expr_prec(e) < min_prec {
            self.write_paren_expr(out, e);
        } else {
            self.write_expr(out, e);
        }
    }

    fn write_paren_expr(&self, out: &mut String, e: &Expr) {
        out.push('(');
        self.write_expr(out, e);
        out.push(')');
    }

    fn call(&self, out: &mut String, name: &str, args: &[&Expr]) {
        out.push_str(name);
        out.push('(');
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            self.write_expr(out, a);
        }
        out.push(')');
    }

    fn write_formula(&self, out: &mut String, f: &Formula, ctx: u8) {
        let prec = formula_prec(f);
        if prec < ctx {
            out.push('(');
            self.write_formula(out, f, P_QUANT);
            out.push(')');
            return;
        }
        match f {
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
            Formula::Cmp(op, a, b) => {
                self.write_operand(out, a, P_ARITH);
                write!(out, " {} ", op.symbol()).unwrap();
                self.write_operand(out, b, P_ARITH);
            }
            Formula::SetEq(a, b) => {
                self.write_operand(out, a, P_ARITH);
                out.push_str(" == ");
                self.write_operand(out, b, P_ARITH);
            }
            Formula::Mem(x, s) => self.call(out, "mem", &[x, s]),
            Formula::InSet(x, s) => self.call(out, "in_set", &[x, s]),
            Formula::IsEmpty(s) => self.call(out, "is_empty", &[s]),
            Formula::Atom(e) => self.write_operand(out, e, P_ARITH),
            Formula::Not(g) => {
                out.push_str("not ");
                if formula_prec(g) >= P_ATOM && !matches!(**g, Formula::Cmp(..) | Formula::SetEq(..)) {
                    self.write_formula(out, g, P_ATOM);
                } else {
                    out.push('(');
                    self.write_formula(out, g, P_QUANT);
                    out.push(')');
                }
            }
            Formula::And(a, b) => self.binary(out, a, " && ", b, P_AND, false),
            Formula::Or(a, b) => self.binary(out, a, " || ", b, P_OR, false),
            Formula::Implies(a, b) => self.binary(out, a, " -> ", b, P_IMPL, true),
            Formula::Iff(a, b) => self.binary(out, a, " <-> ", b, P_IMPL, true),
            Formula::Quant(q, binder, body) => {
                write!(out, "{q} {}", binder.name).unwrap();
                if self.style.annotate_binders {
                    if let Some(sort) = &binder.sort {
                        write!(out, ": {sort}").unwrap();
                    }
                }
                out.push_str(". ");
                self.write_formula(out, body, P_QUANT);
            }
        }
    }

    fn binary(&self, out: &mut String, a: &Formula, op: &str, b: &Formula, prec: u8, right_assoc: bool) {
        // Quantifiers extend as far right as possible, so any quantifier
        // operand is bracketed.
        let (lp, rp) = if right_assoc { (prec + 1, prec) } else { (prec, prec + 1) };
        self.write_formula(out, a, lp.max(P_IMPL));
        out.push_str(op);
        self.write_formula(out, b, rp.max(P_IMPL));
    }

    fn write_stmt(&self, out: &mut String, s: &Stmt, nested: bool) {
        match s {
            Stmt::Skip => out.push_str("()"),
            Stmt::Assign { state, field, value } => {
                write!(out, "{state}.{field} <- ").unwrap();
                self.write_expr(out, value);
            }
            Stmt::Seq(a, b) => {
                if nested {
                    out.push_str("begin ");
                }
                self.write_stmt(out, a, true);
                out.push_str("; ");
                self.write_stmt(out, b, false);
                if nested {
                    out.push_str(" end");
                }
            }
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&Printer::new(Style::FULL).expr(self))
    }
}

impl Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&Printer::new(Style::FULL).formula(self))
    }
}

impl Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&Printer::new(Style::FULL).stmt(self))
    }
}

fn sort_in_spec(sort: &Sort, spec: &Spec) -> String {
    match sort {
        Sort::State => spec.state.type_name.clone(),
        other => other.to_string(),
    }
}

/// Prints a whole spec in concrete syntax.
pub fn print_spec(spec: &Spec) -> String {
    let p = Printer::new(Style::FULL);
    let inv = Printer::new(Style { bare_self_fields: true, ..Style::FULL });
    let mut out = String::new();
    writeln!(out, "type {} [@state] = {{", spec.state.type_name).unwrap();
    for field in &spec.state.fields {
        writeln!(out, "  mutable {} : {};", field.name, sort_in_spec(&field.sort, spec)).unwrap();
    }
    writeln!(out, "}} invariant {{ {} }}", inv.formula(&spec.state.invariant)).unwrap();
    for op in &spec.ops {
        out.push('\n');
        write!(out, "let ghost {}", op.name).unwrap();
        for param in &op.params {
            write!(out, " ({} : {})", param.name, sort_in_spec(&param.sort, spec)).unwrap();
        }
        writeln!(out, " ({} : {}) : unit", op.state_param, spec.state.type_name).unwrap();
        for r in &op.requires {
            writeln!(out, "  requires {{ {} }}", p.formula(r)).unwrap();
        }
        for e in &op.ensures {
            writeln!(out, "  ensures {{ {} }}", p.formula(e)).unwrap();
        }
        writeln!(out, "= {}", p.stmt(&op.body)).unwrap();
    }
    if let Some(eq) = &spec.state_eq {
        out.push('\n');
        writeln!(
            out,
            "predicate {} [@state_eq] ({} {} : {}) =\n  {}",
            eq.name,
            eq.left,
            eq.right,
            spec.state.type_name,
            p.formula(&eq.body)
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{CmpOp, Quantifier};

    #[test]
    fn sp_output_reads_like_the_listing() {
        let f = Formula::Quant(
            Quantifier::Exists,
            crate::ast::Binder::new("v0", Sort::set(Sort::Int)),
            Box::new(Formula::and(
                Formula::eq(Expr::state_field("state", "courses"), Expr::add(Expr::var("course"), Expr::var("v0"))),
                Formula::cmp(CmpOp::Gt, Expr::var("course"), Expr::Int(0)),
            )),
        );
        assert_eq!(
            Printer::new(Style::COMPACT).formula(&f),
            "exists v0. state.courses = add(course, v0) && course > 0"
        );
        assert_eq!(f.to_string(), "exists v0: fset int. state.courses = add(course, v0) && course > 0");
    }

    #[test]
    fn nested_connectives_are_bracketed_by_associativity() {
        let a = Formula::Atom(Expr::var("a"));
        let b = Formula::Atom(Expr::var("b"));
        let c = Formula::Atom(Expr::var("c"));
        let right = Formula::and(a.clone(), Formula::and(b.clone(), c.clone()));
        assert_eq!(right.to_string(), "a && (b && c)");
        let left = Formula::and(Formula::and(a.clone(), b.clone()), c.clone());
        assert_eq!(left.to_string(), "a && b && c");
        let imp = Formula::implies(Formula::implies(a.clone(), b.clone()), c.clone());
        assert_eq!(imp.to_string(), "(a -> b) -> c");
        let q = Formula::and(Formula::forall("i", Sort::Int, a), b);
        assert_eq!(q.to_string(), "(forall i: int. a) && b");
    }

    #[test]
    fn sorts_print_in_source_syntax() {
        assert_eq!(Sort::set(Sort::pair(Sort::Int, Sort::Int)).to_string(), "fset (int, int)");
        assert_eq!(Sort::rw_set(Sort::Int).to_string(), "remove_wins_set int");
    }
}
