//! Strongest postconditions of operation bodies.
//!
//! State fields are treated as program variables: `state.f <- e` under `P`
//! yields `exists v. state.f = e[state.f := v] && P[state.f := v]`.

use std::collections::BTreeSet;

use rustc_hash::FxHashSet;

use crate::ast::{Binder, Expr, Formula, OpDecl, Quantifier, Spec, StateDecl, Stmt};
use crate::eval::{DomainBounds, Env, EvalError, Evaluator};
use crate::rewrite::map_exprs;
use crate::value::{StateValue, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct SpResult {
    pub formula: Formula,
    /// Existential variables introduced, in order.
    pub fresh_vars: Vec<String>,
}

struct Fresh<'a> {
    avoid: &'a BTreeSet<String>,
    next: usize,
    used: Vec<String>,
}

impl Fresh<'_> {
    fn var(&mut self) -> String {
        loop {
            let name = format!("v{}", self.next);
            self.next += 1;
            if !self.avoid.contains(&name) {
                self.used.push(name.clone());
                return name;
            }
        }
    }
}

/// Replaces reads of `state.field` by `with`.
fn replace_field_expr(e: &Expr, state: &str, field: &str, with: &Expr) -> Expr {
    if let Expr::Field(base, f) = e {
        if f == field && matches!(base.as_ref(), Expr::Var(s) if s == state) {
            return with.clone();
        }
    }
    let r = |x: &Expr| Box::new(replace_field_expr(x, state, field, with));
    match e {
        Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Empty | Expr::RwEmpty => e.clone(),
        Expr::Field(b, f) => Expr::Field(r(b), f.clone()),
        Expr::Old(x) => Expr::Old(r(x)),
        Expr::Pair(a, b) => Expr::Pair(r(a), r(b)),
        Expr::Fst(x) => Expr::Fst(r(x)),
        Expr::Snd(x) => Expr::Snd(r(x)),
        Expr::Arith(op, a, b) => Expr::Arith(*op, r(a), r(b)),
        Expr::Add(a, b) => Expr::Add(r(a), r(b)),
        Expr::Remove(a, b) => Expr::Remove(r(a), r(b)),
        Expr::RwAdd(a, b) => Expr::RwAdd(r(a), r(b)),
        Expr::RwRemove(a, b) => Expr::RwRemove(r(a), r(b)),
    }
}

fn replace_field(f: &Formula, state: &str, field: &str, with: &Expr) -> Formula {
    map_exprs(f, &mut |e| replace_field_expr(e, state, field, with))
}

fn transform(p: Formula, s: &Stmt, decl: &StateDecl, fresh: &mut Fresh) -> Formula {
    match s {
        Stmt::Skip => p,
        Stmt::Seq(a, b) => {
            let mid = transform(p, a, decl, fresh);
            transform(mid, b, decl, fresh)
        }
        Stmt::Assign { state, field, value } => {
            let v = fresh.var();
            let sort = decl.field(field).map(|f| f.sort.clone());
            let old_value = Expr::var(v.as_str());
            let eq = Formula::eq(Expr::state_field(state, field), replace_field_expr(value, state, field, &old_value));
            let body = Formula::and(eq, replace_field(&p, state, field, &old_value));
            Formula::Quant(Quantifier::Exists, Binder { name: v, sort }, Box::new(body))
        }
    }
}

/// `sp(p, s)`; fresh variables avoid every name in `avoid`.
pub fn sp(p: &Formula, s: &Stmt, decl: &StateDecl, avoid: &BTreeSet<String>) -> SpResult {
    let mut fresh = Fresh { avoid, next: 0, used: Vec::new() };
    let formula = transform(p.clone(), s, decl, &mut fresh);
    SpResult { formula, fresh_vars: fresh.used }
}

/// Strongest postcondition of an operation's body from its preconditions,
/// simplified.
pub fn sp_op(spec: &Spec, op: &OpDecl) -> SpResult {
    let r = sp(&op.precondition(), &op.body, &spec.state, &spec.identifiers());
    SpResult { formula: simplify(&r.formula), fresh_vars: r.fresh_vars }
}

/// Drops `true` conjuncts, re-associates conjunctions to the left, and
/// removes existentials whose variable is unused.
pub fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::And(..) => {
            let parts: Vec<Formula> = f
                .conjuncts()
                .into_iter()
                .map(simplify)
                .flat_map(|g| g.conjuncts().into_iter().cloned().collect::<Vec<_>>())
                .filter(|g| *g != Formula::True)
                .collect();
            Formula::conjoin(parts)
        }
        Formula::Quant(Quantifier::Exists, b, body) => {
            let body = simplify(body);
            if body.mentions_var(&b.name) {
                Formula::Quant(Quantifier::Exists, b.clone(), Box::new(body))
            } else {
                body
            }
        }
        Formula::Quant(q, b, body) => Formula::Quant(*q, b.clone(), Box::new(simplify(body))),
        Formula::Not(g) => Formula::not(simplify(g)),
        Formula::Or(a, b) => Formula::or(simplify(a), simplify(b)),
        Formula::Implies(a, b) => Formula::implies(simplify(a), simplify(b)),
        Formula::Iff(a, b) => Formula::iff(simplify(a), simplify(b)),
        other => other.clone(),
    }
}

/// A bounded-check failure of the strongest postcondition.
#[derive(Debug, Clone, PartialEq)]
pub enum SpViolation {
    /// A reachable post-state falsifies the postcondition.
    Unsound { args: Vec<Value>, pre: StateValue, post: StateValue },
    /// A state satisfying the postcondition is not reachable.
    TooWeak { args: Vec<Value>, post: StateValue },
}

/// Every state within bounds, fields varying in declaration order.
pub fn all_states(ev: &Evaluator) -> Result<Vec<StateValue>, EvalError> {
    let decl = ev.state_decl();
    let mut states = vec![Vec::new()];
    for field in &decl.fields {
        let dom = ev
            .domain(&field.sort)
            .map_err(|reason| EvalError::Ungroundable { binder: field.name.clone(), reason })?;
        states = states
            .into_iter()
            .flat_map(|prefix| {
                dom.iter().map(move |v| {
                    let mut s = prefix.clone();
                    s.push(v.clone());
                    s
                })
            })
            .collect();
    }
    Ok(states.into_iter().map(StateValue).collect())
}

/// Every binding of `op`'s parameters within bounds.
pub fn all_args(ev: &Evaluator, op: &OpDecl) -> Result<Vec<Vec<Value>>, EvalError> {
    let mut out = vec![Vec::new()];
    for p in &op.params {
        let dom = ev.domain(&p.sort).map_err(|reason| EvalError::Ungroundable { binder: p.name.clone(), reason })?;
        out = out
            .into_iter()
            .flat_map(|prefix| {
                dom.iter().map(move |v| {
                    let mut a = prefix.clone();
                    a.push(v.clone());
                    a
                })
            })
            .collect();
    }
    Ok(out)
}

fn bind(op: &OpDecl, args: &[Value]) -> Env {
    let mut env = Env::with(op.params.iter().map(|p| p.name.clone()).zip(args.iter().cloned()));
    env.push(op.state_param.clone(), Value::Int(0));
    env
}

/// Checks that `post` is sound and strongest for `op` within `bounds`:
/// it holds after every run from a state satisfying the preconditions, and
/// every state satisfying it is reached by such a run.
pub fn check_sp(spec: &Spec, op: &OpDecl, post: &Formula, bounds: DomainBounds) -> Result<Option<SpViolation>, EvalError> {
    let ev = Evaluator::new(&spec.state, bounds);
    let pre = op.precondition();
    let states = all_states(&ev)?;
    for args in all_args(&ev, op)? {
        let mut env = bind(op, &args);
        let mut reached: FxHashSet<StateValue> = FxHashSet::default();
        for s in &states {
            env.set(&op.state_param, Value::State(s.clone()));
            if !ev.eval_formula(&pre, &mut env)? {
                continue;
            }
            let after = ev.exec_stmt(&op.body, &op.state_param, s, &mut env)?;
            env.set(&op.state_param, Value::State(after.clone()));
            if !ev.eval_formula(post, &mut env)? {
                return Ok(Some(SpViolation::Unsound { args, pre: s.clone(), post: after }));
            }
            reached.insert(after);
        }
        for s in &states {
            if reached.contains(s) {
                continue;
            }
            env.set(&op.state_param, Value::State(s.clone()));
            if ev.eval_formula(post, &mut env)? {
                return Ok(Some(SpViolation::TooWeak { args, post: s.clone() }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{CmpOp, FieldDecl, Sort};

    fn decl() -> StateDecl {
        StateDecl {
            type_name: "state".into(),
            fields: vec![FieldDecl { name: "x".into(), sort: Sort::set(Sort::Int) }],
            invariant: Formula::True,
        }
    }

    #[test]
    fn skip_leaves_the_precondition() {
        let p = Formula::cmp(CmpOp::Gt, Expr::var("a"), Expr::Int(0));
        assert_eq!(sp(&p, &Stmt::Skip, &decl(), &BTreeSet::new()).formula, p);
    }

    #[test]
    fn sequential_assignments_nest() {
        let x = || Expr::state_field("state", "x");
        let body = Stmt::seq(
            Stmt::assign("state", "x", Expr::add(Expr::Int(1), x())),
            Stmt::assign("state", "x", Expr::add(Expr::Int(2), x())),
        );
        let r = sp(&Formula::True, &body, &decl(), &BTreeSet::new());
        assert_eq!(r.fresh_vars, ["v0", "v1"]);
        let want = Formula::exists(
            "v1",
            Sort::set(Sort::Int),
            Formula::and(
                Formula::eq(x(), Expr::add(Expr::Int(2), Expr::var("v1"))),
                Formula::exists(
                    "v0",
                    Sort::set(Sort::Int),
                    Formula::and(Formula::eq(Expr::var("v1"), Expr::add(Expr::Int(1), Expr::var("v0"))), Formula::True),
                ),
            ),
        );
        assert_eq!(r.formula, want);
    }

    #[test]
    fn fresh_names_skip_spec_identifiers() {
        let avoid: BTreeSet<String> = ["v0".to_string(), "v1".to_string()].into();
        let s = Stmt::assign("state", "x", Expr::Empty);
        assert_eq!(sp(&Formula::True, &s, &decl(), &avoid).fresh_vars, ["v2"]);
    }

    #[test]
    fn simplify_examples() {
        let body = Formula::and(Formula::eq(Expr::var("x"), Expr::add(Expr::Int(1), Expr::var("v0"))), Formula::True);
        let f = Formula::exists("v0", Sort::set(Sort::Int), body);
        let Formula::Quant(_, _, b) = simplify(&f) else { panic!() };
        assert!(matches!(*b, Formula::Cmp(..)));

        let g = Formula::exists("v0", Sort::Int, Formula::cmp(CmpOp::Gt, Expr::var("course"), Expr::Int(0)));
        assert_eq!(simplify(&g), Formula::cmp(CmpOp::Gt, Expr::var("course"), Expr::Int(0)));
    }
}
