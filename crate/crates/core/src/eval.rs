//! Bounded evaluation of expressions and formulas, and concrete execution of
//! statements.
//!
//! Quantifiers range over finite domains fixed by [`DomainBounds`]: integers
//! over the inclusive interval, pairs over the product, sets over all subsets
//! of the bounded element domain.

use std::borrow::Cow;
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{ArithOp, CmpOp, Expr, Formula, Quantifier, Sort, StateDecl, Stmt};
use crate::value::{Elem, FiniteSet, RwSetValue, StateValue, Value};

/// Default cap on the size of the integer interval.
pub const DEFAULT_CAP: usize = 4;

/// Largest element domain whose subsets may be enumerated (2^20 subsets).
pub const MAX_SUBSET_ELEMS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DomainBounds {
    pub int_min: i64,
    pub int_max: i64,
    #[serde(skip)]
    pub cap: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("empty interval {min}..{max}")]
    Empty { min: i64, max: i64 },
    #[error("interval {min}..{max} has {size} values, more than the cap of {cap}")]
    TooLarge { min: i64, max: i64, size: u64, cap: usize },
    #[error("malformed bounds `{0}` (expected MIN..MAX)")]
    Malformed(String),
}

impl DomainBounds {
    pub fn new(int_min: i64, int_max: i64) -> Result<DomainBounds, BoundsError> {
        DomainBounds::with_cap(int_min, int_max, DEFAULT_CAP)
    }

    pub fn with_cap(int_min: i64, int_max: i64, cap: usize) -> Result<DomainBounds, BoundsError> {
        if int_min > int_max {
            return Err(BoundsError::Empty { min: int_min, max: int_max });
        }
        let size = (int_max as i128 - int_min as i128 + 1) as u64;
        if size > cap as u64 {
            return Err(BoundsError::TooLarge { min: int_min, max: int_max, size, cap });
        }
        Ok(DomainBounds { int_min, int_max, cap })
    }

    /// Parses `MIN..MAX`.
    pub fn parse(text: &str) -> Result<DomainBounds, BoundsError> {
        let (lo, hi) = text
            .split_once("..")
            .ok_or_else(|| BoundsError::Malformed(text.to_string()))?;
        let lo = lo.trim().parse().map_err(|_| BoundsError::Malformed(text.to_string()))?;
        let hi = hi.trim().parse().map_err(|_| BoundsError::Malformed(text.to_string()))?;
        DomainBounds::new(lo, hi)
    }

    pub fn size(&self) -> usize {
        (self.int_max - self.int_min + 1) as usize
    }

    pub fn contains(&self, v: i64) -> bool {
        (self.int_min..=self.int_max).contains(&v)
    }

    pub fn ints(&self) -> impl Iterator<Item = i64> {
        self.int_min..=self.int_max
    }
}

impl Default for DomainBounds {
    fn default() -> Self {
        DomainBounds { int_min: 0, int_max: 3, cap: DEFAULT_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("sort error: {0}")]
    Sort(String),
    #[error("`old` must be resolved before evaluation")]
    UnresolvedOld,
    #[error("binder `{0}` has no sort")]
    UntypedBinder(String),
    #[error("cannot ground quantifier over `{binder}`: {reason}")]
    Ungroundable { binder: String, reason: String },
    #[error("integer overflow")]
    Overflow,
}

/// Variable bindings: a stack, innermost binding last.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    bindings: Vec<(String, Value)>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn with<I, S>(bindings: I) -> Env
    where
        I: IntoIterator<Item = (S, Value)>,
        S: Into<String>,
    {
        Env { bindings: bindings.into_iter().map(|(n, v)| (n.into(), v)).collect() }
    }

    pub fn push(&mut self, name: impl Into<String>, value: Value) {
        self.bindings.push((name.into(), value));
    }

    pub fn pop(&mut self) -> Option<(String, Value)> {
        self.bindings.pop()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Value> {
        self.bindings.iter_mut().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Rebinds the innermost `name`, or pushes a new binding.
    pub fn set(&mut self, name: &str, value: Value) {
        match self.get_mut(name) {
            Some(slot) => *slot = value,
            None => self.push(name, value),
        }
    }

    pub fn get_at(&self, i: usize) -> &Value {
        &self.bindings[i].1
    }

    /// Rebinds the `i`th binding from the bottom.
    pub fn set_at(&mut self, i: usize, value: Value) {
        self.bindings[i].1 = value;
    }

    /// Takes the value of the `i`th binding from the bottom, leaving `false`.
    pub fn take_at(&mut self, i: usize) -> Value {
        std::mem::replace(&mut self.bindings[i].1, Value::Bool(false))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.bindings.truncate(len);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.bindings.iter().map(|(n, v)| (n.as_str(), v))
    }

    fn last_mut(&mut self) -> &mut Value {
        &mut self.bindings.last_mut().expect("binding pushed").1
    }
}

/// Evaluation context: the state layout and the domain bounds.
pub struct Evaluator<'a> {
    state: &'a StateDecl,
    bounds: DomainBounds,
    domains: RefCell<HashMap<Sort, Rc<Vec<Value>>>>,
}

type EvalResult<T> = Result<T, EvalError>;

impl<'a> Evaluator<'a> {
    pub fn new(state: &'a StateDecl, bounds: DomainBounds) -> Evaluator<'a> {
        Evaluator { state, bounds, domains: RefCell::new(HashMap::new()) }
    }

    pub fn bounds(&self) -> DomainBounds {
        self.bounds
    }

    pub fn state_decl(&self) -> &'a StateDecl {
        self.state
    }

    pub fn eval_expr(&self, e: &Expr, env: &Env) -> EvalResult<Value> {
        Ok(self.eval_cow(e, env)?.into_owned())
    }

    /// Evaluates `e`, borrowing from `env` where possible.
    fn eval_cow<'e>(&self, e: &Expr, env: &'e Env) -> EvalResult<Cow<'e, Value>> {
        match e {
            Expr::Var(name) => env.get(name).map(Cow::Borrowed).ok_or_else(|| EvalError::Unbound(name.clone())),
            Expr::Field(base, field) => match self.eval_cow(base, env)? {
                Cow::Borrowed(v @ Value::State(_)) => self.project(v, field).map(Cow::Borrowed),
                other => self.field_of(&other, field).map(Cow::Owned),
            },
            other => self.eval_owned(other, env).map(Cow::Owned),
        }
    }

    fn project<'v>(&self, v: &'v Value, field: &str) -> EvalResult<&'v Value> {
        match v {
            Value::State(s) => {
                let idx = self.state.field_index(field).ok_or_else(|| EvalError::UnknownField(field.to_string()))?;
                s.0.get(idx).ok_or_else(|| EvalError::Sort(format!("state value lacks field `{field}`")))
            }
            _ => Err(EvalError::Sort(format!("field `{field}` read from a non-record value"))),
        }
    }

    fn field_of(&self, base: &Value, field: &str) -> EvalResult<Value> {
        match (base, field) {
            (Value::RwSet(s), "remove_wins_add") => Ok(Value::Set(s.adds.clone())),
            (Value::RwSet(s), "remove_wins_removes") => Ok(Value::Set(s.removes.clone())),
            (v, _) => self.project(v, field).cloned(),
        }
    }

    fn eval_owned(&self, e: &Expr, env: &Env) -> EvalResult<Value> {
        Ok(match e {
            Expr::Int(v) => Value::Int(*v),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Var(_) => unreachable!("handled by eval_cow"),
            Expr::Field(..) => unreachable!("handled by eval_cow"),
            Expr::Old(_) => return Err(EvalError::UnresolvedOld),
            Expr::Pair(a, b) => Value::pair(self.eval_expr(a, env)?, self.eval_expr(b, env)?),
            Expr::Fst(p) | Expr::Snd(p) => match self.eval_expr(p, env)? {
                Value::Pair(pair) => {
                    let (a, b) = *pair;
                    if matches!(e, Expr::Fst(_)) {
                        a
                    } else {
                        b
                    }
                }
                other => return Err(EvalError::Sort(format!("projection of non-pair {other}"))),
            },
            Expr::Arith(op, a, b) => {
                let a = self.int(a, env)?;
                let b = self.int(b, env)?;
                let r = match op {
                    ArithOp::Add => a.checked_add(b),
                    ArithOp::Sub => a.checked_sub(b),
                };
                Value::Int(r.ok_or(EvalError::Overflow)?)
            }
            Expr::Empty => Value::Set(FiniteSet::new()),
            Expr::Add(x, s) | Expr::Remove(x, s) => {
                let elem = self.elem(x, env)?;
                let set = self.eval_cow(s, env)?;
                let Value::Set(set) = &*set else {
                    return Err(EvalError::Sort("add/remove on a non-set".into()));
                };
                if matches!(e, Expr::Add(..)) {
                    Value::Set(set.with(elem))
                } else {
                    Value::Set(set.without(&elem))
                }
            }
            Expr::RwEmpty => Value::RwSet(RwSetValue::default()),
            Expr::RwAdd(x, s) | Expr::RwRemove(x, s) => {
                let elem = self.elem(x, env)?;
                let Value::RwSet(mut rw) = self.eval_expr(s, env)? else {
                    return Err(EvalError::Sort("add_element/remove_element on a non remove-wins set".into()));
                };
                if matches!(e, Expr::RwAdd(..)) {
                    rw.adds.insert(elem);
                } else {
                    rw.removes.insert(elem);
                }
                Value::RwSet(rw)
            }
        })
    }

    fn int(&self, e: &Expr, env: &Env) -> EvalResult<i64> {
        match &*self.eval_cow(e, env)? {
            Value::Int(v) => Ok(*v),
            other => Err(EvalError::Sort(format!("expected an integer, found {other}"))),
        }
    }

    fn elem(&self, e: &Expr, env: &Env) -> EvalResult<Elem> {
        if let Expr::Pair(a, b) = e {
            return Ok(Elem::Pair(self.int(a, env)?, self.int(b, env)?));
        }
        let v = self.eval_cow(e, env)?;
        v.to_elem().ok_or_else(|| EvalError::Sort(format!("{v} is not a set element")))
    }

    /// Evaluates `f`. Quantifier bindings are pushed onto `env` and popped
    /// again, so `env` is unchanged on return.
    pub fn eval_formula(&self, f: &Formula, env: &mut Env) -> EvalResult<bool> {
        Ok(match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Cmp(op, a, b) => {
                if op.is_ordering() {
                    let a = self.int(a, env)?;
                    let b = self.int(b, env)?;
                    match op {
                        CmpOp::Lt => a < b,
                        CmpOp::Le => a <= b,
                        CmpOp::Gt => a > b,
                        CmpOp::Ge => a >= b,
                        _ => unreachable!(),
                    }
                } else {
                    let a = self.eval_cow(a, env)?;
                    let b = self.eval_cow(b, env)?;
                    (*a == *b) == (*op == CmpOp::Eq)
                }
            }
            Formula::SetEq(a, b) => *self.eval_cow(a, env)? == *self.eval_cow(b, env)?,
            Formula::Mem(x, s) => {
                let elem = self.elem(x, env)?;
                match &*self.eval_cow(s, env)? {
                    Value::Set(set) => set.contains(&elem),
                    other => return Err(EvalError::Sort(format!("mem on non-set {other}"))),
                }
            }
            Formula::InSet(x, s) => {
                let elem = self.elem(x, env)?;
                match &*self.eval_cow(s, env)? {
                    Value::RwSet(rw) => rw.contains(&elem),
                    other => return Err(EvalError::Sort(format!("in_set on {other}"))),
                }
            }
            Formula::IsEmpty(s) => match &*self.eval_cow(s, env)? {
                Value::Set(set) => set.is_empty(),
                other => return Err(EvalError::Sort(format!("is_empty on non-set {other}"))),
            },
            Formula::Atom(e) => match &*self.eval_cow(e, env)? {
                Value::Bool(b) => *b,
                other => return Err(EvalError::Sort(format!("expected a boolean, found {other}"))),
            },
            Formula::Not(g) => !self.eval_formula(g, env)?,
            Formula::And(a, b) => self.eval_formula(a, env)? && self.eval_formula(b, env)?,
            Formula::Or(a, b) => self.eval_formula(a, env)? || self.eval_formula(b, env)?,
            Formula::Implies(a, b) => !self.eval_formula(a, env)? || self.eval_formula(b, env)?,
            Formula::Iff(a, b) => self.eval_formula(a, env)? == self.eval_formula(b, env)?,
            Formula::Quant(q, binder, body) => {
                let sort = binder.sort.as_ref().ok_or_else(|| EvalError::UntypedBinder(binder.name.clone()))?;
                let want = *q == Quantifier::Exists;
                // Conjuncts not mentioning the binder are decided once; every
                // domain is non-empty, so a false one falsifies either quantifier.
                let (free, bound): (Vec<&Formula>, Vec<&Formula>) = if matches!(**body, Formula::And(..)) {
                    body.conjuncts().into_iter().partition(|c| !c.mentions_var(&binder.name))
                } else {
                    (Vec::new(), vec![body.as_ref()])
                };
                for c in &free {
                    if !self.eval_formula(c, env)? {
                        return Ok(false);
                    }
                }
                if bound.is_empty() {
                    return Ok(true);
                }
                env.push(binder.name.clone(), Value::Int(0));
                let result = self.quantify(sort, &binder.name, want, &bound, env);
                env.pop();
                result?
            }
        })
    }

    fn all(&self, parts: &[&Formula], env: &mut Env) -> EvalResult<bool> {
        for p in parts {
            if !self.eval_formula(p, env)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Searches the binder's domain for a value making the conjunction `body`
    /// equal to `want`.
    /// The binder is the innermost binding of `env`.
    fn quantify(&self, sort: &Sort, name: &str, want: bool, body: &[&Formula], env: &mut Env) -> EvalResult<bool> {
        if *sort == Sort::Int {
            for v in self.bounds.ints() {
                *env.last_mut() = Value::Int(v);
                if self.all(body, env)? == want {
                    return Ok(want);
                }
            }
            return Ok(!want);
        }
        if want {
            if let Some(cands) = self.solve_for(name, body, env)? {
                for v in cands {
                    *env.last_mut() = v;
                    if self.all(body, env)? {
                        return Ok(true);
                    }
                }
                return Ok(false);
            }
        }
        let domain = self.domain(sort).map_err(|reason| EvalError::Ungroundable { binder: name.to_string(), reason })?;
        for v in domain.iter() {
            *env.last_mut() = v.clone();
            if self.all(body, env)? == want {
                return Ok(want);
            }
        }
        Ok(!want)
    }

    /// Every in-bounds value of the set-sorted binder `name` that could solve a
    /// conjunct of `body` of the form `X = v`, `X = add(e, v)` and the like,
    /// where `X` and `e` do not mention `name`. `None` when no conjunct has
    /// that shape.
    fn solve_for(&self, name: &str, body: &[&Formula], env: &Env) -> EvalResult<Option<Vec<Value>>> {
        for c in body {
            let (a, b) = match c {
                Formula::Cmp(CmpOp::Eq, a, b) | Formula::SetEq(a, b) => (a, b),
                _ => continue,
            };
            for (known, pattern) in [(a, b), (b, a)] {
                if known.mentions_var(name) {
                    continue;
                }
                let is_binder = |e: &Expr| matches!(e, Expr::Var(v) if v == name);
                let (elem, rest) = match pattern {
                    _ if is_binder(pattern) => (None, pattern),
                    Expr::Add(e, r) | Expr::Remove(e, r) | Expr::RwAdd(e, r) | Expr::RwRemove(e, r) => (Some(e), r.as_ref()),
                    _ => continue,
                };
                if !is_binder(rest) || elem.is_some_and(|e| e.mentions_var(name)) {
                    continue;
                }
                let x = self.eval_expr(known, env)?;
                let mut out = vec![x.clone()];
                if let Some(e) = elem {
                    let e = self.elem(e, env)?;
                    let other = match (pattern, &x) {
                        (Expr::Add(..), Value::Set(s)) if s.contains(&e) => Some(Value::Set(s.without(&e))),
                        (Expr::Remove(..), Value::Set(s)) if !s.contains(&e) => Some(Value::Set(s.with(e))),
                        (Expr::RwAdd(..), Value::RwSet(rw)) if rw.adds.contains(&e) => {
                            Some(Value::RwSet(RwSetValue { adds: rw.adds.without(&e), removes: rw.removes.clone() }))
                        }
                        (Expr::RwRemove(..), Value::RwSet(rw)) if rw.removes.contains(&e) => {
                            Some(Value::RwSet(RwSetValue { adds: rw.adds.clone(), removes: rw.removes.without(&e) }))
                        }
                        _ => {
                            out.clear();
                            None
                        }
                    };
                    out.extend(other);
                }
                out.retain(|v| self.within_bounds(v));
                return Ok(Some(out));
            }
        }
        Ok(None)
    }

    fn within_bounds(&self, v: &Value) -> bool {
        let elem_ok = |e: Elem| match e {
            Elem::Int(a) => self.bounds.contains(a),
            Elem::Pair(a, b) => self.bounds.contains(a) && self.bounds.contains(b),
        };
        match v {
            Value::Set(s) => s.all(elem_ok),
            Value::RwSet(rw) => rw.adds.all(elem_ok) && rw.removes.all(elem_ok),
            _ => true,
        }
    }

    /// All values of `sort` within bounds, in enumeration order.
    pub fn domain(&self, sort: &Sort) -> Result<Rc<Vec<Value>>, String> {
        if let Some(d) = self.domains.borrow().get(sort) {
            return Ok(d.clone());
        }
        let values = Rc::new(self.build_domain(sort)?);
        self.domains.borrow_mut().insert(sort.clone(), values.clone());
        Ok(values)
    }

    fn build_domain(&self, sort: &Sort) -> Result<Vec<Value>, String> {
        Ok(match sort {
            Sort::Int => self.bounds.ints().map(Value::Int).collect(),
            Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Sort::Pair(a, b) => {
                let da = self.domain(a)?;
                let db = self.domain(b)?;
                let mut out = Vec::with_capacity(da.len() * db.len());
                for x in da.iter() {
                    for y in db.iter() {
                        out.push(Value::pair(x.clone(), y.clone()));
                    }
                }
                out
            }
            Sort::Set(elem) => self.subsets(elem)?.into_iter().map(Value::Set).collect(),
            Sort::RwSet(elem) => {
                let subsets = self.subsets(elem)?;
                let total = subsets.len() * subsets.len();
                if total > 1 << MAX_SUBSET_ELEMS {
                    return Err(format!("{total} remove-wins set values exceed the enumeration limit"));
                }
                let mut out = Vec::with_capacity(total);
                for adds in &subsets {
                    for removes in &subsets {
                        out.push(Value::RwSet(RwSetValue { adds: adds.clone(), removes: removes.clone() }));
                    }
                }
                out
            }
            Sort::State => return Err("state values cannot be quantified over".into()),
        })
    }

    /// Elements of `elem` within bounds, ascending.
    pub fn elements(&self, elem: &Sort) -> Result<Vec<Elem>, String> {
        match elem {
            Sort::Int => Ok(self.bounds.ints().map(Elem::Int).collect()),
            Sort::Pair(a, b) if **a == Sort::Int && **b == Sort::Int => {
                let mut out = Vec::new();
                for x in self.bounds.ints() {
                    for y in self.bounds.ints() {
                        out.push(Elem::Pair(x, y));
                    }
                }
                Ok(out)
            }
            other => Err(format!("sets of {other:?} are not supported")),
        }
    }

    /// All subsets of the bounded element domain, in binary counting order.
    pub fn subsets(&self, elem: &Sort) -> Result<Vec<FiniteSet>, String> {
        let elems = self.elements(elem)?;
        if elems.len() > MAX_SUBSET_ELEMS {
            return Err(format!("{} elements give too many subsets to enumerate", elems.len()));
        }
        Ok(subsets_in_order(&elems, &FiniteSet::new()))
    }

    /// Executes `s` with `state_var` bound to `state`; returns the final state.
    /// `env` is restored before returning.
    pub fn exec_stmt(&self, s: &Stmt, state_var: &str, state: &StateValue, env: &mut Env) -> EvalResult<StateValue> {
        let mark = env.len();
        env.push(state_var, Value::State(state.clone()));
        let result = self.exec_in_place(s, env);
        let final_state = env.pop().map(|(_, v)| v);
        env.truncate(mark);
        result?;
        match final_state {
            Some(Value::State(s)) => Ok(s),
            _ => Err(EvalError::Sort("state variable rebound to a non-state value".into())),
        }
    }

    /// Executes `s` against the state already bound in `env`.
    pub fn exec_in_place(&self, s: &Stmt, env: &mut Env) -> EvalResult<()> {
        match s {
            Stmt::Skip => Ok(()),
            Stmt::Seq(a, b) => {
                self.exec_in_place(a, env)?;
                self.exec_in_place(b, env)
            }
            Stmt::Assign { state, field, value } => {
                let v = self.eval_expr(value, env)?;
                let idx = self.state.field_index(field).ok_or_else(|| EvalError::UnknownField(field.clone()))?;
                match env.get_mut(state) {
                    Some(Value::State(st)) => {
                        st.0[idx] = v;
                        Ok(())
                    }
                    Some(_) => Err(EvalError::Sort(format!("`{state}` is not a state"))),
                    None => Err(EvalError::Unbound(state.clone())),
                }
            }
        }
    }
}

/// `base ∪ S` for every subset `S` of `free`, in binary counting order over
/// `free` (element `i` of `free` is bit `i`).
pub fn subsets_in_order(free: &[Elem], base: &FiniteSet) -> Vec<FiniteSet> {
    let n = free.len();
    let mut out = Vec::with_capacity(1usize << n);
    for mask in 0u64..(1u64 << n) {
        let mut s = base.clone();
        for (i, e) in free.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s.insert(*e);
            }
        }
        out.push(s);
    }
    out
}

/// Evaluates `f` in a copy of `env`.
pub fn eval_formula(f: &Formula, env: &Env, state: &StateDecl, bounds: DomainBounds) -> Result<bool, EvalError> {
    let mut env = env.clone();
    Evaluator::new(state, bounds).eval_formula(f, &mut env)
}

/// Runs `s` on `state` with parameters bound by `env`.
pub fn exec_stmt(
    s: &Stmt,
    state_var: &str,
    state: &StateValue,
    env: &Env,
    decl: &StateDecl,
    bounds: DomainBounds,
) -> Result<StateValue, EvalError> {
    let mut env = env.clone();
    Evaluator::new(decl, bounds).exec_stmt(s, state_var, state, &mut env)
}
