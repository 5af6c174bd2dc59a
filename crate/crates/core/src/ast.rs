//! Abstract syntax of the specification language.
//!
//! A [`Spec`] is a single state record with an invariant, a list of operations
//! with `requires`/`ensures` contracts and bodies, and an optional user-supplied
//! state-equality predicate. Expressions denote integers, booleans, pairs,
//! finite sets and remove-wins sets; formulas are first-order assertions over
//! them; statements assign whole state fields.

use std::fmt;

/// Sorts of the assertion language.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Bool,
    Pair(Box<Sort>, Box<Sort>),
    Set(Box<Sort>),
    /// Remove-wins set: a pair of grow-only sets (adds, removes).
    RwSet(Box<Sort>),
    /// The application state record. Never the sort of a field.
    State,
}

impl Sort {
    pub fn pair(a: Sort, b: Sort) -> Sort {
        Sort::Pair(Box::new(a), Box::new(b))
    }

    pub fn set(elem: Sort) -> Sort {
        Sort::Set(Box::new(elem))
    }

    pub fn rw_set(elem: Sort) -> Sort {
        Sort::RwSet(Box::new(elem))
    }

    /// Set elements are restricted to integers and pairs of integers.
    pub fn is_valid_element(&self) -> bool {
        match self {
            Sort::Int => true,
            Sort::Pair(a, b) => **a == Sort::Int && **b == Sort::Int,
            _ => false,
        }
    }

    pub fn is_collection(&self) -> bool {
        matches!(self, Sort::Set(_) | Sort::RwSet(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    /// Operation parameter, quantified variable or state variable.
    Var(String),
    /// `base.field`: a state-field read, or a component of a remove-wins set
    /// (`remove_wins_add` / `remove_wins_removes`).
    Field(Box<Expr>, String),
    /// `old e`: evaluates `e` in the operation's entry state. Ensures only.
    Old(Box<Expr>),
    Pair(Box<Expr>, Box<Expr>),
    Fst(Box<Expr>),
    Snd(Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    /// `empty`
    Empty,
    /// `add e s`
    Add(Box<Expr>, Box<Expr>),
    /// `remove e s`
    Remove(Box<Expr>, Box<Expr>),
    /// `empty_set ()`
    RwEmpty,
    /// `add_element e s`
    RwAdd(Box<Expr>, Box<Expr>),
    /// `remove_element e s`
    RwRemove(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn field(base: Expr, field: impl Into<String>) -> Expr {
        Expr::Field(Box::new(base), field.into())
    }

    /// `state.field` for a named state variable.
    pub fn state_field(state: &str, field: &str) -> Expr {
        Expr::field(Expr::var(state), field)
    }

    pub fn pair(a: Expr, b: Expr) -> Expr {
        Expr::Pair(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(elem: Expr, set: Expr) -> Expr {
        Expr::Add(Box::new(elem), Box::new(set))
    }

    pub fn remove(elem: Expr, set: Expr) -> Expr {
        Expr::Remove(Box::new(elem), Box::new(set))
    }

    pub fn arith(op: ArithOp, a: Expr, b: Expr) -> Expr {
        Expr::Arith(op, Box::new(a), Box::new(b))
    }

    /// Direct sub-expressions, in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Empty | Expr::RwEmpty => vec![],
            Expr::Field(e, _) | Expr::Old(e) | Expr::Fst(e) | Expr::Snd(e) => vec![e],
            Expr::Pair(a, b)
            | Expr::Arith(_, a, b)
            | Expr::Add(a, b)
            | Expr::Remove(a, b)
            | Expr::RwAdd(a, b)
            | Expr::RwRemove(a, b) => vec![a, b],
        }
    }

    pub fn mentions_var(&self, name: &str) -> bool {
        match self {
            Expr::Var(v) => v == name,
            Expr::Int(_) | Expr::Bool(_) | Expr::Empty | Expr::RwEmpty => false,
            Expr::Field(e, _) | Expr::Old(e) | Expr::Fst(e) | Expr::Snd(e) => e.mentions_var(name),
            Expr::Pair(a, b)
            | Expr::Arith(_, a, b)
            | Expr::Add(a, b)
            | Expr::Remove(a, b)
            | Expr::RwAdd(a, b)
            | Expr::RwRemove(a, b) => a.mentions_var(name) || b.mentions_var(name),
        }
    }

    pub fn contains_old(&self) -> bool {
        matches!(self, Expr::Old(_)) || self.children().into_iter().any(Expr::contains_old)
    }
}

/// A quantifier binder. `sort` is `None` only between parsing and sort
/// inference; every spec returned by the parser has all binder sorts filled.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Binder {
    pub name: String,
    pub sort: Option<Sort>,
}

impl Binder {
    pub fn new(name: impl Into<String>, sort: Sort) -> Binder {
        Binder { name: name.into(), sort: Some(sort) }
    }

    pub fn untyped(name: impl Into<String>) -> Binder {
        Binder { name: name.into(), sort: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Cmp(CmpOp, Expr, Expr),
    /// `mem e s`
    Mem(Expr, Expr),
    /// `is_empty s`
    IsEmpty(Expr),
    /// `s1 == s2`: extensional equality. On remove-wins sets this is the
    /// component-wise `equal` predicate.
    SetEq(Expr, Expr),
    /// `in_set e s` on a remove-wins set.
    InSet(Expr, Expr),
    /// A boolean-sorted expression used as a formula.
    Atom(Expr),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Quant(Quantifier, Binder, Box<Formula>),
}

impl Formula {
    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Formula {
        Formula::Cmp(op, a, b)
    }

    pub fn eq(a: Expr, b: Expr) -> Formula {
        Formula::Cmp(CmpOp::Eq, a, b)
    }

    pub fn ne(a: Expr, b: Expr) -> Formula {
        Formula::Cmp(CmpOp::Ne, a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(name: impl Into<String>, sort: Sort, body: Formula) -> Formula {
        Formula::Quant(Quantifier::Forall, Binder::new(name, sort), Box::new(body))
    }

    pub fn exists(name: impl Into<String>, sort: Sort, body: Formula) -> Formula {
        Formula::Quant(Quantifier::Exists, Binder::new(name, sort), Box::new(body))
    }

    /// Left-nested conjunction of `parts`; `True` when empty.
    pub fn conjoin<I: IntoIterator<Item = Formula>>(parts: I) -> Formula {
        parts
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::True)
    }

    /// Top-level conjuncts, flattening nested `And`s left to right.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn walk<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            match f {
                Formula::And(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                other => out.push(other),
            }
        }
        walk(self, &mut out);
        out
    }

    /// Expressions appearing directly in this node (not in sub-formulas).
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Formula::Cmp(_, a, b) | Formula::Mem(a, b) | Formula::SetEq(a, b) | Formula::InSet(a, b) => {
                vec![a, b]
            }
            Formula::IsEmpty(e) | Formula::Atom(e) => vec![e],
            _ => vec![],
        }
    }

    pub fn subformulas(&self) -> Vec<&Formula> {
        match self {
            Formula::Not(f) | Formula::Quant(_, _, f) => vec![f],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                vec![a, b]
            }
            _ => vec![],
        }
    }

    /// Whether `name` occurs free.
    pub fn mentions_var(&self, name: &str) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Cmp(_, a, b) | Formula::Mem(a, b) | Formula::SetEq(a, b) | Formula::InSet(a, b) => {
                a.mentions_var(name) || b.mentions_var(name)
            }
            Formula::IsEmpty(e) | Formula::Atom(e) => e.mentions_var(name),
            Formula::Not(f) => f.mentions_var(name),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.mentions_var(name) || b.mentions_var(name)
            }
            Formula::Quant(_, b, body) => b.name != name && body.mentions_var(name),
        }
    }

    pub fn contains_old(&self) -> bool {
        self.exprs().into_iter().any(Expr::contains_old)
            || self.subformulas().into_iter().any(Formula::contains_old)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Stmt {
    Skip,
    /// `state.field <- value`
    Assign { state: String, field: String, value: Expr },
    Seq(Box<Stmt>, Box<Stmt>),
}

impl Stmt {
    pub fn assign(state: &str, field: &str, value: Expr) -> Stmt {
        Stmt::Assign { state: state.to_string(), field: field.to_string(), value }
    }

    pub fn seq(a: Stmt, b: Stmt) -> Stmt {
        Stmt::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence; `Skip` when empty.
    pub fn sequence<I: IntoIterator<Item = Stmt>>(stmts: I) -> Stmt {
        let mut items: Vec<Stmt> = stmts.into_iter().collect();
        let mut acc = match items.pop() {
            Some(last) => last,
            None => return Stmt::Skip,
        };
        while let Some(prev) = items.pop() {
            acc = Stmt::seq(prev, acc);
        }
        acc
    }

    /// Assignments in execution order.
    pub fn assignments(&self) -> Vec<(&str, &str, &Expr)> {
        let mut out = Vec::new();
        fn walk<'a>(s: &'a Stmt, out: &mut Vec<(&'a str, &'a str, &'a Expr)>) {
            match s {
                Stmt::Skip => {}
                Stmt::Assign { state, field, value } => out.push((state, field, value)),
                Stmt::Seq(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub sort: Sort,
}

/// The `[@state]` record type and its invariant.
///
/// The invariant is a formula over the state variable named by
/// [`StateDecl::SELF`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub type_name: String,
    pub fields: Vec<FieldDecl>,
    pub invariant: Formula,
}

impl StateDecl {
    /// Name of the state variable the invariant is written against.
    pub const SELF: &'static str = "self";

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub sort: Sort,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpDecl {
    pub name: String,
    pub params: Vec<Param>,
    /// Name of the state parameter (`(state : state)`).
    pub state_param: String,
    pub requires: Vec<Formula>,
    pub ensures: Vec<Formula>,
    pub body: Stmt,
}

impl OpDecl {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Conjunction of all requires clauses.
    pub fn precondition(&self) -> Formula {
        Formula::conjoin(self.requires.iter().cloned())
    }
}

/// The `[@state_eq]` predicate: a formula over two state variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateEq {
    pub name: String,
    pub left: String,
    pub right: String,
    pub body: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spec {
    pub state: StateDecl,
    pub ops: Vec<OpDecl>,
    pub state_eq: Option<StateEq>,
}

impl Spec {
    pub fn op(&self, name: &str) -> Option<&OpDecl> {
        self.ops.iter().find(|o| o.name == name)
    }

    /// Every identifier declared anywhere in the spec, used to keep generated
    /// names fresh.
    pub fn identifiers(&self) -> std::collections::BTreeSet<String> {
        let mut ids = std::collections::BTreeSet::new();
        ids.insert(self.state.type_name.clone());
        ids.insert(StateDecl::SELF.to_string());
        for f in &self.state.fields {
            ids.insert(f.name.clone());
        }
        collect_formula_names(&self.state.invariant, &mut ids);
        for op in &self.ops {
            ids.insert(op.name.clone());
            ids.insert(op.state_param.clone());
            for p in &op.params {
                ids.insert(p.name.clone());
            }
            for f in op.requires.iter().chain(&op.ensures) {
                collect_formula_names(f, &mut ids);
            }
            for (_, _, e) in op.body.assignments() {
                collect_expr_names(e, &mut ids);
            }
        }
        if let Some(eq) = &self.state_eq {
            ids.insert(eq.name.clone());
            ids.insert(eq.left.clone());
            ids.insert(eq.right.clone());
            collect_formula_names(&eq.body, &mut ids);
        }
        ids
    }
}

fn collect_expr_names(e: &Expr, out: &mut std::collections::BTreeSet<String>) {
    if let Expr::Var(v) = e {
        out.insert(v.clone());
    }
    for c in e.children() {
        collect_expr_names(c, out);
    }
}

fn collect_formula_names(f: &Formula, out: &mut std::collections::BTreeSet<String>) {
    if let Formula::Quant(_, b, _) = f {
        out.insert(b.name.clone());
    }
    for e in f.exprs() {
        collect_expr_names(e, out);
    }
    for g in f.subformulas() {
        collect_formula_names(g, out);
    }
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        })
    }
}
