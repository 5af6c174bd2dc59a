//! Sort inference and checking.
//!
//! Binders written without a sort (`forall i, j. ...`) get a sort variable
//! that is solved by unification against their uses; variables left
//! unconstrained default to `int`.

use std::fmt;

use crate::ast::{CmpOp, Expr, Formula, Sort, Spec, StateDecl, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticKind {
    SortMismatch,
    UnknownIdentifier,
    UnknownField,
    IllegalOld,
    UnsupportedSort,
    InvalidAssignment,
    Duplicate,
}

/// A sort error, attributed to the clause it occurs in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// Clause label such as `requires #2 of enroll` or `invariant`.
    pub clause: String,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.clause, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Ty {
    Int,
    Bool,
    Pair(Box<Ty>, Box<Ty>),
    Set(Box<Ty>),
    RwSet(Box<Ty>),
    State,
    Var(usize),
}

impl Ty {
    fn from_sort(s: &Sort) -> Ty {
        match s {
            Sort::Int => Ty::Int,
            Sort::Bool => Ty::Bool,
            Sort::Pair(a, b) => Ty::Pair(Box::new(Ty::from_sort(a)), Box::new(Ty::from_sort(b))),
            Sort::Set(e) => Ty::Set(Box::new(Ty::from_sort(e))),
            Sort::RwSet(e) => Ty::RwSet(Box::new(Ty::from_sort(e))),
            Sort::State => Ty::State,
        }
    }
}

#[derive(Default)]
struct Unifier {
    slots: Vec<Option<Ty>>,
}

impl Unifier {
    fn fresh(&mut self) -> Ty {
        self.slots.push(None);
        Ty::Var(self.slots.len() - 1)
    }

    fn shallow(&self, t: &Ty) -> Ty {
        let mut t = t.clone();
        while let Ty::Var(v) = t {
            match &self.slots[v] {
                Some(next) => t = next.clone(),
                None => break,
            }
        }
        t
    }

    fn occurs(&self, v: usize, t: &Ty) -> bool {
        match self.shallow(t) {
            Ty::Var(w) => v == w,
            Ty::Pair(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
            Ty::Set(e) | Ty::RwSet(e) => self.occurs(v, &e),
            _ => false,
        }
    }

    fn unify(&mut self, a: &Ty, b: &Ty) -> bool {
        let a = self.shallow(a);
        let b = self.shallow(b);
        match (a, b) {
            (Ty::Var(x), Ty::Var(y)) if x == y => true,
            (Ty::Var(x), t) | (t, Ty::Var(x)) => {
                if self.occurs(x, &t) {
                    return false;
                }
                self.slots[x] = Some(t);
                true
            }
            (Ty::Pair(a1, b1), Ty::Pair(a2, b2)) => self.unify(&a1, &a2) && self.unify(&b1, &b2),
            (Ty::Set(x), Ty::Set(y)) | (Ty::RwSet(x), Ty::RwSet(y)) => self.unify(&x, &y),
            (x, y) => x == y,
        }
    }

    /// Fully resolves `t`; unsolved variables become `int`.
    fn sort(&self, t: &Ty) -> Sort {
        match self.shallow(t) {
            Ty::Int | Ty::Var(_) => Sort::Int,
            Ty::Bool => Sort::Bool,
            Ty::Pair(a, b) => Sort::pair(self.sort(&a), self.sort(&b)),
            Ty::Set(e) => Sort::set(self.sort(&e)),
            Ty::RwSet(e) => Sort::rw_set(self.sort(&e)),
            Ty::State => Sort::State,
        }
    }

    fn show(&self, t: &Ty) -> String {
        match self.shallow(t) {
            Ty::Var(_) => "_".into(),
            Ty::Int => "int".into(),
            Ty::Bool => "bool".into(),
            Ty::State => "state".into(),
            Ty::Pair(a, b) => format!("({}, {})", self.show(&a), self.show(&b)),
            Ty::Set(e) => format!("fset {}", self.show_atom(&e)),
            Ty::RwSet(e) => format!("remove_wins_set {}", self.show_atom(&e)),
        }
    }

    fn show_atom(&self, t: &Ty) -> String {
        match self.shallow(t) {
            Ty::Set(_) | Ty::RwSet(_) => format!("({})", self.show(t)),
            _ => self.show(t),
        }
    }
}

const RW_COMPONENTS: [&str; 2] = ["remove_wins_add", "remove_wins_removes"];

struct Infer<'a> {
    decl: &'a StateDecl,
    u: Unifier,
    scope: Vec<(String, Ty)>,
    binders: Vec<Ty>,
    /// Element sorts of set expressions, validated once solved.
    elems: Vec<(Ty, String)>,
    /// Operands of `==`, which must be sets.
    set_eqs: Vec<(Ty, String)>,
    allow_old: bool,
    clause: String,
    diags: Vec<Diagnostic>,
}

impl<'a> Infer<'a> {
    fn new(decl: &'a StateDecl, clause: String, scope: &[(String, Sort)], allow_old: bool) -> Infer<'a> {
        Infer {
            decl,
            u: Unifier::default(),
            scope: scope.iter().map(|(n, s)| (n.clone(), Ty::from_sort(s))).collect(),
            binders: Vec::new(),
            elems: Vec::new(),
            set_eqs: Vec::new(),
            allow_old,
            clause,
            diags: Vec::new(),
        }
    }

    fn diag(&mut self, kind: DiagnosticKind, message: String) {
        self.diags.push(Diagnostic { clause: self.clause.clone(), kind, message });
    }

    fn mismatch(&mut self, e: &Expr, want: &Ty, found: &Ty) {
        let msg = format!(
            "sort mismatch in `{e}`: expected {}, found {}",
            self.u.show(want),
            self.u.show(found)
        );
        self.diag(DiagnosticKind::SortMismatch, msg);
    }

    fn expect(&mut self, e: &Expr, want: &Ty) {
        let t = self.expr(e);
        if !self.u.unify(&t, want) {
            self.mismatch(e, want, &t);
        }
    }

    /// Checks `set` holds elements of sort `elem`, reporting against `whole`.
    fn member_of(&mut self, whole: &Expr, elem: &Ty, set: &Ty, rw: bool) {
        let want = if rw { Ty::RwSet(Box::new(elem.clone())) } else { Ty::Set(Box::new(elem.clone())) };
        if !self.u.unify(set, &want) {
            let kind = if rw { "remove-wins set" } else { "set" };
            let msg = format!(
                "sort mismatch in `{whole}`: element sort {} differs from the {kind} sort {}",
                self.u.show(elem),
                self.u.show(set)
            );
            self.diag(DiagnosticKind::SortMismatch, msg);
        }
        self.elems.push((elem.clone(), whole.to_string()));
    }

    fn lookup(&self, name: &str) -> Option<Ty> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t.clone())
    }

    fn expr(&mut self, e: &Expr) -> Ty {
        match e {
            Expr::Int(_) => Ty::Int,
            Expr::Bool(_) => Ty::Bool,
            Expr::Var(name) => match self.lookup(name) {
                Some(t) => t,
                None => {
                    self.diag(DiagnosticKind::UnknownIdentifier, format!("unknown identifier `{name}`"));
                    self.u.fresh()
                }
            },
            Expr::Field(base, field) => {
                let tb = self.expr(base);
                self.field(e, &tb, field)
            }
            Expr::Old(inner) => {
                if !self.allow_old {
                    self.diag(DiagnosticKind::IllegalOld, format!("`old` outside an ensures clause in `{e}`"));
                }
                self.expr(inner)
            }
            Expr::Pair(a, b) => {
                let ta = self.expr(a);
                let tb = self.expr(b);
                Ty::Pair(Box::new(ta), Box::new(tb))
            }
            Expr::Fst(p) | Expr::Snd(p) => {
                let a = self.u.fresh();
                let b = self.u.fresh();
                self.expect(p, &Ty::Pair(Box::new(a.clone()), Box::new(b.clone())));
                if matches!(e, Expr::Fst(_)) {
                    a
                } else {
                    b
                }
            }
            Expr::Arith(_, a, b) => {
                self.expect(a, &Ty::Int);
                self.expect(b, &Ty::Int);
                Ty::Int
            }
            Expr::Empty => Ty::Set(Box::new(self.u.fresh())),
            Expr::RwEmpty => Ty::RwSet(Box::new(self.u.fresh())),
            Expr::Add(x, s) | Expr::Remove(x, s) | Expr::RwAdd(x, s) | Expr::RwRemove(x, s) => {
                let rw = matches!(e, Expr::RwAdd(..) | Expr::RwRemove(..));
                let tx = self.expr(x);
                let ts = self.expr(s);
                self.member_of(e, &tx, &ts, rw);
                ts
            }
        }
    }

    fn field(&mut self, e: &Expr, base: &Ty, field: &str) -> Ty {
        let state_field = self.decl.field(field).map(|f| Ty::from_sort(&f.sort));
        let rw_component = RW_COMPONENTS.contains(&field);
        match self.u.shallow(base) {
            Ty::State => match state_field {
                Some(t) => t,
                None => {
                    self.diag(DiagnosticKind::UnknownField, format!("unknown field `{field}` in `{e}`"));
                    self.u.fresh()
                }
            },
            Ty::RwSet(elem) if rw_component => Ty::Set(elem),
            Ty::Var(_) if state_field.is_some() => {
                self.u.unify(base, &Ty::State);
                state_field.unwrap()
            }
            Ty::Var(_) if rw_component => {
                let elem = self.u.fresh();
                self.u.unify(base, &Ty::RwSet(Box::new(elem.clone())));
                Ty::Set(Box::new(elem))
            }
            Ty::Var(_) => {
                self.diag(DiagnosticKind::UnknownField, format!("unknown field `{field}` in `{e}`"));
                self.u.fresh()
            }
            other => {
                let msg = format!("field `{field}` read from a value of sort {} in `{e}`", self.u.show(&other));
                self.diag(DiagnosticKind::SortMismatch, msg);
                self.u.fresh()
            }
        }
    }

    fn formula(&mut self, f: &Formula) {
        match f {
            Formula::True | Formula::False => {}
            Formula::Cmp(op, a, b) => {
                if op.is_ordering() {
                    self.expect(a, &Ty::Int);
                    self.expect(b, &Ty::Int);
                } else {
                    let ta = self.expr(a);
                    let tb = self.expr(b);
                    if !self.u.unify(&ta, &tb) {
                        let msg = format!(
                            "sort mismatch in `{f}`: {} {} {}",
                            self.u.show(&ta),
                            if *op == CmpOp::Eq { "=" } else { "<>" },
                            self.u.show(&tb)
                        );
                        self.diag(DiagnosticKind::SortMismatch, msg);
                    }
                }
            }
            Formula::SetEq(a, b) => {
                let ta = self.expr(a);
                let tb = self.expr(b);
                if !self.u.unify(&ta, &tb) {
                    let msg = format!("sort mismatch in `{f}`: {} == {}", self.u.show(&ta), self.u.show(&tb));
                    self.diag(DiagnosticKind::SortMismatch, msg);
                }
                self.set_eqs.push((ta, f.to_string()));
            }
            Formula::Mem(x, s) | Formula::InSet(x, s) => {
                let tx = self.expr(x);
                let ts = self.expr(s);
                let whole = match f {
                    Formula::Mem(..) => Expr::add(x.clone(), s.clone()),
                    _ => Expr::RwAdd(Box::new(x.clone()), Box::new(s.clone())),
                };
                let before = self.diags.len();
                self.member_of(&whole, &tx, &ts, matches!(f, Formula::InSet(..)));
                // Report against the formula the user wrote, not the helper.
                for d in &mut self.diags[before..] {
                    d.message = d.message.replace(&format!("`{whole}`"), &format!("`{f}`"));
                }
            }
            Formula::IsEmpty(s) => {
                let elem = self.u.fresh();
                self.expect(s, &Ty::Set(Box::new(elem)));
            }
            Formula::Atom(e) => self.expect(e, &Ty::Bool),
            Formula::Not(g) => self.formula(g),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                self.formula(a);
                self.formula(b);
            }
            Formula::Quant(_, binder, body) => {
                let t = match &binder.sort {
                    Some(s) => Ty::from_sort(s),
                    None => self.u.fresh(),
                };
                self.binders.push(t.clone());
                self.scope.push((binder.name.clone(), t));
                self.formula(body);
                self.scope.pop();
            }
        }
    }

    /// Validates solved sorts and returns the binder sorts in pre-order.
    fn finish(&mut self) -> Vec<Sort> {
        for (t, text) in std::mem::take(&mut self.elems) {
            if let Ty::Var(_) = self.u.shallow(&t) {
                continue;
            }
            let s = self.u.sort(&t);
            if !s.is_valid_element() {
                self.diag(
                    DiagnosticKind::UnsupportedSort,
                    format!("set elements must be int or (int, int), found {s} in `{text}`"),
                );
            }
        }
        for (t, text) in std::mem::take(&mut self.set_eqs) {
            match self.u.shallow(&t) {
                Ty::Set(_) | Ty::RwSet(_) | Ty::Var(_) => {}
                _ => {
                    let msg = format!("`==` compares sets, found {} in `{text}`", self.u.show(&t));
                    self.diag(DiagnosticKind::SortMismatch, msg);
                }
            }
        }
        let binders = std::mem::take(&mut self.binders);
        binders
            .iter()
            .map(|t| {
                let s = self.u.sort(t);
                if let Some(problem) = sort_problem(&s) {
                    self.diag(DiagnosticKind::UnsupportedSort, format!("quantified variable has {problem}"));
                } else if s == Sort::State {
                    self.diag(DiagnosticKind::UnsupportedSort, "cannot quantify over states".into());
                }
                s
            })
            .collect()
    }
}

/// Why `sort` cannot be the sort of a field, parameter or binder.
fn sort_problem(sort: &Sort) -> Option<String> {
    match sort {
        Sort::Int | Sort::Bool | Sort::State => None,
        Sort::Pair(a, b) => {
            if **a == Sort::State || **b == Sort::State {
                return Some("a pair containing a state".into());
            }
            sort_problem(a).or_else(|| sort_problem(b))
        }
        Sort::Set(e) | Sort::RwSet(e) => {
            if e.is_valid_element() {
                None
            } else {
                Some(format!("unsupported element sort {e} (sets hold int or (int, int))"))
            }
        }
    }
}

fn fill_binders(f: &mut Formula, sorts: &mut std::vec::IntoIter<Sort>) {
    match f {
        Formula::Quant(_, binder, body) => {
            if let Some(s) = sorts.next() {
                binder.sort = Some(s);
            }
            fill_binders(body, sorts);
        }
        Formula::Not(g) => fill_binders(g, sorts),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            fill_binders(a, sorts);
            fill_binders(b, sorts);
        }
        _ => {}
    }
}

/// Infers and checks the sorts of `f` under `scope`, filling in binder sorts.
pub fn infer_formula(
    f: &mut Formula,
    scope: &[(String, Sort)],
    decl: &StateDecl,
    allow_old: bool,
    clause: &str,
) -> Vec<Diagnostic> {
    let mut inf = Infer::new(decl, clause.to_string(), scope, allow_old);
    inf.formula(f);
    let sorts = inf.finish();
    fill_binders(f, &mut sorts.into_iter());
    inf.diags
}

/// Infers the sort of a binder-free expression.
pub fn infer_expr(e: &Expr, scope: &[(String, Sort)], decl: &StateDecl, clause: &str) -> (Sort, Vec<Diagnostic>) {
    let mut inf = Infer::new(decl, clause.to_string(), scope, false);
    let t = inf.expr(e);
    inf.finish();
    (inf.u.sort(&t), inf.diags)
}

fn check_body(op_name: &str, state_param: &str, body: &Stmt, scope: &[(String, Sort)], decl: &StateDecl) -> Vec<Diagnostic> {
    let clause = format!("body of {op_name}");
    let mut inf = Infer::new(decl, clause, scope, false);
    for (state, field, value) in body.assignments() {
        if state != state_param {
            inf.diag(
                DiagnosticKind::InvalidAssignment,
                format!("assignment to `{state}.{field}` does not target the state parameter `{state_param}`"),
            );
        }
        match decl.field(field) {
            Some(fd) => inf.expect(value, &Ty::from_sort(&fd.sort)),
            None => {
                inf.diag(DiagnosticKind::UnknownField, format!("assignment to unknown field `{field}`"));
                inf.expr(value);
            }
        }
    }
    inf.finish();
    inf.diags
}

/// Checks every clause of `spec`, filling in inferred binder sorts.
pub fn infer_spec(spec: &mut Spec) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let decl = spec.state.clone();
    let dup = |clause: String, message: String| Diagnostic { clause, kind: DiagnosticKind::Duplicate, message };

    for (i, field) in decl.fields.iter().enumerate() {
        let clause = format!("field {}", field.name);
        if decl.fields[..i].iter().any(|f| f.name == field.name) {
            diags.push(dup(clause.clone(), format!("field `{}` declared twice", field.name)));
        }
        if field.sort == Sort::State {
            diags.push(unsupported(clause, "a field cannot hold the state record".into()));
        } else if let Some(problem) = sort_problem(&field.sort) {
            diags.push(unsupported(clause, problem));
        }
    }

    let self_scope = [(StateDecl::SELF.to_string(), Sort::State)];
    diags.extend(infer_formula(&mut spec.state.invariant, &self_scope, &decl, false, "invariant"));

    for i in 0..spec.ops.len() {
        if spec.ops[..i].iter().any(|o| o.name == spec.ops[i].name) {
            let name = spec.ops[i].name.clone();
            diags.push(dup(format!("operation {name}"), format!("operation `{name}` declared twice")));
        }
        let op = &mut spec.ops[i];
        let mut scope = Vec::new();
        for (j, p) in op.params.iter().enumerate() {
            let clause = format!("parameter {} of {}", p.name, op.name);
            if op.params[..j].iter().any(|q| q.name == p.name) || p.name == op.state_param {
                diags.push(dup(clause.clone(), format!("parameter `{}` declared twice", p.name)));
            }
            if decl.field(&p.name).is_some() {
                diags.push(dup(clause.clone(), format!("parameter `{}` has the name of a state field", p.name)));
            }
            if p.sort == Sort::State {
                diags.push(unsupported(clause, "only the state parameter may have the state sort".into()));
            } else if let Some(problem) = sort_problem(&p.sort) {
                diags.push(unsupported(clause, problem));
            }
            scope.push((p.name.clone(), p.sort.clone()));
        }
        scope.push((op.state_param.clone(), Sort::State));
        for (j, r) in op.requires.iter_mut().enumerate() {
            let clause = format!("requires #{} of {}", j + 1, op.name);
            diags.extend(infer_formula(r, &scope, &decl, false, &clause));
        }
        for (j, e) in op.ensures.iter_mut().enumerate() {
            let clause = format!("ensures #{} of {}", j + 1, op.name);
            diags.extend(infer_formula(e, &scope, &decl, true, &clause));
        }
        diags.extend(check_body(&op.name, &op.state_param, &op.body, &scope, &decl));
    }

    if let Some(eq) = &mut spec.state_eq {
        let clause = format!("state_eq predicate {}", eq.name);
        if eq.left == eq.right {
            diags.push(dup(clause.clone(), format!("parameter `{}` declared twice", eq.left)));
        }
        let scope = [(eq.left.clone(), Sort::State), (eq.right.clone(), Sort::State)];
        diags.extend(infer_formula(&mut eq.body, &scope, &decl, false, &clause));
    }
    diags
}

fn unsupported(clause: String, message: String) -> Diagnostic {
    Diagnostic { clause, kind: DiagnosticKind::UnsupportedSort, message }
}

/// Sort diagnostics for `spec`; empty iff it is well-sorted.
pub fn typecheck(spec: &Spec) -> Vec<Diagnostic> {
    infer_spec(&mut spec.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Binder, FieldDecl, OpDecl, Param, Quantifier};

    fn decl() -> StateDecl {
        StateDecl {
            type_name: "state".into(),
            fields: vec![
                FieldDecl { name: "courses".into(), sort: Sort::set(Sort::Int) },
                FieldDecl { name: "enrolled".into(), sort: Sort::set(Sort::pair(Sort::Int, Sort::Int)) },
            ],
            invariant: Formula::True,
        }
    }

    fn spec_with_body(body: Stmt) -> Spec {
        Spec {
            state: decl(),
            ops: vec![OpDecl {
                name: "f".into(),
                params: vec![Param { name: "x".into(), sort: Sort::Int }],
                state_param: "state".into(),
                requires: vec![],
                ensures: vec![],
                body,
            }],
            state_eq: None,
        }
    }

    #[test]
    fn pair_added_to_int_set_is_one_mismatch() {
        let body = Stmt::assign(
            "state",
            "courses",
            Expr::add(Expr::pair(Expr::Int(1), Expr::Int(2)), Expr::state_field("state", "courses")),
        );
        let diags = typecheck(&spec_with_body(body));
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert_eq!(diags[0].kind, DiagnosticKind::SortMismatch);
        assert_eq!(diags[0].clause, "body of f");
    }

    #[test]
    fn binder_sorts_are_inferred_from_membership() {
        let mut f = Formula::Quant(
            Quantifier::Forall,
            Binder::untyped("i"),
            Box::new(Formula::Quant(
                Quantifier::Forall,
                Binder::untyped("j"),
                Box::new(Formula::Mem(
                    Expr::pair(Expr::var("i"), Expr::var("j")),
                    Expr::state_field("self", "enrolled"),
                )),
            )),
        );
        let diags = infer_formula(&mut f, &[("self".into(), Sort::State)], &decl(), false, "invariant");
        assert!(diags.is_empty(), "{diags:?}");
        let Formula::Quant(_, b, _) = &f else { unreachable!() };
        assert_eq!(b.sort, Some(Sort::Int));

        let mut g = Formula::Quant(
            Quantifier::Exists,
            Binder::untyped("v0"),
            Box::new(Formula::eq(
                Expr::state_field("self", "courses"),
                Expr::add(Expr::Int(1), Expr::var("v0")),
            )),
        );
        infer_formula(&mut g, &[("self".into(), Sort::State)], &decl(), false, "test");
        let Formula::Quant(_, b, _) = &g else { unreachable!() };
        assert_eq!(b.sort, Some(Sort::set(Sort::Int)));
    }

    #[test]
    fn unknown_names_and_misplaced_old_are_reported() {
        let mut f = Formula::Mem(Expr::Int(1), Expr::state_field("self", "teachers"));
        let d = infer_formula(&mut f, &[("self".into(), Sort::State)], &decl(), false, "invariant");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::UnknownField);

        let mut g = Formula::Mem(Expr::Int(1), Expr::field(Expr::Old(Box::new(Expr::var("self"))), "courses"));
        let d = infer_formula(&mut g, &[("self".into(), Sort::State)], &decl(), false, "requires #1 of f");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::IllegalOld);
    }

    #[test]
    fn nested_sets_are_rejected() {
        let mut spec = spec_with_body(Stmt::Skip);
        spec.state.fields.push(FieldDecl { name: "bad".into(), sort: Sort::set(Sort::set(Sort::Int)) });
        let diags = typecheck(&spec);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::UnsupportedSort);
    }
}
