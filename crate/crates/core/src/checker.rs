//! Bounded exhaustive checking of analysis tasks.
//!
//! Arguments and state fields are enumerated lexicographically (earlier
//! slots vary slowest; sets in binary counting order). Each assumption
//! conjunct is evaluated as soon as every slot it reads is assigned, and
//! membership constraints on a set slot restrict the subsets enumerated for
//! it. Each goal is evaluated at the deepest slot it depends on, tracing
//! dependencies through the operation bodies.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use serde::Serialize;

use crate::analysis::{AnalysisTask, Blame, Call, ProofGoal, TaskKind};
use crate::ast::{Binder, CmpOp, Expr, Formula, Quantifier, Sort, Spec, StateDecl, Stmt};
use crate::eval::{subsets_in_order, DomainBounds, Env, EvalError, Evaluator};
use crate::rewrite::rename_formula;
use crate::value::{Elem, FiniteSet, RwSetValue, StateValue, Value};

/// A falsifying assignment for one goal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub goal: String,
    /// Arguments and initial states.
    pub bindings: Vec<(String, Value)>,
    pub trace: Vec<TraceStep>,
}

/// One executed call and the state it produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub call: String,
    pub snapshot: String,
    pub state: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoalResult {
    pub label: String,
    pub blame: Blame,
    pub counterexample: Option<Counterexample>,
    /// Position of the counterexample in enumeration order.
    #[serde(skip)]
    pub model_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskResult {
    pub task: String,
    /// Assignments satisfying the assumption.
    pub models: u64,
    pub goals: Vec<GoalResult>,
}

impl TaskResult {
    pub fn passed(&self) -> bool {
        self.goals.iter().all(|g| g.counterexample.is_none())
    }

    pub fn vacuous(&self) -> bool {
        self.models == 0
    }

    /// The earliest falsifying assignment in enumeration order, ties broken
    /// by goal order.
    pub fn first_counterexample(&self) -> Option<&Counterexample> {
        self.goals
            .iter()
            .filter(|g| g.counterexample.is_some())
            .min_by_key(|g| g.model_index)
            .and_then(|g| g.counterexample.as_ref())
    }
}

#[derive(Debug, Clone)]
enum Slot {
    Arg { name: String, sort: Sort },
    Field { state: String, index: usize, sort: Sort },
}

impl Slot {
    fn sort(&self) -> &Sort {
        match self {
            Slot::Arg { sort, .. } | Slot::Field { sort, .. } => sort,
        }
    }
}

/// A constraint on the value of a set slot extracted from a conjunct.
#[derive(Debug, Clone)]
enum Filter {
    /// `mem e S`
    Require(Expr),
    /// `forall xs. mem e S -> unless`, with `not (mem e S)` as the case of no
    /// binders and `unless = false`.
    Forbid { binders: Vec<Binder>, elem: Expr, unless: Formula },
    /// `in_set e S`
    RwRequire(Expr),
}

/// Dependencies of state variables (per field) and scalar variables on slots.
#[derive(Debug, Clone, Default)]
struct Deps {
    vars: HashMap<String, BTreeSet<usize>>,
    states: HashMap<String, Vec<BTreeSet<usize>>>,
}

impl Deps {
    fn expr(&self, e: &Expr, decl: &StateDecl, bound: &mut Vec<String>, out: &mut BTreeSet<usize>) {
        match e {
            Expr::Var(x) if bound.contains(x) => {}
            Expr::Var(x) => {
                if let Some(d) = self.vars.get(x) {
                    out.extend(d);
                } else if let Some(fields) = self.states.get(x) {
                    fields.iter().for_each(|d| out.extend(d));
                }
            }
            Expr::Field(base, f) => match base.as_ref() {
                Expr::Var(x) if !bound.contains(x) && self.states.contains_key(x) => {
                    match decl.field_index(f) {
                        Some(i) => out.extend(&self.states[x][i]),
                        None => self.states[x].iter().for_each(|d| out.extend(d)),
                    }
                }
                other => self.expr(other, decl, bound, out),
            },
            _ => e.children().into_iter().for_each(|c| self.expr(c, decl, bound, out)),
        }
    }

    fn formula(&self, f: &Formula, decl: &StateDecl, bound: &mut Vec<String>, out: &mut BTreeSet<usize>) {
        if let Formula::Quant(_, b, body) = f {
            bound.push(b.name.clone());
            self.formula(body, decl, bound, out);
            bound.pop();
            return;
        }
        for e in f.exprs() {
            self.expr(e, decl, bound, out);
        }
        for g in f.subformulas() {
            self.formula(g, decl, bound, out);
        }
    }

    fn of(&self, f: &Formula, decl: &StateDecl) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.formula(f, decl, &mut Vec::new(), &mut out);
        out
    }

    fn of_expr(&self, e: &Expr, decl: &StateDecl) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.expr(e, decl, &mut Vec::new(), &mut out);
        out
    }
}

fn level(deps: &BTreeSet<usize>) -> usize {
    deps.iter().next_back().map_or(0, |m| m + 1)
}

/// Whether `a` and `b` are `x.f` and `y.f` for the same field.
fn same_field_of<'e>(a: &'e Expr, b: &'e Expr) -> Option<(&'e str, &'e str, &'e str)> {
    match (a, b) {
        (Expr::Field(x, f), Expr::Field(y, g)) if f == g => match (x.as_ref(), y.as_ref()) {
            (Expr::Var(x), Expr::Var(y)) => Some((x, y, f)),
            _ => None,
        },
        _ => None,
    }
}

/// States `b` whose every field is asserted equal to the same field of an
/// earlier state `a`, as `(b, a)`.
fn find_aliases(task: &AnalysisTask, decl: &StateDecl) -> Vec<(String, String)> {
    let states: Vec<&str> = task.state_vars().collect();
    let mut equal: BTreeSet<(String, String, String)> = BTreeSet::new();
    for c in task.assumption.conjuncts() {
        if let Formula::SetEq(a, b) | Formula::Cmp(CmpOp::Eq, a, b) = c {
            if let Some((x, y, f)) = same_field_of(a, b) {
                equal.insert((x.into(), y.into(), f.into()));
                equal.insert((y.into(), x.into(), f.into()));
            }
        }
    }
    let mut aliases: Vec<(String, String)> = Vec::new();
    for (j, b) in states.iter().enumerate() {
        for a in &states[..j] {
            if aliases.iter().any(|(x, _)| x == a) {
                continue;
            }
            let all = decl.fields.iter().all(|f| equal.contains(&(a.to_string(), b.to_string(), f.name.clone())));
            if all {
                aliases.push((b.to_string(), a.to_string()));
                break;
            }
        }
    }
    aliases
}

fn rename_call(c: &Call, from: &str, to: &str) -> Call {
    let mut c = c.clone();
    if c.state == from {
        c.state = to.into();
    }
    c
}

fn is_slot_field(e: &Expr, state: &str, field: &str) -> bool {
    matches!(e, Expr::Field(b, f) if f == field && matches!(b.as_ref(), Expr::Var(s) if s == state))
}

/// A task with aliases resolved, slots laid out and work scheduled by level.
struct Plan<'s> {
    spec: &'s Spec,
    task_name: String,
    vars: Vec<(String, Sort)>,
    aliases: Vec<(String, String)>,
    program: Vec<Call>,
    goals: Vec<ProofGoal>,
    slots: Vec<Slot>,
    /// Conjuncts to evaluate once slot `k - 1` is assigned (level 0: none).
    conjuncts: Vec<Vec<Formula>>,
    filters: Vec<Vec<Filter>>,
    goal_levels: Vec<Vec<usize>>,
}

impl<'s> Plan<'s> {
    fn new(spec: &'s Spec, task: &AnalysisTask) -> Plan<'s> {
        let decl = &spec.state;
        let aliases = find_aliases(task, decl);
        let mut assumption = task.assumption.clone();
        let mut program = task.program.clone();
        let mut goals = task.goals.clone();
        for (from, to) in &aliases {
            let names = [(from.as_str(), to.as_str())];
            assumption = rename_formula(&assumption, &names);
            program = program.iter().map(|c| rename_call(c, from, to)).collect();
            for g in &mut goals {
                g.formula = rename_formula(&g.formula, &names);
            }
        }
        let mut conj: Vec<Formula> = Vec::new();
        for c in assumption.conjuncts() {
            let trivial = match c {
                Formula::True => true,
                Formula::SetEq(a, b) | Formula::Cmp(CmpOp::Eq, a, b) => a == b,
                _ => false,
            };
            if !trivial && !conj.contains(c) {
                conj.push(c.clone());
            }
        }

        let mut slots = Vec::new();
        let mut deps = Deps::default();
        for (name, sort) in task.vars.iter().filter(|(n, _)| !aliases.iter().any(|(a, _)| a == n)) {
            if *sort == Sort::State {
                let mut per_field = Vec::new();
                for (index, f) in decl.fields.iter().enumerate() {
                    per_field.push(BTreeSet::from([slots.len()]));
                    slots.push(Slot::Field { state: name.clone(), index, sort: f.sort.clone() });
                }
                deps.states.insert(name.clone(), per_field);
            } else {
                deps.vars.insert(name.clone(), BTreeSet::from([slots.len()]));
                slots.push(Slot::Arg { name: name.clone(), sort: sort.clone() });
            }
        }

        let n = slots.len();
        let mut conjuncts = vec![Vec::new(); n + 1];
        let mut filters = vec![Vec::new(); n];
        for c in conj {
            let d = deps.of(&c, decl);
            let lvl = level(&d);
            if lvl > 0 {
                if let Some(f) = Self::as_filter(&c, &slots[lvl - 1], &deps, decl) {
                    filters[lvl - 1].push(f);
                    continue;
                }
            }
            conjuncts[lvl].push(c);
        }

        for call in &program {
            let op = spec.op(&call.op).expect("task calls a declared operation");
            let mut local = deps.states[&call.state].clone();
            let mut body = Deps::default();
            for (p, a) in op.params.iter().zip(&call.args) {
                body.vars.insert(p.name.clone(), deps.vars.get(a).cloned().unwrap_or_default());
            }
            for (_, field, value) in op.body.assignments() {
                body.states.insert(op.state_param.clone(), local.clone());
                let d = body.of_expr(value, decl);
                if let Some(i) = decl.field_index(field) {
                    local[i] = d;
                }
            }
            deps.states.insert(call.snapshot.clone(), local);
        }
        let mut goal_levels = vec![Vec::new(); n + 1];
        for (i, g) in goals.iter().enumerate() {
            goal_levels[level(&deps.of(&g.formula, decl))].push(i);
        }

        let vars = task.vars.clone();
        Plan { spec, task_name: task.name(), vars, aliases, program, goals, slots, conjuncts, filters, goal_levels }
    }

    /// Recognizes conjuncts that only constrain which elements the set slot
    /// may contain.
    fn as_filter(c: &Formula, slot: &Slot, deps: &Deps, decl: &StateDecl) -> Option<Filter> {
        let Slot::Field { state, index, sort } = slot else { return None };
        let field = &decl.fields[*index].name;
        let target = |e: &Expr| is_slot_field(e, state, field);
        let outside = |e: &Expr| !deps.of_expr(e, decl).contains(&Self::slot_index_hint(deps, state, *index));
        match (sort, c) {
            (Sort::Set(_), Formula::Mem(e, s)) if target(s) && outside(e) => Some(Filter::Require(e.clone())),
            (Sort::RwSet(_), Formula::InSet(e, s)) if target(s) && outside(e) => Some(Filter::RwRequire(e.clone())),
            (Sort::Set(_), _) => {
                let mut binders = Vec::new();
                let mut body = c;
                while let Formula::Quant(Quantifier::Forall, b, inner) = body {
                    let finite = matches!(b.sort, Some(Sort::Int | Sort::Bool | Sort::Pair(..)));
                    if !finite {
                        return None;
                    }
                    binders.push(b.clone());
                    body = inner;
                }
                let (e, s, unless) = match body {
                    Formula::Not(m) => match m.as_ref() {
                        Formula::Mem(e, s) => (e, s, Formula::False),
                        _ => return None,
                    },
                    Formula::Implies(m, r) => match m.as_ref() {
                        Formula::Mem(e, s) => (e, s, (**r).clone()),
                        _ => return None,
                    },
                    _ => return None,
                };
                let mut bound: Vec<String> = binders.iter().map(|b| b.name.clone()).collect();
                let mut d = BTreeSet::new();
                deps.expr(e, decl, &mut bound, &mut d);
                deps.formula(&unless, decl, &mut bound, &mut d);
                let own = Self::slot_index_hint(deps, state, *index);
                (target(s) && !d.contains(&own)).then(|| Filter::Forbid { binders, elem: e.clone(), unless })
            }
            _ => None,
        }
    }

    fn slot_index_hint(deps: &Deps, state: &str, index: usize) -> usize {
        *deps.states[state][index].iter().next().expect("field slot")
    }
}

/// The enumeration itself.
struct Search<'p, 's> {
    plan: &'p Plan<'s>,
    ev: Evaluator<'s>,
    env: Env,
    models: u64,
    /// Goals found false at each level on the current path.
    failing: Vec<Vec<usize>>,
    results: Vec<Option<(u64, Counterexample)>>,
    frames: Vec<Frame<'s>>,
}

/// A reusable environment for one call of the program, with the positions
/// of its inputs and output in the search environment.
struct Frame<'s> {
    body: &'s Stmt,
    env: Env,
    args: Vec<usize>,
    state: usize,
    snapshot: usize,
}

impl<'p, 's> Search<'p, 's> {
    fn new(plan: &'p Plan<'s>, bounds: DomainBounds) -> Result<Search<'p, 's>, EvalError> {
        let decl = &plan.spec.state;
        let ev = Evaluator::new(decl, bounds);
        let first = |sort: &Sort, name: &str| -> Result<Value, EvalError> {
            let dom = ev.domain(sort).map_err(|reason| EvalError::Ungroundable { binder: name.into(), reason })?;
            Ok(dom[0].clone())
        };
        let mut placeholder = Vec::new();
        for f in &decl.fields {
            placeholder.push(first(&f.sort, &f.name)?);
        }
        let placeholder = Value::State(StateValue(placeholder));
        let mut env = Env::new();
        for (name, sort) in &plan.vars {
            if *sort == Sort::State {
                env.push(name.clone(), placeholder.clone());
            } else {
                env.push(name.clone(), first(sort, name)?);
            }
        }
        for c in &plan.program {
            env.push(c.snapshot.clone(), placeholder.clone());
        }
        let index = |name: &str| env.iter().position(|(n, _)| n == name).ok_or_else(|| EvalError::Unbound(name.into()));
        let mut frames = Vec::new();
        for c in &plan.program {
            let op = plan.spec.op(&c.op).ok_or_else(|| EvalError::Unbound(c.op.clone()))?;
            let mut call_env = Env::new();
            let mut args = Vec::new();
            for (p, a) in op.params.iter().zip(&c.args) {
                call_env.push(p.name.clone(), Value::Int(0));
                args.push(index(a)?);
            }
            call_env.push(op.state_param.clone(), Value::Int(0));
            frames.push(Frame { body: &op.body, env: call_env, args, state: index(&c.state)?, snapshot: index(&c.snapshot)? });
        }
        let n = plan.slots.len();
        let failing = vec![Vec::new(); n + 1];
        Ok(Search { plan, ev, env, models: 0, failing, results: vec![None; plan.goals.len()], frames })
    }

    fn set_slot(&mut self, k: usize, v: Value) {
        match &self.plan.slots[k] {
            Slot::Arg { name, .. } => self.env.set(name, v),
            Slot::Field { state, index, .. } => match self.env.get_mut(state) {
                Some(Value::State(s)) => s.0[*index] = v,
                _ => unreachable!("state slot bound to a state"),
            },
        }
    }

    fn values(&self, k: usize) -> Result<Rc<Vec<Value>>, EvalError> {
        let slot = &self.plan.slots[k];
        let filters = &self.plan.filters[k];
        let ungroundable = |reason: String| {
            let binder = match slot {
                Slot::Arg { name, .. } => name.clone(),
                Slot::Field { state, index, .. } => format!("{state}.{}", self.plan.spec.state.fields[*index].name),
            };
            EvalError::Ungroundable { binder, reason }
        };
        if filters.is_empty() {
            return self.ev.domain(slot.sort()).map_err(ungroundable);
        }
        let elem_sort = match slot.sort() {
            Sort::Set(e) | Sort::RwSet(e) => e.as_ref(),
            _ => unreachable!("filters only on collections"),
        };
        let elems = self.ev.elements(elem_sort).map_err(ungroundable)?;
        let mut required = FiniteSet::new();
        let mut forbidden = FiniteSet::new();
        let mut env = self.env.clone();
        for f in filters {
            match f {
                Filter::Require(e) | Filter::RwRequire(e) => required.insert(self.elem(e, &env)?),
                Filter::Forbid { binders, elem, unless } => self.forbid(binders, elem, unless, &mut env, &mut forbidden)?,
            }
        }
        if !required.all(|e| elems.contains(&e)) || required.elems().iter().any(|e| forbidden.contains(e)) {
            return Ok(Rc::new(Vec::new()));
        }
        let free = |extra: &FiniteSet| -> Vec<Elem> {
            elems.iter().copied().filter(|e| !required.contains(e) && !extra.contains(e)).collect()
        };
        Ok(Rc::new(match slot.sort() {
            Sort::Set(_) => subsets_in_order(&free(&forbidden), &required).into_iter().map(Value::Set).collect(),
            _ => {
                let adds = subsets_in_order(&free(&FiniteSet::new()), &required);
                let removes = subsets_in_order(&elems.iter().copied().filter(|e| !required.contains(e)).collect::<Vec<_>>(), &FiniteSet::new());
                let mut out = Vec::with_capacity(adds.len() * removes.len());
                for a in &adds {
                    for r in &removes {
                        out.push(Value::RwSet(RwSetValue { adds: a.clone(), removes: r.clone() }));
                    }
                }
                out
            }
        }))
    }

    fn elem(&self, e: &Expr, env: &Env) -> Result<Elem, EvalError> {
        let v = self.ev.eval_expr(e, env)?;
        v.to_elem().ok_or_else(|| EvalError::Sort(format!("{v} is not a set element")))
    }

    fn forbid(&self, binders: &[Binder], elem: &Expr, unless: &Formula, env: &mut Env, out: &mut FiniteSet) -> Result<(), EvalError> {
        let Some((b, rest)) = binders.split_first() else {
            if !self.ev.eval_formula(unless, env)? {
                out.insert(self.elem(elem, env)?);
            }
            return Ok(());
        };
        let sort = b.sort.as_ref().ok_or_else(|| EvalError::UntypedBinder(b.name.clone()))?;
        let dom = self.ev.domain(sort).map_err(|reason| EvalError::Ungroundable { binder: b.name.clone(), reason })?;
        for v in dom.iter() {
            env.push(b.name.clone(), v.clone());
            let r = self.forbid(rest, elem, unless, env, out);
            env.pop();
            r?;
        }
        Ok(())
    }

    fn run_program(&mut self) -> Result<(), EvalError> {
        for f in &mut self.frames {
            for (j, a) in f.args.iter().enumerate() {
                f.env.set_at(j, self.env.get_at(*a).clone());
            }
            let last = f.args.len();
            f.env.set_at(last, self.env.get_at(f.state).clone());
            self.ev.exec_in_place(f.body, &mut f.env)?;
            self.env.set_at(f.snapshot, f.env.take_at(last));
        }
        Ok(())
    }

    /// Evaluates the conjuncts and goals of `lvl`; false when the partial
    /// assignment already violates the assumption.
    fn visit(&mut self, lvl: usize) -> Result<bool, EvalError> {
        for c in &self.plan.conjuncts[lvl] {
            if !self.ev.eval_formula(c, &mut self.env)? {
                return Ok(false);
            }
        }
        self.failing[lvl].clear();
        let plan = self.plan;
        let mut ran = false;
        for &g in &plan.goal_levels[lvl] {
            if self.results[g].is_some() {
                continue;
            }
            if !ran {
                self.run_program()?;
                ran = true;
            }
            if !self.ev.eval_formula(&plan.goals[g].formula, &mut self.env)? {
                self.failing[lvl].push(g);
            }
        }
        Ok(true)
    }

    fn dfs(&mut self, k: usize) -> Result<(), EvalError> {
        if k == self.plan.slots.len() {
            return self.on_model();
        }
        for v in self.values(k)?.iter() {
            let v = v.clone();
            self.set_slot(k, v);
            if self.visit(k + 1)? {
                self.dfs(k + 1)?;
            }
        }
        self.failing[k + 1].clear();
        Ok(())
    }

    fn on_model(&mut self) -> Result<(), EvalError> {
        self.models += 1;
        let failing: Vec<usize> = self.failing.iter().flatten().copied().filter(|g| self.results[*g].is_none()).collect();
        if failing.is_empty() {
            return Ok(());
        }
        self.run_program()?;
        let (bindings, trace) = self.snapshot();
        for g in failing {
            let goal = self.plan.goals[g].label.clone();
            let cex = Counterexample { goal, bindings: bindings.clone(), trace: trace.clone() };
            self.results[g] = Some((self.models - 1, cex));
        }
        Ok(())
    }

    fn snapshot(&self) -> (Vec<(String, Value)>, Vec<TraceStep>) {
        let value = |n: &str| {
            let n = self.plan.aliases.iter().find(|(from, _)| from == n).map_or(n, |(_, to)| to.as_str());
            self.env.get(n).cloned().expect("bound")
        };
        let bindings = self.plan.vars.iter().map(|(n, _)| (n.clone(), value(n))).collect();
        let trace = self
            .plan
            .program
            .iter()
            .map(|c| TraceStep {
                call: describe_call(self.plan.spec, c, &self.env),
                snapshot: c.snapshot.clone(),
                state: self.env.get(&c.snapshot).cloned().expect("bound"),
            })
            .collect();
        (bindings, trace)
    }
}

fn describe_call(spec: &Spec, c: &Call, env: &Env) -> String {
    let op = spec.op(&c.op).expect("declared");
    let args: Vec<String> = op
        .params
        .iter()
        .zip(&c.args)
        .map(|(p, a)| format!("{}={}", p.name, env.get(a).map_or_else(|| "?".into(), Value::to_string)))
        .collect();
    format!("{}({}) on {}", c.op, args.join(", "), c.state)
}

fn exec_call(ev: &Evaluator, spec: &Spec, c: &Call, env: &Env) -> Result<StateValue, EvalError> {
    let op = spec.op(&c.op).ok_or_else(|| EvalError::Unbound(c.op.clone()))?;
    let before = match env.get(&c.state) {
        Some(Value::State(s)) => s,
        _ => return Err(EvalError::Unbound(c.state.clone())),
    };
    let mut call_env =
        Env::with(op.params.iter().zip(&c.args).map(|(p, a)| (p.name.clone(), env.get(a).cloned().unwrap_or(Value::Int(0)))));
    ev.exec_stmt(&op.body, &op.state_param, before, &mut call_env)
}

/// Checks every goal of `task` within `bounds`.
pub fn check_task(spec: &Spec, task: &AnalysisTask, bounds: DomainBounds) -> Result<TaskResult, EvalError> {
    let plan = Plan::new(spec, task);
    let mut search = Search::new(&plan, bounds)?;
    if search.visit(0)? {
        search.dfs(0)?;
    }
    let goals = plan
        .goals
        .iter()
        .zip(search.results)
        .map(|(g, r)| {
            let (model_index, counterexample) = match r {
                Some((i, c)) => (i, Some(c)),
                None => (u64::MAX, None),
            };
            GoalResult { label: g.label.clone(), blame: g.blame.clone(), counterexample, model_index }
        })
        .collect();
    let models = search.models;
    Ok(TaskResult { task: plan.task_name, models, goals })
}

/// Checks that `f` holds for every value of `vars` within bounds.
pub fn check_formula_valid(
    spec: &Spec,
    f: &Formula,
    vars: &[(String, Sort)],
    bounds: DomainBounds,
) -> Result<Option<Counterexample>, EvalError> {
    let task = AnalysisTask {
        kind: TaskKind::Validity,
        vars: vars.to_vec(),
        assumption: Formula::True,
        program: Vec::new(),
        goals: vec![ProofGoal { label: "formula".into(), formula: f.clone(), blame: Blame::Equality }],
    };
    Ok(check_task(spec, &task, bounds)?.goals.pop().and_then(|g| g.counterexample))
}

impl Counterexample {
    /// Re-runs the task under this assignment: the assumption holds, the
    /// trace is reproduced, and the goal is false.
    pub fn revalidate(&self, spec: &Spec, task: &AnalysisTask, bounds: DomainBounds) -> Result<bool, EvalError> {
        let ev = Evaluator::new(&spec.state, bounds);
        let mut env = Env::with(self.bindings.iter().cloned());
        if !ev.eval_formula(&task.assumption, &mut env)? {
            return Ok(false);
        }
        for (c, step) in task.program.iter().zip(&self.trace) {
            let after = Value::State(exec_call(&ev, spec, c, &env)?);
            if after != step.state {
                return Ok(false);
            }
            env.push(c.snapshot.clone(), after);
        }
        match task.goals.iter().find(|g| g.label == self.goal) {
            Some(g) => Ok(!ev.eval_formula(&g.formula, &mut env)?),
            None => Ok(false),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{gen_pair, gen_safety, Generated};
    use crate::parse_spec;

    const SPEC: &str = "type t [@state] = { mutable xs : fset int }\n\
        let add1 (a : int) (state : t) requires { a > 0 } ensures { state.xs = add a (old state).xs } = state.xs <- add a state.xs\n\
        let rem1 (b : int) (state : t) requires { mem b state.xs } = state.xs <- remove b state.xs";

    #[test]
    fn safety_of_add_passes_and_counts_models() {
        let spec = parse_spec(SPEC).unwrap();
        let task = gen_safety(&spec, spec.op("add1").unwrap());
        let r = check_task(&spec, &task, DomainBounds::new(0, 1).unwrap()).unwrap();
        assert!(r.passed());
        // a = 1, xs any of four subsets
        assert_eq!(r.models, 4);
    }

    #[test]
    fn add_and_remove_of_the_same_element_conflict() {
        let spec = parse_spec(SPEC).unwrap();
        let Generated::Task(task) = gen_pair(&spec, spec.op("add1").unwrap(), spec.op("rem1").unwrap(), None) else {
            panic!()
        };
        let bounds = DomainBounds::new(0, 1).unwrap();
        let r = check_task(&spec, &task, bounds).unwrap();
        assert!(!r.passed());
        let cex = r.first_counterexample().unwrap();
        assert!(cex.revalidate(&spec, &task, bounds).unwrap());
        let eq = r.goals.iter().find(|g| g.label == "state equality").unwrap();
        assert!(eq.counterexample.is_some());
    }

    #[test]
    fn false_assumption_passes_vacuously() {
        let spec = parse_spec(SPEC).unwrap();
        let mut task = gen_safety(&spec, spec.op("add1").unwrap());
        task.assumption = Formula::False;
        let r = check_task(&spec, &task, DomainBounds::default()).unwrap();
        assert!(r.passed() && r.vacuous());
    }
}
