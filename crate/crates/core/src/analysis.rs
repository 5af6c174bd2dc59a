//! Generation of the safety, pair (commutativity and stability) and
//! self-stability tasks.
//!
//! A task quantifies over argument vectors and states, assumes a formula over
//! them, runs a fixed sequence of calls, and asserts a list of goals over the
//! initial states and the snapshots taken after each call.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::ast::{CmpOp, Expr, Formula, OpDecl, Sort, Spec, StateDecl, StateEq};
use crate::rewrite::{desugar_old, fresh_name, rename_formula};
use crate::token::{Refinement, TokenSystem};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskKind {
    Safety { op: String },
    Pair { f: String, g: String },
    SelfStability { op: String },
    /// A single formula checked over free variables.
    Validity,
}

/// Which verdict a failed goal feeds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Blame {
    /// A precondition of `op` fails when `op` runs after `after`.
    Stability { op: String, after: String },
    /// The final states of the two interleavings differ.
    Equality,
    /// `op` breaks its own contract or the invariant.
    Safety { op: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProofGoal {
    pub label: String,
    pub formula: Formula,
    pub blame: Blame,
}

/// One operation call: `op args` on `state`, whose value afterwards is
/// named `snapshot`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Call {
    pub op: String,
    pub args: Vec<String>,
    pub state: String,
    pub snapshot: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisTask {
    pub kind: TaskKind,
    /// Quantified variables: arguments first, then states (sort `State`).
    pub vars: Vec<(String, Sort)>,
    pub assumption: Formula,
    pub program: Vec<Call>,
    pub goals: Vec<ProofGoal>,
}

impl AnalysisTask {
    pub fn name(&self) -> String {
        match &self.kind {
            TaskKind::Safety { op } => format!("{op}_safety"),
            TaskKind::Pair { f, g } => format!("{f}_{g}_commutativity"),
            TaskKind::SelfStability { op } => format!("{op}_stability"),
            TaskKind::Validity => "validity".to_string(),
        }
    }

    pub fn arg_vars(&self) -> impl Iterator<Item = &(String, Sort)> {
        self.vars.iter().filter(|(_, s)| *s != Sort::State)
    }

    pub fn state_vars(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().filter(|(_, s)| *s == Sort::State).map(|(n, _)| n.as_str())
    }
}

/// Result of generating a task that a token system may suppress.
#[derive(Debug, Clone, PartialEq)]
pub enum Generated {
    Task(AnalysisTask),
    Skipped { tokens: (String, String) },
}

/// Point-wise equality of every field: `=` on scalars, `==` on collections.
pub fn default_state_eq(decl: &StateDecl) -> StateEq {
    let (l, r) = ("s1", "s2");
    let body = Formula::conjoin(decl.fields.iter().map(|f| {
        let a = Expr::state_field(l, &f.name);
        let b = Expr::state_field(r, &f.name);
        if f.sort.is_collection() {
            Formula::SetEq(a, b)
        } else {
            Formula::cmp(CmpOp::Eq, a, b)
        }
    }));
    StateEq { name: "state_eq".into(), left: l.into(), right: r.into(), body }
}

fn state_eq_of(spec: &Spec) -> StateEq {
    spec.state_eq.clone().unwrap_or_else(|| default_state_eq(&spec.state))
}

fn instantiate_eq(eq: &StateEq, a: &str, b: &str) -> Formula {
    rename_formula(&eq.body, &[(eq.left.as_str(), a), (eq.right.as_str(), b)])
}

fn invariant_on(decl: &StateDecl, state: &str) -> Formula {
    rename_formula(&decl.invariant, &[(StateDecl::SELF, state)])
}

/// Names for one instance of an operation: renamed arguments.
struct Instance<'a> {
    op: &'a OpDecl,
    args: Vec<String>,
}

impl<'a> Instance<'a> {
    fn new(op: &'a OpDecl, suffix: &str, used: &mut BTreeSet<String>) -> Instance<'a> {
        let args = op
            .params
            .iter()
            .map(|p| {
                let want = format!("{}{suffix}", p.name);
                let name = if used.contains(&want) { fresh_name(&want, used) } else { want };
                used.insert(name.clone());
                name
            })
            .collect();
        Instance { op, args }
    }

    fn renaming<'b>(&'b self, state: &'b str) -> Vec<(&'b str, &'b str)> {
        let mut names: Vec<(&str, &str)> =
            self.op.params.iter().map(|p| p.name.as_str()).zip(self.args.iter().map(String::as_str)).collect();
        names.push((self.op.state_param.as_str(), state));
        names
    }

    fn arg(&self, param: &str) -> &str {
        let i = self.op.params.iter().position(|p| p.name == param).expect("known parameter");
        &self.args[i]
    }

    /// The `i`-th requires clause with this instance's arguments on `state`.
    fn pre(&self, state: &str) -> Vec<Formula> {
        self.op.requires.iter().map(|r| rename_formula(r, &self.renaming(state))).collect()
    }

    /// The ensures clauses for a call from `pre` to `post`.
    fn post(&self, pre: &str, post: &str) -> Vec<Formula> {
        let tmp = self.op.state_param.as_str();
        let params: Vec<(&str, &str)> = self.renaming(tmp).into_iter().filter(|(a, _)| *a != tmp).collect();
        self.op
            .ensures
            .iter()
            .map(|e| desugar_old(&rename_formula(e, &params), tmp, pre, post))
            .collect()
    }

    fn vars(&self) -> impl Iterator<Item = (String, Sort)> + '_ {
        self.args.iter().cloned().zip(self.op.params.iter().map(|p| p.sort.clone()))
    }

    fn call(&self, state: &str, snapshot: &str) -> Call {
        Call { op: self.op.name.clone(), args: self.args.clone(), state: state.into(), snapshot: snapshot.into() }
    }
}

/// Picks a name for each of `wanted`, avoiding `used`, and records it.
fn pick(wanted: &str, used: &mut BTreeSet<String>) -> String {
    let name = if used.contains(wanted) { fresh_name(wanted, used) } else { wanted.to_string() };
    used.insert(name.clone());
    name
}

fn reserve_states(n_states: usize, used: &mut BTreeSet<String>, calls_per_state: usize) -> Vec<(String, Vec<String>)> {
    let bases: Vec<String> = (1..=n_states).map(|k| format!("state{k}")).collect();
    bases
        .iter()
        .map(|b| {
            let s = pick(b, used);
            let snaps = (1..=calls_per_state).map(|k| pick(&format!("{s}_{k}"), used)).collect();
            (s, snaps)
        })
        .collect()
}

fn numbered(kind: &str, clauses: Vec<Formula>) -> impl Iterator<Item = (String, Formula)> {
    let kind = kind.to_string();
    clauses.into_iter().enumerate().map(move |(i, f)| (format!("{kind}#{}", i + 1), f))
}

/// Contract-conformance goals for `call`: the ensures clauses, guarded by
/// the call's preconditions.
fn conformance_goals(inst: &Instance, before: &str, after: &str) -> Vec<ProofGoal> {
    let pre = Formula::conjoin(inst.pre(before));
    numbered("post", inst.post(before, after))
        .map(|(tag, f)| ProofGoal {
            label: format!("{tag} of {} on {after}", inst.op.name),
            formula: Formula::implies(pre.clone(), f),
            blame: Blame::Safety { op: inst.op.name.clone() },
        })
        .collect()
}

/// Safety of `op`: from a state satisfying the invariant and the
/// preconditions, the body establishes every ensures clause and the
/// invariant.
pub fn gen_safety(spec: &Spec, op: &OpDecl) -> AnalysisTask {
    let mut used = BTreeSet::new();
    let inst = Instance::new(op, "", &mut used);
    let state = pick("state", &mut used);
    let after = pick(&format!("{state}_1"), &mut used);
    let assumption = Formula::conjoin([invariant_on(&spec.state, &state)].into_iter().chain(inst.pre(&state)));
    let mut goals: Vec<ProofGoal> = numbered("post", inst.post(&state, &after))
        .map(|(tag, f)| ProofGoal { label: format!("{tag} of {}", op.name), formula: f, blame: Blame::Safety { op: op.name.clone() } })
        .collect();
    goals.push(ProofGoal {
        label: format!("invariant after {}", op.name),
        formula: invariant_on(&spec.state, &after),
        blame: Blame::Safety { op: op.name.clone() },
    });
    let mut vars: Vec<(String, Sort)> = inst.vars().collect();
    vars.push((state.clone(), Sort::State));
    AnalysisTask {
        kind: TaskKind::Safety { op: op.name.clone() },
        vars,
        assumption,
        program: vec![inst.call(&state, &after)],
        goals,
    }
}

fn disequalities(pairs: &[(String, String)], a: &Instance, b: &Instance) -> Vec<Formula> {
    pairs.iter().map(|(x, y)| Formula::ne(Expr::var(a.arg(x)), Expr::var(b.arg(y)))).collect()
}

/// Commutativity and stability of `f` and `g`, `f != g`.
///
/// `state1` runs `g` then `f`, `state2` runs `f` then `g`; the goals are the
/// preconditions of each second call, the equality of the final states, and
/// the contract of every call.
pub fn gen_pair(spec: &Spec, f: &OpDecl, g: &OpDecl, tokens: Option<&TokenSystem>) -> Generated {
    let diseq = match tokens.map(|t| t.refine(spec, &f.name, &g.name)) {
        Some(Refinement::Skip { tokens }) => return Generated::Skipped { tokens },
        Some(Refinement::Run { disequalities }) => disequalities,
        None => Vec::new(),
    };
    let mut used = BTreeSet::new();
    let fi = Instance::new(f, "1", &mut used);
    let gi = Instance::new(g, "2", &mut used);
    let states = reserve_states(2, &mut used, 2);
    let (s1, snaps1) = &states[0];
    let (s2, snaps2) = &states[1];
    let eq = state_eq_of(spec);

    let assumption = Formula::conjoin(
        [invariant_on(&spec.state, s1), invariant_on(&spec.state, s2)]
            .into_iter()
            .chain(fi.pre(s1))
            .chain(gi.pre(s2))
            .chain([instantiate_eq(&eq, s1, s2)])
            .chain(disequalities(&diseq, &fi, &gi)),
    );
    let program = vec![
        gi.call(s1, &snaps1[0]),
        fi.call(&snaps1[0], &snaps1[1]),
        fi.call(s2, &snaps2[0]),
        gi.call(&snaps2[0], &snaps2[1]),
    ];

    let mut goals = Vec::new();
    for (first, second, at) in [(&gi, &fi, &snaps1[0]), (&fi, &gi, &snaps2[0])] {
        goals.extend(numbered("pre", second.pre(at)).map(|(tag, formula)| ProofGoal {
            label: format!("{tag} of {} after {}", second.op.name, first.op.name),
            formula,
            blame: Blame::Stability { op: second.op.name.clone(), after: first.op.name.clone() },
        }));
    }
    goals.push(ProofGoal {
        label: "state equality".into(),
        formula: instantiate_eq(&eq, &snaps1[1], &snaps2[1]),
        blame: Blame::Equality,
    });
    goals.extend(conformance_goals(&gi, s1, &snaps1[0]));
    goals.extend(conformance_goals(&fi, &snaps1[0], &snaps1[1]));
    goals.extend(conformance_goals(&fi, s2, &snaps2[0]));
    goals.extend(conformance_goals(&gi, &snaps2[0], &snaps2[1]));

    let vars = fi.vars().chain(gi.vars()).chain([(s1.clone(), Sort::State), (s2.clone(), Sort::State)]).collect();
    Generated::Task(AnalysisTask {
        kind: TaskKind::Pair { f: f.name.clone(), g: g.name.clone() },
        vars,
        assumption,
        program,
        goals,
    })
}

/// Stability of `f` against itself: `f x1` then `f x2` on `state1`, where
/// both argument vectors satisfy the preconditions on equal states.
pub fn gen_self(spec: &Spec, f: &OpDecl, tokens: Option<&TokenSystem>) -> Generated {
    let diseq = match tokens.map(|t| t.refine(spec, &f.name, &f.name)) {
        Some(Refinement::Skip { tokens }) => return Generated::Skipped { tokens },
        Some(Refinement::Run { disequalities }) => disequalities,
        None => Vec::new(),
    };
    let mut used = BTreeSet::new();
    let a = Instance::new(f, "1", &mut used);
    let b = Instance::new(f, "2", &mut used);
    let states = reserve_states(2, &mut used, 2);
    let (s1, snaps1) = &states[0];
    let (s2, _) = &states[1];
    let eq = state_eq_of(spec);

    let assumption = Formula::conjoin(
        [invariant_on(&spec.state, s1), invariant_on(&spec.state, s2)]
            .into_iter()
            .chain(a.pre(s1))
            .chain(b.pre(s2))
            .chain([instantiate_eq(&eq, s1, s2)])
            .chain(disequalities(&diseq, &a, &b)),
    );
    let program = vec![a.call(s1, &snaps1[0]), b.call(&snaps1[0], &snaps1[1])];
    let goals = numbered("pre", b.pre(&snaps1[0]))
        .map(|(tag, formula)| ProofGoal {
            label: format!("{tag} of {} after {}", f.name, f.name),
            formula,
            blame: Blame::Stability { op: f.name.clone(), after: f.name.clone() },
        })
        .collect();
    let vars = a.vars().chain(b.vars()).chain([(s1.clone(), Sort::State), (s2.clone(), Sort::State)]).collect();
    Generated::Task(AnalysisTask { kind: TaskKind::SelfStability { op: f.name.clone() }, vars, assumption, program, goals })
}

/// Every task for `spec`, in report order: safety per operation, pairs in
/// name order, then self-stability per operation.
pub struct TaskSet {
    pub safety: Vec<AnalysisTask>,
    pub pairs: Vec<((String, String), Generated)>,
    pub selfs: Vec<(String, Generated)>,
}

pub fn gen_all(spec: &Spec, tokens: Option<&TokenSystem>) -> TaskSet {
    let mut ops: Vec<&OpDecl> = spec.ops.iter().collect();
    ops.sort_by(|a, b| a.name.cmp(&b.name));
    let safety = ops.iter().map(|op| gen_safety(spec, op)).collect();
    let mut pairs = Vec::new();
    for (i, f) in ops.iter().enumerate() {
        for g in &ops[i + 1..] {
            pairs.push(((f.name.clone(), g.name.clone()), gen_pair(spec, f, g, tokens)));
        }
    }
    let selfs = ops.iter().map(|op| (op.name.clone(), gen_self(spec, op, tokens))).collect();
    TaskSet { safety, pairs, selfs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::FieldDecl;

    #[test]
    fn default_equality_is_pointwise() {
        let decl = StateDecl {
            type_name: "t".into(),
            fields: vec![
                FieldDecl { name: "n".into(), sort: Sort::Int },
                FieldDecl { name: "xs".into(), sort: Sort::set(Sort::Int) },
            ],
            invariant: Formula::True,
        };
        let eq = default_state_eq(&decl);
        assert_eq!(eq.body.to_string(), "s1.n = s2.n && s1.xs == s2.xs");
        let empty = StateDecl { type_name: "t".into(), fields: vec![], invariant: Formula::True };
        assert_eq!(default_state_eq(&empty).body, Formula::True);
    }
}
