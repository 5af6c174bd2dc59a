//! SMT-LIB 2 export of analysis tasks.
//!
//! Sets are arrays from elements to booleans, pairs and remove-wins sets are
//! datatypes, and the state record is a datatype with one accessor per
//! field. Each call of the program becomes a chain of definitions, one per
//! assignment. A script asserts the assumption and the negated goal, so
//! `unsat` means the goal is valid.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::process::{Command, Stdio};

use thiserror::Error;

use crate::analysis::{AnalysisTask, Call};
use crate::ast::{ArithOp, CmpOp, Expr, Formula, Quantifier, Sort, Spec, StateDecl};

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("cannot encode `{0}`: {1}")]
    Encode(String, String),
    #[error("solver command is empty")]
    NoSolver,
    #[error("cannot run solver: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtScript {
    pub task: String,
    pub goal: String,
    pub text: String,
}

impl SmtScript {
    /// `task__N.smt2`, with `N` the goal's position.
    pub fn file_name(&self, index: usize) -> String {
        format!("{}__{index}.smt2", sanitize(&self.task))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverAnswer {
    /// The negated goal is satisfiable; the model text follows.
    Sat(String),
    Unsat,
    Unknown(String),
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

/// DSL identifiers live under `u_`, field accessors under `f_`, and
/// intermediate states under `t_`; nothing else the encoder emits uses
/// those prefixes.
fn user(name: &str) -> String {
    format!("u_{}", sanitize(name))
}

fn field_accessor(name: &str) -> String {
    format!("f_{}", sanitize(name))
}

pub fn smt_sort(s: &Sort) -> String {
    match s {
        Sort::Int => "Int".into(),
        Sort::Bool => "Bool".into(),
        Sort::Pair(a, b) => format!("(Pair {} {})", smt_sort(a), smt_sort(b)),
        Sort::Set(e) => format!("(Array {} Bool)", smt_sort(e)),
        Sort::RwSet(e) => format!("(RwSet {})", smt_sort(e)),
        Sort::State => "State".into(),
    }
}

fn empty_array(elem: &Sort) -> String {
    format!("((as const (Array {} Bool)) false)", smt_sort(elem))
}

/// Variables in scope: DSL name to SMT term and sort.
#[derive(Clone)]
struct Scope<'d> {
    decl: &'d StateDecl,
    vars: HashMap<String, (String, Sort)>,
}

impl Scope<'_> {
    fn with(&self, name: &str, term: String, sort: Sort) -> Self {
        let mut s = self.clone();
        s.vars.insert(name.to_string(), (term, sort));
        s
    }

    fn sort_of(&self, e: &Expr) -> Option<Sort> {
        match e {
            Expr::Int(_) | Expr::Arith(..) => Some(Sort::Int),
            Expr::Bool(_) => Some(Sort::Bool),
            Expr::Var(x) => self.vars.get(x).map(|(_, s)| s.clone()),
            Expr::Field(base, f) => match self.sort_of(base)? {
                Sort::State => self.decl.field(f).map(|fd| fd.sort.clone()),
                Sort::RwSet(elem) => Some(Sort::Set(elem)),
                _ => None,
            },
            Expr::Old(x) => self.sort_of(x),
            Expr::Pair(a, b) => Some(Sort::pair(self.sort_of(a)?, self.sort_of(b)?)),
            Expr::Fst(p) | Expr::Snd(p) => match self.sort_of(p)? {
                Sort::Pair(a, b) => Some(if matches!(e, Expr::Fst(_)) { *a } else { *b }),
                _ => None,
            },
            Expr::Empty | Expr::RwEmpty => None,
            Expr::Add(x, s) | Expr::Remove(x, s) => self.sort_of(s).or_else(|| self.sort_of(x).map(Sort::set)),
            Expr::RwAdd(x, s) | Expr::RwRemove(x, s) => self.sort_of(s).or_else(|| self.sort_of(x).map(Sort::rw_set)),
        }
    }

    fn elem_sort(&self, x: &Expr, set: &Expr, want: Option<&Sort>) -> Option<Sort> {
        self.sort_of(x).or_else(|| match self.sort_of(set).or_else(|| want.cloned())? {
            Sort::Set(e) | Sort::RwSet(e) => Some(*e),
            _ => None,
        })
    }

    fn expr(&self, e: &Expr, want: Option<&Sort>) -> Result<String, SmtError> {
        let fail = |why: &str| SmtError::Encode(e.to_string(), why.to_string());
        Ok(match e {
            Expr::Int(v) if *v < 0 => format!("(- {})", v.unsigned_abs()),
            Expr::Int(v) => v.to_string(),
            Expr::Bool(b) => b.to_string(),
            Expr::Var(x) => self.vars.get(x).map(|(t, _)| t.clone()).ok_or_else(|| fail("unbound variable"))?,
            Expr::Field(base, f) => {
                let b = self.expr(base, None)?;
                match self.sort_of(base) {
                    Some(Sort::RwSet(_)) if f == "remove_wins_add" => format!("(rw_adds {b})"),
                    Some(Sort::RwSet(_)) if f == "remove_wins_removes" => format!("(rw_removes {b})"),
                    Some(Sort::State) => format!("({} {b})", field_accessor(f)),
                    _ => return Err(fail("unknown field")),
                }
            }
            Expr::Old(_) => return Err(fail("`old` must be resolved before encoding")),
            Expr::Pair(a, b) => {
                let (wa, wb) = match want {
                    Some(Sort::Pair(x, y)) => (Some(x.as_ref()), Some(y.as_ref())),
                    _ => (None, None),
                };
                format!("(pair {} {})", self.expr(a, wa)?, self.expr(b, wb)?)
            }
            Expr::Fst(p) => format!("(fst {})", self.expr(p, None)?),
            Expr::Snd(p) => format!("(snd {})", self.expr(p, None)?),
            Expr::Arith(op, a, b) => {
                let o = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                };
                format!("({o} {} {})", self.expr(a, Some(&Sort::Int))?, self.expr(b, Some(&Sort::Int))?)
            }
            Expr::Empty => match want {
                Some(Sort::Set(elem)) => empty_array(elem),
                _ => return Err(fail("cannot infer the element sort")),
            },
            Expr::RwEmpty => match want {
                Some(Sort::RwSet(elem)) => format!("(mk_rwset {} {})", empty_array(elem), empty_array(elem)),
                _ => return Err(fail("cannot infer the element sort")),
            },
            Expr::Add(x, s) | Expr::Remove(x, s) => {
                let elem = self.elem_sort(x, s, want).ok_or_else(|| fail("cannot infer the element sort"))?;
                let set = self.expr(s, Some(&Sort::set(elem.clone())))?;
                let member = matches!(e, Expr::Add(..));
                format!("(store {set} {} {member})", self.expr(x, Some(&elem))?)
            }
            Expr::RwAdd(x, s) | Expr::RwRemove(x, s) => {
                let elem = self.elem_sort(x, s, want).ok_or_else(|| fail("cannot infer the element sort"))?;
                let set = self.expr(s, Some(&Sort::rw_set(elem.clone())))?;
                let el = self.expr(x, Some(&elem))?;
                if matches!(e, Expr::RwAdd(..)) {
                    format!("(mk_rwset (store (rw_adds {set}) {el} true) (rw_removes {set}))")
                } else {
                    format!("(mk_rwset (rw_adds {set}) (store (rw_removes {set}) {el} true))")
                }
            }
        })
    }

    fn pair_of(&self, a: &Expr, b: &Expr) -> Result<(String, String), SmtError> {
        let sort = self.sort_of(a).or_else(|| self.sort_of(b));
        Ok((self.expr(a, sort.as_ref())?, self.expr(b, sort.as_ref())?))
    }

    fn formula(&self, f: &Formula) -> Result<String, SmtError> {
        Ok(match f {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Cmp(op, a, b) => {
                let (x, y) = self.pair_of(a, b)?;
                match op {
                    CmpOp::Eq => format!("(= {x} {y})"),
                    CmpOp::Ne => format!("(not (= {x} {y}))"),
                    CmpOp::Lt => format!("(< {x} {y})"),
                    CmpOp::Le => format!("(<= {x} {y})"),
                    CmpOp::Gt => format!("(> {x} {y})"),
                    CmpOp::Ge => format!("(>= {x} {y})"),
                }
            }
            Formula::SetEq(a, b) => {
                let (x, y) = self.pair_of(a, b)?;
                format!("(= {x} {y})")
            }
            Formula::Mem(x, s) => {
                let elem = self.elem_sort(x, s, None);
                let set = self.expr(s, elem.clone().map(Sort::set).as_ref())?;
                format!("(select {set} {})", self.expr(x, elem.as_ref())?)
            }
            Formula::InSet(x, s) => {
                let elem = self.elem_sort(x, s, None);
                let set = self.expr(s, elem.clone().map(Sort::rw_set).as_ref())?;
                let el = self.expr(x, elem.as_ref())?;
                format!("(and (select (rw_adds {set}) {el}) (not (select (rw_removes {set}) {el})))")
            }
            Formula::IsEmpty(s) => match self.sort_of(s) {
                Some(Sort::Set(elem)) => format!("(= {} {})", self.expr(s, None)?, empty_array(&elem)),
                // `is_empty empty`
                _ => "true".into(),
            },
            Formula::Atom(e) => self.expr(e, Some(&Sort::Bool))?,
            Formula::Not(g) => format!("(not {})", self.formula(g)?),
            Formula::And(a, b) => format!("(and {} {})", self.formula(a)?, self.formula(b)?),
            Formula::Or(a, b) => format!("(or {} {})", self.formula(a)?, self.formula(b)?),
            Formula::Implies(a, b) => format!("(=> {} {})", self.formula(a)?, self.formula(b)?),
            Formula::Iff(a, b) => format!("(= {} {})", self.formula(a)?, self.formula(b)?),
            Formula::Quant(q, b, body) => {
                let sort = b.sort.clone().ok_or_else(|| SmtError::Encode(f.to_string(), "untyped binder".into()))?;
                let name = user(&b.name);
                let inner = self.with(&b.name, name.clone(), sort.clone()).formula(body)?;
                let q = match q {
                    Quantifier::Forall => "forall",
                    Quantifier::Exists => "exists",
                };
                format!("({q} (({name} {})) {inner})", smt_sort(&sort))
            }
        })
    }
}

fn preamble(decl: &StateDecl, out: &mut String) {
    out.push_str("(set-logic ALL)\n(set-option :produce-models true)\n");
    out.push_str("(declare-datatypes ((Pair 2)) ((par (A B) ((pair (fst A) (snd B))))))\n");
    out.push_str("(declare-datatypes ((RwSet 1)) ((par (T) ((mk_rwset (rw_adds (Array T Bool)) (rw_removes (Array T Bool)))))))\n");
    let fields: String =
        decl.fields.iter().map(|f| format!(" ({} {})", field_accessor(&f.name), smt_sort(&f.sort))).collect();
    let _ = writeln!(out, "(declare-datatypes ((State 0)) (((mk_state{fields}))))");
}

/// Definitions computing `snapshot` from `state` by running the body.
fn encode_call(spec: &Spec, scope: &Scope, call: &Call, out: &mut String) -> Result<(), SmtError> {
    let op = spec.op(&call.op).ok_or_else(|| SmtError::Encode(call.op.clone(), "unknown operation".into()))?;
    let mut local = Scope { decl: scope.decl, vars: HashMap::new() };
    for (p, a) in op.params.iter().zip(&call.args) {
        let (term, _) = scope.vars.get(a).ok_or_else(|| SmtError::Encode(a.clone(), "unbound argument".into()))?;
        local.vars.insert(p.name.clone(), (term.clone(), p.sort.clone()));
    }
    let (mut current, _) =
        scope.vars.get(&call.state).cloned().ok_or_else(|| SmtError::Encode(call.state.clone(), "unbound state".into()))?;
    let steps = op.body.assignments();
    for (k, (state, field, value)) in steps.iter().enumerate() {
        local.vars.insert(state.to_string(), (current.clone(), Sort::State));
        let fd = spec.state.field(field).ok_or_else(|| SmtError::Encode(field.to_string(), "unknown field".into()))?;
        let v = local.expr(value, Some(&fd.sort))?;
        let args: Vec<String> = spec
            .state
            .fields
            .iter()
            .map(|f| if f.name == *field { v.clone() } else { format!("({} {current})", field_accessor(&f.name)) })
            .collect();
        let name = if k + 1 == steps.len() { user(&call.snapshot) } else { format!("t_{}_{k}", sanitize(&call.snapshot)) };
        let _ = writeln!(out, "(define-fun {name} () State (mk_state {}))", args.join(" "));
        current = name;
    }
    if steps.is_empty() {
        let _ = writeln!(out, "(define-fun {} () State {current})", user(&call.snapshot));
    }
    Ok(())
}

/// One script per goal of `task`.
pub fn emit(spec: &Spec, task: &AnalysisTask) -> Result<Vec<SmtScript>, SmtError> {
    let mut scope = Scope { decl: &spec.state, vars: HashMap::new() };
    let mut common = String::new();
    preamble(&spec.state, &mut common);
    for (name, sort) in &task.vars {
        let _ = writeln!(common, "(declare-const {} {})", user(name), smt_sort(sort));
        scope.vars.insert(name.clone(), (user(name), sort.clone()));
    }
    let _ = writeln!(common, "(assert {})", scope.formula(&task.assumption)?);
    for call in &task.program {
        encode_call(spec, &scope, call, &mut common)?;
        scope.vars.insert(call.snapshot.clone(), (user(&call.snapshot), Sort::State));
    }
    let name = task.name();
    task.goals
        .iter()
        .map(|g| {
            let mut text = format!("; {name}: {}\n", g.label);
            text.push_str(&common);
            let _ = writeln!(text, "(assert (not {}))", scope.formula(&g.formula)?);
            text.push_str("(check-sat)\n(get-model)\n");
            Ok(SmtScript { task: name.clone(), goal: g.label.clone(), text })
        })
        .collect()
}

/// Runs `command` (program and arguments, whitespace separated) with the
/// script on standard input.
pub fn run_solver(command: &str, script: &str) -> Result<SolverAnswer, SmtError> {
    let mut parts = command.split_whitespace();
    let program = parts.next().ok_or(SmtError::NoSolver)?;
    let mut child =
        Command::new(program).args(parts).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn()?;
    child.stdin.take().expect("piped").write_all(script.as_bytes())?;
    let output = child.wait_with_output()?;
    let stdout = String::from_utf8_lossy(&output.stdout);
    let mut lines = stdout.lines();
    Ok(match lines.next().map(str::trim) {
        Some("unsat") => SolverAnswer::Unsat,
        Some("sat") => SolverAnswer::Sat(lines.collect::<Vec<_>>().join("\n")),
        Some(other) => SolverAnswer::Unknown(other.to_string()),
        None => SolverAnswer::Unknown(String::from_utf8_lossy(&output.stderr).trim().to_string()),
    })
}

/// The solver command from `CISE_SOLVER`, or `z3 -in` when `z3` is on the
/// path. An empty `CISE_SOLVER` disables the solver.
pub fn configured_solver() -> Option<String> {
    if let Ok(cmd) = std::env::var("CISE_SOLVER") {
        return (!cmd.trim().is_empty()).then_some(cmd);
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).any(|dir| dir.join("z3").is_file()).then(|| "z3 -in".to_string())
}
