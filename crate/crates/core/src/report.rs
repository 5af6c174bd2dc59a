//! Running every task of a specification and assembling the verdicts.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::analysis::{gen_all, AnalysisTask, Blame, Generated, TaskKind};
use crate::ast::Spec;
use crate::checker::{check_task, Counterexample, TaskResult};
use crate::eval::{DomainBounds, EvalError};
use crate::token::TokenSystem;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum PairVerdict {
    CommutesAndStable,
    /// Preconditions broken by the other operation, as `op after other`.
    StabilityConflict { directions: Vec<String>, equality_fails: bool },
    CommutativityConflict,
    SkippedByTokenSystem { tokens: (String, String) },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SelfVerdict {
    Stable,
    SelfConflict,
    SkippedByTokenSystem { tokens: (String, String) },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SafetyVerdict {
    Safe,
    Unsafe,
}

/// A failed goal with its counterexample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub task: String,
    pub goal: String,
    pub counterexample: Counterexample,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub ops: (String, String),
    #[serde(flatten)]
    pub verdict: PairVerdict,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfReport {
    pub op: String,
    #[serde(flatten)]
    pub verdict: SelfVerdict,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SafetyReport {
    pub op: String,
    pub verdict: SafetyVerdict,
    /// Failures of the op's own contract, including those found at call
    /// sites inside pair tasks.
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenReport {
    pub sound: bool,
    pub skipped: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConflictReport {
    pub schema_version: u32,
    pub bounds: (i64, i64),
    /// Field names, in the order state values list them.
    pub state_fields: Vec<String>,
    pub pairs: Vec<PairReport>,
    #[serde(rename = "self")]
    pub selfs: Vec<SelfReport>,
    pub safety: Vec<SafetyReport>,
    pub token_system: Option<TokenReport>,
    pub warnings: Vec<String>,
}

impl ConflictReport {
    /// Whether any pair, self or safety verdict is a conflict.
    pub fn has_conflicts(&self) -> bool {
        self.pairs.iter().any(|p| matches!(p.verdict, PairVerdict::StabilityConflict { .. } | PairVerdict::CommutativityConflict))
            || self.selfs.iter().any(|s| s.verdict == SelfVerdict::SelfConflict)
            || self.safety.iter().any(|s| s.verdict == SafetyVerdict::Unsafe)
    }

    pub fn pair(&self, f: &str, g: &str) -> Option<&PairReport> {
        self.pairs.iter().find(|p| (p.ops.0 == f && p.ops.1 == g) || (p.ops.0 == g && p.ops.1 == f))
    }

    pub fn self_stability(&self, op: &str) -> Option<&SelfReport> {
        self.selfs.iter().find(|s| s.op == op)
    }

    pub fn safety_of(&self, op: &str) -> Option<&SafetyReport> {
        self.safety.iter().find(|s| s.op == op)
    }
}

fn failures_where(r: &TaskResult, keep: impl Fn(&Blame) -> bool) -> Vec<Failure> {
    r.goals
        .iter()
        .filter(|g| keep(&g.blame))
        .filter_map(|g| {
            g.counterexample.clone().map(|c| Failure { task: r.task.clone(), goal: g.label.clone(), counterexample: c })
        })
        .collect()
}

struct Checked {
    task: AnalysisTask,
    result: TaskResult,
}

fn check(spec: &Spec, task: AnalysisTask, bounds: DomainBounds, warnings: &mut Vec<String>) -> Result<Checked, EvalError> {
    let result = check_task(spec, &task, bounds)?;
    if result.vacuous() {
        warnings.push(format!("{}: no assignment within bounds satisfies the assumption; passes vacuously", result.task));
    }
    Ok(Checked { task, result })
}

/// Generates and checks every task; verdicts are ordered by operation name.
pub fn run_analysis(spec: &Spec, tokens: Option<&TokenSystem>, bounds: DomainBounds) -> Result<ConflictReport, EvalError> {
    let set = gen_all(spec, tokens);
    let mut warnings = Vec::new();
    let mut all_pass = true;
    let mut skipped = Vec::new();

    let mut safety_checked = Vec::new();
    for task in set.safety {
        safety_checked.push(check(spec, task, bounds, &mut warnings)?);
    }
    let mut contract_failures: Vec<(String, Failure)> = Vec::new();

    let mut pairs = Vec::new();
    for ((f, g), generated) in set.pairs {
        let report = match generated {
            Generated::Skipped { tokens } => {
                skipped.push((f.clone(), g.clone()));
                PairReport { ops: (f, g), verdict: PairVerdict::SkippedByTokenSystem { tokens }, failures: Vec::new() }
            }
            Generated::Task(task) => {
                let Checked { result, .. } = check(spec, task, bounds, &mut warnings)?;
                all_pass &= result.passed();
                for op in spec.ops.iter().map(|o| &o.name) {
                    let found = failures_where(&result, |b| matches!(b, Blame::Safety { op: x } if x == op));
                    contract_failures.extend(found.into_iter().map(|f| (op.clone(), f)));
                }
                let failures = failures_where(&result, |b| !matches!(b, Blame::Safety { .. }));
                let mut directions: Vec<String> = Vec::new();
                let mut equality_fails = false;
                for goal in result.goals.iter().filter(|g| g.counterexample.is_some()) {
                    match &goal.blame {
                        Blame::Stability { op, after } => {
                            let d = format!("{op} after {after}");
                            if !directions.contains(&d) {
                                directions.push(d);
                            }
                        }
                        Blame::Equality => equality_fails = true,
                        Blame::Safety { .. } => {}
                    }
                }
                let verdict = if !directions.is_empty() {
                    PairVerdict::StabilityConflict { directions, equality_fails }
                } else if equality_fails {
                    PairVerdict::CommutativityConflict
                } else {
                    PairVerdict::CommutesAndStable
                };
                PairReport { ops: (f, g), verdict, failures }
            }
        };
        pairs.push(report);
    }

    let mut selfs = Vec::new();
    for (op, generated) in set.selfs {
        let report = match generated {
            Generated::Skipped { tokens } => {
                skipped.push((op.clone(), op.clone()));
                SelfReport { op, verdict: SelfVerdict::SkippedByTokenSystem { tokens }, failures: Vec::new() }
            }
            Generated::Task(task) => {
                let Checked { result, .. } = check(spec, task, bounds, &mut warnings)?;
                all_pass &= result.passed();
                let failures = failures_where(&result, |_| true);
                let verdict = if failures.is_empty() { SelfVerdict::Stable } else { SelfVerdict::SelfConflict };
                SelfReport { op, verdict, failures }
            }
        };
        selfs.push(report);
    }

    let mut safety = Vec::new();
    for Checked { task, result } in safety_checked {
        all_pass &= result.passed();
        let op = match &task.kind {
            TaskKind::Safety { op } => op.clone(),
            _ => unreachable!("safety task"),
        };
        let mut failures = failures_where(&result, |_| true);
        failures.extend(contract_failures.iter().filter(|(o, _)| *o == op).map(|(_, f)| f.clone()));
        let verdict = if failures.is_empty() { SafetyVerdict::Safe } else { SafetyVerdict::Unsafe };
        safety.push(SafetyReport { op, verdict, failures });
    }

    let token_system = tokens.map(|_| TokenReport { sound: all_pass, skipped });
    Ok(ConflictReport { schema_version: SCHEMA_VERSION, bounds: (bounds.int_min, bounds.int_max),
        state_fields: spec.state.fields.iter().map(|f| f.name.clone()).collect(),
        pairs, selfs, safety, token_system, warnings })
}

impl fmt::Display for PairVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairVerdict::CommutesAndStable => write!(f, "commutes and stable"),
            PairVerdict::StabilityConflict { directions, equality_fails } => {
                write!(f, "stability conflict ({})", directions.join("; "))?;
                if *equality_fails {
                    write!(f, ", final states may differ")?;
                }
                Ok(())
            }
            PairVerdict::CommutativityConflict => write!(f, "commutativity conflict"),
            PairVerdict::SkippedByTokenSystem { tokens } => write!(f, "skipped (tokens {} and {} conflict)", tokens.0, tokens.1),
        }
    }
}

impl fmt::Display for SelfVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelfVerdict::Stable => write!(f, "stable"),
            SelfVerdict::SelfConflict => write!(f, "self conflict"),
            SelfVerdict::SkippedByTokenSystem { tokens } => write!(f, "skipped (tokens {} and {} conflict)", tokens.0, tokens.1),
        }
    }
}

fn write_failure(out: &mut String, fl: &Failure) {
    let c = &fl.counterexample;
    let _ = writeln!(out, "    {} fails in {}", fl.goal, fl.task);
    let bindings: Vec<String> = c.bindings.iter().map(|(n, v)| format!("{n} = {v}")).collect();
    let _ = writeln!(out, "      with {}", bindings.join(", "));
    for step in &c.trace {
        let _ = writeln!(out, "      {} gives {} = {}", step.call, step.snapshot, step.state);
    }
}

/// Human-readable rendering of a report.
pub fn render_text(r: &ConflictReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "bounds {}..{}", r.bounds.0, r.bounds.1);
    let _ = writeln!(out, "states are <{}>", r.state_fields.join("; "));
    let _ = writeln!(out, "safety:");
    for s in &r.safety {
        let v = match s.verdict {
            SafetyVerdict::Safe => "safe",
            SafetyVerdict::Unsafe => "unsafe",
        };
        let _ = writeln!(out, "  {}: {v}", s.op);
        s.failures.iter().for_each(|f| write_failure(&mut out, f));
    }
    let _ = writeln!(out, "pairs:");
    for p in &r.pairs {
        let _ = writeln!(out, "  {} / {}: {}", p.ops.0, p.ops.1, p.verdict);
        p.failures.iter().for_each(|f| write_failure(&mut out, f));
    }
    let _ = writeln!(out, "self-stability:");
    for s in &r.selfs {
        let _ = writeln!(out, "  {}: {}", s.op, s.verdict);
        s.failures.iter().for_each(|f| write_failure(&mut out, f));
    }
    if let Some(t) = &r.token_system {
        let _ = writeln!(out, "token system: {}", if t.sound { "sound" } else { "not sound" });
        for (f, g) in &t.skipped {
            let _ = writeln!(out, "  skipped {f} / {g}");
        }
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
