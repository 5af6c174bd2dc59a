use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cise::analysis::{gen_all, AnalysisTask, Generated};
use cise::crdt::{random_runs, simulate, Schedule};
use cise::parser::{parse_spec_named, parse_tokens_named};
use cise::pretty::{Printer, Style};
use cise::report::{render_text, run_analysis, ConflictReport};
use cise::smt::{emit, run_solver, SmtScript, SolverAnswer};
use cise::sp::sp_op;
use cise::{DomainBounds, Spec, TokenSystem};

#[derive(Parser)]
#[command(name = "cise", version, about = "Safety, commutativity and stability analysis of replicated specifications")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check every operation, pair and self-stability task.
    Analyze {
        spec: PathBuf,
        #[arg(long)]
        tokens: Option<PathBuf>,
        #[arg(long, default_value = "0..3")]
        bounds: String,
        #[arg(long, value_enum, default_value = "text")]
        report: Format,
        /// Also write one SMT-LIB script per goal into this directory.
        #[arg(long, value_name = "DIR")]
        emit_smt: Option<PathBuf>,
        /// Solver command run on each script, e.g. `z3 -in`.
        #[arg(long, value_name = "CMD")]
        solver: Option<String>,
    },
    /// Print the strongest postcondition of an operation.
    Sp {
        spec: PathBuf,
        op: String,
        /// Ignore an existing ensures clause.
        #[arg(long)]
        force: bool,
    },
    /// Run a replica scenario, or random schedules when none is given.
    CrdtSim {
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        #[arg(long, default_value_t = 100)]
        max_events: usize,
    },
    /// Write one SMT-LIB script per goal.
    EmitSmt {
        spec: PathBuf,
        dir: PathBuf,
        #[arg(long)]
        tokens: Option<PathBuf>,
    },
}

/// Input problems: reported, exit 2.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load(spec: &Path, tokens: Option<&Path>) -> Result<(Spec, Option<TokenSystem>), InputError> {
    let spec_src = read(spec)?;
    let spec = parse_spec_named(&spec_src, &spec.display().to_string())?;
    let tokens = match tokens {
        Some(p) => Some(parse_tokens_named(&read(p)?, &spec, &p.display().to_string())?),
        None => None,
    };
    Ok((spec, tokens))
}

fn tasks(spec: &Spec, tokens: Option<&TokenSystem>) -> Vec<AnalysisTask> {
    let set = gen_all(spec, tokens);
    let mut out = set.safety;
    let generated = set.pairs.into_iter().map(|(_, g)| g).chain(set.selfs.into_iter().map(|(_, g)| g));
    out.extend(generated.filter_map(|g| match g {
        Generated::Task(t) => Some(t),
        Generated::Skipped { .. } => None,
    }));
    out
}

fn scripts(spec: &Spec, tokens: Option<&TokenSystem>) -> Result<Vec<(AnalysisTask, Vec<SmtScript>)>, InputError> {
    tasks(spec, tokens).into_iter().map(|t| Ok((t.clone(), emit(spec, &t)?))).collect()
}

fn write_scripts(dir: &Path, all: &[(AnalysisTask, Vec<SmtScript>)]) -> Result<usize, InputError> {
    fs::create_dir_all(dir).map_err(|e| InputError(format!("{}: {e}", dir.display())))?;
    let mut n = 0;
    for (_, scripts) in all {
        for (i, s) in scripts.iter().enumerate() {
            let path = dir.join(s.file_name(i));
            fs::write(&path, &s.text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
            n += 1;
        }
    }
    Ok(n)
}

/// Solver verdicts that disagree with the bounded checker.
fn solver_disagreements(report: &ConflictReport, all: &[(AnalysisTask, Vec<SmtScript>)], cmd: &str) -> Result<Vec<String>, InputError> {
    let failed = |task: &str, goal: &str| {
        report.pairs.iter().flat_map(|p| &p.failures)
            .chain(report.selfs.iter().flat_map(|s| &s.failures))
            .chain(report.safety.iter().flat_map(|s| &s.failures))
            .any(|f| f.task == task && f.goal == goal)
    };
    let mut out = Vec::new();
    for (_, scripts) in all {
        for s in scripts {
            let checker_fails = failed(&s.task, &s.goal);
            match run_solver(cmd, &s.text)? {
                SolverAnswer::Unsat if checker_fails => out.push(format!("{}: {}: solver proves a goal the checker refutes", s.task, s.goal)),
                SolverAnswer::Sat(_) if !checker_fails => {
                    out.push(format!("{}: {}: solver refutes a goal that holds within bounds", s.task, s.goal))
                }
                SolverAnswer::Unknown(why) => out.push(format!("{}: {}: solver answered `{why}`", s.task, s.goal)),
                _ => {}
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct SimReport<'a> {
    schema_version: u32,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<&'a cise::crdt::SimOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diverged_seeds: Option<&'a [u64]>,
}

fn run(cli: Cli) -> Result<ExitCode, InputError> {
    match cli.command {
        Cmd::Analyze { spec, tokens, bounds, report, emit_smt, solver } => {
            let bounds = DomainBounds::parse(&bounds)?;
            let (spec, tokens) = load(&spec, tokens.as_deref())?;
            let mut r = run_analysis(&spec, tokens.as_ref(), bounds)?;
            if emit_smt.is_some() || solver.is_some() {
                let all = scripts(&spec, tokens.as_ref())?;
                if let Some(dir) = &emit_smt {
                    write_scripts(dir, &all)?;
                }
                if let Some(cmd) = &solver {
                    r.warnings.extend(solver_disagreements(&r, &all, cmd)?);
                }
            }
            match report {
                Format::Text => write_out(&render_text(&r)),
                Format::Json => write_out(&format!("{}\n", serde_json::to_string_pretty(&r)?)),
            }
            let sound = r.token_system.as_ref().is_none_or(|t| t.sound);
            Ok(if !r.has_conflicts() && sound { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Sp { spec, op, force } => {
            let (spec, _) = load(&spec, None)?;
            let decl = spec.op(&op).ok_or_else(|| InputError(format!("unknown operation `{op}`")))?;
            if !decl.ensures.is_empty() && !force {
                return Err(InputError(format!("`{op}` already has an ensures clause; pass --force to ignore it")));
            }
            write_out(&format!("{}\n", Printer::new(Style::COMPACT).formula(&sp_op(&spec, decl).formula)));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::CrdtSim { scenario, seed, runs, max_events } => {
            let (converged, json) = match scenario {
                Some(path) => {
                    let schedule = Schedule::parse(&read(&path)?)?;
                    let outcome = simulate(&schedule)?;
                    let report = SimReport { schema_version: 1, converged: outcome.converged, scenario: Some(&outcome), diverged_seeds: None };
                    (outcome.converged, serde_json::to_string_pretty(&report)?)
                }
                None => {
                    let diverged = random_runs(seed, runs, max_events, 3);
                    let report = SimReport { schema_version: 1, converged: diverged.is_empty(), scenario: None, diverged_seeds: Some(&diverged) };
                    (diverged.is_empty(), serde_json::to_string_pretty(&report)?)
                }
            };
            write_out(&format!("{json}\n"));
            Ok(if converged { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::EmitSmt { spec, dir, tokens } => {
            let (spec, tokens) = load(&spec, tokens.as_deref())?;
            let n = write_scripts(&dir, &scripts(&spec, tokens.as_ref())?)?;
            write_out(&format!("wrote {n} scripts to {}\n", dir.display()));
            Ok(ExitCode::SUCCESS)
        }
    }
}

// A closed pipe (`cise ... | head`) is not an error.
fn write_out(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
