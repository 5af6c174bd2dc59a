//! Remove-wins set and a deterministic multi-replica simulator.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// A set where removal is permanent: an element is a member iff it was
/// added and never removed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RemoveWinsSet<T: Ord> {
    adds: BTreeSet<T>,
    removes: BTreeSet<T>,
}

impl<T: Ord> Default for RemoveWinsSet<T> {
    fn default() -> Self {
        RemoveWinsSet { adds: BTreeSet::new(), removes: BTreeSet::new() }
    }
}

impl<T: Ord + Clone> RemoveWinsSet<T> {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_parts(adds: impl IntoIterator<Item = T>, removes: impl IntoIterator<Item = T>) -> Self {
        RemoveWinsSet { adds: adds.into_iter().collect(), removes: removes.into_iter().collect() }
    }

    pub fn adds(&self) -> &BTreeSet<T> {
        &self.adds
    }

    pub fn removes(&self) -> &BTreeSet<T> {
        &self.removes
    }

    pub fn add_element(&self, e: T) -> Self {
        let mut s = self.clone();
        s.adds.insert(e);
        s
    }

    pub fn remove_element(&self, e: T) -> Self {
        let mut s = self.clone();
        s.removes.insert(e);
        s
    }

    pub fn member(&self, e: &T) -> bool {
        self.adds.contains(e) && !self.removes.contains(e)
    }

    /// Component-wise union, the join of both grow-only sets.
    pub fn merge(&self, other: &Self) -> Self {
        RemoveWinsSet {
            adds: self.adds.union(&other.adds).cloned().collect(),
            removes: self.removes.union(&other.removes).cloned().collect(),
        }
    }

    /// The members, in order.
    pub fn elements(&self) -> Vec<T> {
        self.adds.difference(&self.removes).cloned().collect()
    }

    pub fn apply(&self, u: &Update<T>) -> Self {
        match u {
            Update::Add(e) => self.add_element(e.clone()),
            Update::Remove(e) => self.remove_element(e.clone()),
        }
    }
}

impl<T: Ord + fmt::Display> fmt::Display for RemoveWinsSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: &BTreeSet<T>| s.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ");
        write!(f, "adds {{{}}} removes {{{}}}", show(&self.adds), show(&self.removes))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Update<T> {
    Add(T),
    Remove(T),
}

impl<T: fmt::Display> fmt::Display for Update<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Update::Add(e) => write!(f, "add {e}"),
            Update::Remove(e) => write!(f, "remove {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Replica<T: Ord> {
    pub id: usize,
    pub state: RemoveWinsSet<T>,
    /// Updates issued here, in order.
    pub outbound: Vec<Update<T>>,
    /// Every update applied here, local or delivered, in order.
    pub history: Vec<Update<T>>,
}

impl<T: Ord + Clone> Replica<T> {
    pub fn new(id: usize) -> Self {
        Replica { id, state: RemoveWinsSet::empty(), outbound: Vec::new(), history: Vec::new() }
    }

    pub fn local(&mut self, u: Update<T>) {
        self.outbound.push(u.clone());
        self.deliver(u);
    }

    pub fn deliver(&mut self, u: Update<T>) {
        self.state = self.state.apply(&u);
        self.history.push(u);
    }

    /// Replays the history from the empty set.
    pub fn replay(&self) -> RemoveWinsSet<T> {
        self.history.iter().fold(RemoveWinsSet::empty(), |s, u| s.apply(u))
    }
}

/// One step of a schedule. Events are numbered from 0 in the order their
/// `Op` steps appear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Step {
    Op { replica: usize, update: Update<i64> },
    Deliver { event: usize, replica: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schedule {
    pub replicas: usize,
    pub steps: Vec<Step>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("a schedule needs at least one replica")]
    NoReplicas,
    #[error("step {step}: replica {replica} does not exist")]
    UnknownReplica { step: usize, replica: usize },
    #[error("step {step}: event {event} is delivered before it is issued")]
    EarlyDelivery { step: usize, event: usize },
    #[error("event {event} never reaches replica {replica}")]
    NotDelivered { event: usize, replica: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimOutcome {
    pub converged: bool,
    pub finals: Vec<RemoveWinsSet<i64>>,
    pub histories: Vec<Vec<Update<i64>>>,
}

impl Schedule {
    /// Checks replica ids, delivery order, and that every event reaches
    /// every replica other than its origin.
    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.replicas == 0 {
            return Err(ScheduleError::NoReplicas);
        }
        let mut origins = Vec::new();
        let mut reached: Vec<BTreeSet<usize>> = Vec::new();
        for (step, s) in self.steps.iter().enumerate() {
            match s {
                Step::Op { replica, .. } => {
                    if *replica >= self.replicas {
                        return Err(ScheduleError::UnknownReplica { step, replica: *replica });
                    }
                    origins.push(*replica);
                    reached.push(BTreeSet::from([*replica]));
                }
                Step::Deliver { event, replica } => {
                    if *replica >= self.replicas {
                        return Err(ScheduleError::UnknownReplica { step, replica: *replica });
                    }
                    let seen = reached.get_mut(*event).ok_or(ScheduleError::EarlyDelivery { step, event: *event })?;
                    seen.insert(*replica);
                }
            }
        }
        for (event, seen) in reached.iter().enumerate() {
            if let Some(replica) = (0..self.replicas).find(|r| !seen.contains(r)) {
                return Err(ScheduleError::NotDelivered { event, replica });
            }
        }
        Ok(())
    }

    /// Parses the line format:
    ///
    /// ```text
    /// replicas 2
    /// op 0 add 5        # event 0, issued at replica 0
    /// op 1 remove 5     # event 1
    /// deliver 0 1       # event 0 reaches replica 1
    /// deliver all       # every issued event reaches every replica
    /// ```
    pub fn parse(text: &str) -> Result<Schedule, ScheduleError> {
        let mut replicas = None;
        let mut steps = Vec::new();
        let mut events = 0usize;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: &str| ScheduleError::Syntax { line, message: message.to_string() };
            let words: Vec<&str> = content.split_whitespace().collect();
            let num = |w: &str| w.parse::<usize>().map_err(|_| err(&format!("expected a number, found `{w}`")));
            match words.as_slice() {
                ["replicas", n] if replicas.is_none() => replicas = Some(num(n)?),
                ["replicas", _] => return Err(err("replica count given twice")),
                _ if replicas.is_none() => return Err(err("the first line must be `replicas N`")),
                ["op", r, kind, e] => {
                    let e: i64 = e.parse().map_err(|_| err(&format!("expected an element, found `{e}`")))?;
                    let update = match *kind {
                        "add" => Update::Add(e),
                        "remove" => Update::Remove(e),
                        other => return Err(err(&format!("unknown update `{other}`"))),
                    };
                    steps.push(Step::Op { replica: num(r)?, update });
                    events += 1;
                }
                ["deliver", "all"] => {
                    for event in 0..events {
                        for replica in 0..replicas.unwrap_or(0) {
                            steps.push(Step::Deliver { event, replica });
                        }
                    }
                }
                ["deliver", e, r] => steps.push(Step::Deliver { event: num(e)?, replica: num(r)? }),
                _ => return Err(err(&format!("cannot read `{content}`"))),
            }
        }
        let replicas = replicas.ok_or(ScheduleError::NoReplicas)?;
        Ok(Schedule { replicas, steps })
    }

    /// A random schedule: `events` updates over elements `0..=max_elem` at
    /// random replicas, interleaved with deliveries that may duplicate and
    /// reorder, then a final round delivering whatever is still missing in
    /// random order.
    pub fn random(rng: &mut impl Rng, replicas: usize, events: usize, max_elem: i64) -> Schedule {
        let mut steps = Vec::new();
        let mut missing: Vec<(usize, usize)> = Vec::new();
        let mut issued = 0usize;
        while issued < events {
            if issued == 0 || rng.gen_bool(0.5) {
                let replica = rng.gen_range(0..replicas);
                let e = rng.gen_range(0..=max_elem);
                let update = if rng.gen_bool(0.5) { Update::Add(e) } else { Update::Remove(e) };
                steps.push(Step::Op { replica, update });
                missing.extend((0..replicas).filter(|r| *r != replica).map(|r| (issued, r)));
                issued += 1;
            } else {
                let event = rng.gen_range(0..issued);
                let replica = rng.gen_range(0..replicas);
                steps.push(Step::Deliver { event, replica });
                missing.retain(|m| *m != (event, replica));
            }
        }
        missing.shuffle(rng);
        for (event, replica) in missing {
            steps.push(Step::Deliver { event, replica });
            if rng.gen_bool(0.1) {
                steps.push(Step::Deliver { event, replica });
            }
        }
        Schedule { replicas, steps }
    }
}

/// Runs a schedule; delivering an event to its origin, or twice, is
/// allowed and has no effect beyond the first application.
pub fn simulate(schedule: &Schedule) -> Result<SimOutcome, ScheduleError> {
    schedule.validate()?;
    let mut replicas: Vec<Replica<i64>> = (0..schedule.replicas).map(Replica::new).collect();
    let mut events = Vec::new();
    for s in &schedule.steps {
        match s {
            Step::Op { replica, update } => {
                events.push(update.clone());
                replicas[*replica].local(update.clone());
            }
            Step::Deliver { event, replica } => replicas[*replica].deliver(events[*event].clone()),
        }
    }
    let finals: Vec<RemoveWinsSet<i64>> = replicas.iter().map(|r| r.state.clone()).collect();
    let converged = finals.windows(2).all(|w| w[0] == w[1]);
    Ok(SimOutcome { converged, finals, histories: replicas.into_iter().map(|r| r.history).collect() })
}

/// `runs` random three-replica schedules of at most `max_events` updates,
/// seeded from `seed`; returns the seeds of runs that did not converge.
pub fn random_runs(seed: u64, runs: usize, max_events: usize, max_elem: i64) -> Vec<u64> {
    let mut diverged = Vec::new();
    for k in 0..runs as u64 {
        let run_seed = seed.wrapping_add(k);
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        let events = rng.gen_range(1..=max_events);
        let schedule = Schedule::random(&mut rng, 3, events, max_elem);
        match simulate(&schedule) {
            Ok(outcome) if outcome.converged => {}
            _ => diverged.push(run_seed),
        }
    }
    diverged
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_has_no_members() {
        let s: RemoveWinsSet<i64> = RemoveWinsSet::empty();
        assert!(s.adds().is_empty() && s.removes().is_empty());
        assert!((0..4).all(|e| !s.member(&e)));
        assert_eq!(s, RemoveWinsSet::empty());
    }

    #[test]
    fn remove_wins_over_a_later_add() {
        let s = RemoveWinsSet::empty().add_element(2).remove_element(2).add_element(2);
        assert!(!s.member(&2));
        let t = RemoveWinsSet::empty().remove_element(7);
        assert!(!t.member(&7));
        assert_eq!(t.removes().len(), 1);
    }

    #[test]
    fn merge_of_add_and_remove_replicas() {
        let a = RemoveWinsSet::empty().add_element(5);
        let r = RemoveWinsSet::empty().remove_element(5);
        assert!(!a.merge(&r).member(&5));
        assert_eq!(a.merge(&RemoveWinsSet::empty()), a);
        assert_eq!(a.merge(&a), a);
    }

    #[test]
    fn scenario_parses_and_converges() {
        let s = Schedule::parse("replicas 2\nop 0 add 5\nop 1 remove 5\ndeliver 0 1\ndeliver 1 0\n").unwrap();
        let out = simulate(&s).unwrap();
        assert!(out.converged);
        assert!(!out.finals[0].member(&5));
    }

    #[test]
    fn missing_delivery_is_rejected() {
        let s = Schedule::parse("replicas 2\nop 0 add 5\n").unwrap();
        assert_eq!(simulate(&s).unwrap_err(), ScheduleError::NotDelivered { event: 0, replica: 1 });
        let early = Schedule { replicas: 2, steps: vec![Step::Deliver { event: 0, replica: 1 }] };
        assert!(matches!(early.validate(), Err(ScheduleError::EarlyDelivery { .. })));
    }

    #[test]
    fn bad_lines_carry_their_number() {
        let e = Schedule::parse("replicas 2\nop 0 insert 5\n").unwrap_err();
        assert!(matches!(e, ScheduleError::Syntax { line: 2, .. }));
    }
}
