use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cise::crdt::{random_runs, simulate, RemoveWinsSet, Schedule, ScheduleError, Update};

/// Every remove-wins set over elements `0..n`: each subset of adds paired
/// with each subset of removes.
fn all_sets(n: u32) -> Vec<RemoveWinsSet<u8>> {
    let subset = |mask: u32| (0..n as u8).filter(move |e| mask & (1 << e) != 0);
    let mut out = Vec::new();
    for a in 0..1u32 << n {
        for r in 0..1u32 << n {
            out.push(RemoveWinsSet::from_parts(subset(a), subset(r)));
        }
    }
    out
}

fn leq(a: &RemoveWinsSet<u8>, b: &RemoveWinsSet<u8>) -> bool {
    a.adds().is_subset(b.adds()) && a.removes().is_subset(b.removes())
}

#[test]
fn merge_is_a_semilattice_join_over_every_small_domain() {
    for n in 0..=3 {
        let sets = all_sets(n);
        assert_eq!(sets.len(), 1 << (2 * n));
        for a in &sets {
            assert_eq!(&a.merge(a), a);
            for b in &sets {
                let ab = a.merge(b);
                assert_eq!(ab, b.merge(a));
                assert!(leq(a, &ab) && leq(b, &ab));
                for c in &sets {
                    assert_eq!(ab.merge(c), a.merge(&b.merge(c)));
                    if leq(a, c) && leq(b, c) {
                        assert!(leq(&ab, c));
                    }
                }
            }
        }
    }
}

#[test]
fn updates_commute_and_are_idempotent() {
    let sets = all_sets(3);
    let updates: Vec<Update<u8>> = (0..3).flat_map(|e| [Update::Add(e), Update::Remove(e)]).collect();
    for s in &sets {
        for u in &updates {
            assert_eq!(s.apply(u).apply(u), s.apply(u));
            assert!(leq(s, &s.apply(u)));
            for v in &updates {
                assert_eq!(s.apply(u).apply(v), s.apply(v).apply(u));
            }
        }
    }
}

#[test]
fn removed_elements_never_return() {
    for s in all_sets(3) {
        for e in 0..3 {
            let removed = s.remove_element(e);
            assert!(!removed.member(&e));
            assert!(!removed.add_element(e).member(&e));
            assert!(!removed.merge(&s.add_element(e)).member(&e));
        }
    }
}

#[test]
fn two_hundred_random_schedules_converge() {
    let start = Instant::now();
    assert_eq!(random_runs(0, 200, 100, 3), Vec::<u64>::new());
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn random_schedules_deliver_everything_and_reorder() {
    let mut reordered = false;
    let mut duplicated = false;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Schedule::random(&mut rng, 3, 30, 3);
        assert_eq!(s.validate(), Ok(()));
        let delivered: Vec<(usize, usize)> = s
            .steps
            .iter()
            .filter_map(|st| match st {
                cise::crdt::Step::Deliver { event, replica } => Some((*event, *replica)),
                _ => None,
            })
            .collect();
        reordered |= delivered.windows(2).any(|w| w[0].1 == w[1].1 && w[0].0 > w[1].0);
        duplicated |= (1..delivered.len()).any(|i| delivered[..i].contains(&delivered[i]));
    }
    assert!(reordered && duplicated);
}

fn scenario(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/scenarios").join(name);
    fs::read_to_string(path).unwrap()
}

#[test]
fn bundled_scenarios() {
    for name in ["add_remove.sim", "single_replica.sim", "reordered.sim"] {
        let out = simulate(&Schedule::parse(&scenario(name)).unwrap()).unwrap();
        assert!(out.converged, "{name}");
    }
    let out = simulate(&Schedule::parse(&scenario("add_remove.sim")).unwrap()).unwrap();
    assert!(out.finals.iter().all(|s| !s.member(&5)));
    let err = simulate(&Schedule::parse(&scenario("undelivered.sim")).unwrap()).unwrap_err();
    assert_eq!(err, ScheduleError::NotDelivered { event: 0, replica: 1 });
}

#[test]
fn schedule_errors() {
    assert_eq!(Schedule::parse("replicas 0\n").unwrap().validate(), Err(ScheduleError::NoReplicas));
    let s = Schedule::parse("replicas 2\nop 2 add 1\n").unwrap();
    assert_eq!(s.validate(), Err(ScheduleError::UnknownReplica { step: 0, replica: 2 }));
    let s = Schedule::parse("replicas 2\ndeliver 0 1\nop 0 add 1\n").unwrap();
    assert_eq!(s.validate(), Err(ScheduleError::EarlyDelivery { step: 0, event: 0 }));
    assert!(matches!(Schedule::parse("op 0 add 1\n"), Err(ScheduleError::Syntax { line: 1, .. })));
    assert!(matches!(Schedule::parse("replicas 1\nop 0 toggle 1\n"), Err(ScheduleError::Syntax { line: 2, .. })));
}

proptest! {
    #[test]
    fn any_seed_converges_and_histories_replay(seed in any::<u64>(), events in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schedule = Schedule::random(&mut rng, 3, events, 3);
        let out = simulate(&schedule).unwrap();
        prop_assert!(out.converged);
        for (final_state, history) in out.finals.iter().zip(&out.histories) {
            let replayed = history.iter().fold(RemoveWinsSet::empty(), |s, u| s.apply(u));
            prop_assert_eq!(&replayed, final_state);
        }
        let joined = out.finals.iter().fold(RemoveWinsSet::empty(), |acc, s| acc.merge(s));
        prop_assert_eq!(&joined, &out.finals[0]);
    }
}
