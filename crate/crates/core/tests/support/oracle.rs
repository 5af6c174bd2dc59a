//! Brute-force simulation of both interleavings of an operation pair,
//! independent of the task generator and the checker's search.

use std::collections::BTreeSet;

use cise::analysis::{gen_pair, gen_self, AnalysisTask, Blame, Generated};
use cise::checker::check_task;
use cise::eval::Evaluator;
use cise::sp::{all_args, all_states};
use cise::value::StateValue;
use cise::{DomainBounds, Env, Formula, OpDecl, Spec, Value};

pub struct Sim<'a> {
    spec: &'a Spec,
    ev: Evaluator<'a>,
}

impl<'a> Sim<'a> {
    pub fn new(spec: &'a Spec, bounds: DomainBounds) -> Sim<'a> {
        Sim { spec, ev: Evaluator::new(&spec.state, bounds) }
    }

    fn env(op: &OpDecl, args: &[Value], state: &StateValue) -> Env {
        let mut env = Env::with(op.params.iter().map(|p| p.name.clone()).zip(args.iter().cloned()));
        env.push(op.state_param.clone(), Value::State(state.clone()));
        env
    }

    fn holds(&self, op: &OpDecl, args: &[Value], state: &StateValue, f: &Formula) -> bool {
        self.ev.eval_formula(f, &mut Self::env(op, args, state)).unwrap()
    }

    fn pre(&self, op: &OpDecl, args: &[Value], state: &StateValue) -> bool {
        op.requires.iter().all(|r| self.holds(op, args, state, r))
    }

    fn run(&self, op: &OpDecl, args: &[Value], state: &StateValue) -> StateValue {
        let mut env = Self::env(op, args, state);
        self.ev.exec_stmt(&op.body, &op.state_param, state, &mut env).unwrap()
    }

    fn invariant(&self, state: &StateValue) -> bool {
        let mut env = Env::with([(cise::StateDecl::SELF.to_string(), Value::State(state.clone()))]);
        self.ev.eval_formula(&self.spec.state.invariant, &mut env).unwrap()
    }

    fn equal(&self, a: &StateValue, b: &StateValue) -> bool {
        match &self.spec.state_eq {
            None => a == b,
            Some(eq) => {
                let mut env = Env::with([
                    (eq.left.clone(), Value::State(a.clone())),
                    (eq.right.clone(), Value::State(b.clone())),
                ]);
                self.ev.eval_formula(&eq.body, &mut env).unwrap()
            }
        }
    }

    /// States satisfying the invariant, grouped into classes of the state
    /// equality. The equality predicates of the fixtures are equivalences,
    /// so comparing against one representative per class is enough.
    pub fn classes(&self) -> Vec<Vec<StateValue>> {
        let mut classes: Vec<Vec<StateValue>> = Vec::new();
        for s in all_states(&self.ev).unwrap().into_iter().filter(|s| self.invariant(s)) {
            match classes.iter_mut().find(|c| self.equal(&c[0], &s)) {
                Some(c) => c.push(s),
                None => classes.push(vec![s]),
            }
        }
        classes
    }

    /// Labels of the failing stability and equality goals of `f` and `g`.
    pub fn pair(&self, classes: &[Vec<StateValue>], f: &OpDecl, g: &OpDecl) -> BTreeSet<String> {
        let args_f = all_args(&self.ev, f).unwrap();
        let args_g = all_args(&self.ev, g).unwrap();
        let mut failing = BTreeSet::new();
        for class in classes {
            for s1 in class {
                for a1 in args_f.iter().filter(|a| self.pre(f, a, s1)) {
                    for s2 in class {
                        for a2 in args_g.iter().filter(|a| self.pre(g, a, s2)) {
                            let g_first = self.run(g, a2, s1);
                            let f_first = self.run(f, a1, s2);
                            for (i, r) in f.requires.iter().enumerate() {
                                if !self.holds(f, a1, &g_first, r) {
                                    failing.insert(format!("pre#{} of {} after {}", i + 1, f.name, g.name));
                                }
                            }
                            for (i, r) in g.requires.iter().enumerate() {
                                if !self.holds(g, a2, &f_first, r) {
                                    failing.insert(format!("pre#{} of {} after {}", i + 1, g.name, f.name));
                                }
                            }
                            if !self.equal(&self.run(f, a1, &g_first), &self.run(g, a2, &f_first)) {
                                failing.insert("state equality".to_string());
                            }
                        }
                    }
                }
            }
        }
        failing
    }

    /// Labels of the failing goals of `f` running after itself.
    pub fn self_pair(&self, classes: &[Vec<StateValue>], f: &OpDecl) -> BTreeSet<String> {
        let args = all_args(&self.ev, f).unwrap();
        let mut failing = BTreeSet::new();
        for class in classes {
            for s1 in class {
                for a1 in args.iter().filter(|a| self.pre(f, a, s1)) {
                    let after = self.run(f, a1, s1);
                    for s2 in class {
                        for a2 in args.iter().filter(|a| self.pre(f, a, s2)) {
                            for (i, r) in f.requires.iter().enumerate() {
                                if !self.holds(f, a2, &after, r) {
                                    failing.insert(format!("pre#{} of {} after {}", i + 1, f.name, f.name));
                                }
                            }
                        }
                    }
                }
            }
        }
        failing
    }
}

pub fn checker_failures(spec: &Spec, task: &AnalysisTask, bounds: DomainBounds) -> BTreeSet<String> {
    let r = check_task(spec, task, bounds).unwrap();
    for g in &r.goals {
        if let Some(c) = &g.counterexample {
            assert!(c.revalidate(spec, task, bounds).unwrap(), "{}: {} does not replay", r.task, g.label);
        }
    }
    r.goals
        .iter()
        .filter(|g| g.counterexample.is_some() && !matches!(g.blame, Blame::Safety { .. }))
        .map(|g| g.label.clone())
        .collect()
}

pub fn agree_on(spec: &Spec) -> usize {
    let bounds = DomainBounds::new(0, 1).unwrap();
    let sim = Sim::new(spec, bounds);
    let classes = sim.classes();
    let mut ops: Vec<&OpDecl> = spec.ops.iter().collect();
    ops.sort_by(|a, b| a.name.cmp(&b.name));
    let mut compared = 0;
    for (i, f) in ops.iter().enumerate() {
        for g in &ops[i + 1..] {
            let Generated::Task(task) = gen_pair(spec, f, g, None) else { unreachable!() };
            let expected = sim.pair(&classes, f, g);
            assert_eq!(checker_failures(spec, &task, bounds), expected, "{} / {}", f.name, g.name);
            compared += 1;
        }
        let Generated::Task(task) = gen_self(spec, f, None) else { unreachable!() };
        assert_eq!(checker_failures(spec, &task, bounds), sim.self_pair(&classes, f), "{} self", f.name);
        compared += 1;
    }
    compared
}

