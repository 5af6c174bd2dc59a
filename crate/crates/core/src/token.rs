//! Token systems: tokens attached to operations or their arguments, and a
//! symmetric conflict relation between tokens.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::ast::Spec;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TokenSystem {
    /// `(operation, token)` from `token` declarations.
    pub op_tokens: Vec<(String, String)>,
    /// `(operation, argument, token)` from `argtoken` declarations.
    pub arg_tokens: Vec<(String, String, String)>,
    /// Unordered pairs, stored with the smaller name first.
    pub conflicts: BTreeSet<(String, String)>,
}

/// How a token system affects the analysis of one pair of operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refinement {
    /// The operations never run concurrently; no task is generated.
    Skip { tokens: (String, String) },
    /// Run the task assuming each `(a, b)` pair differs: argument `a` of the
    /// first operation and argument `b` of the second.
    Run { disequalities: Vec<(String, String)> },
}

impl TokenSystem {
    pub fn add_conflict(&mut self, a: &str, b: &str) {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        self.conflicts.insert((x.to_string(), y.to_string()));
    }

    pub fn conflict(&self, a: &str, b: &str) -> bool {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        self.conflicts.contains(&(x.to_string(), y.to_string()))
    }

    pub fn is_declared(&self, token: &str) -> bool {
        self.op_tokens.iter().any(|(_, t)| t == token) || self.arg_tokens.iter().any(|(_, _, t)| t == token)
    }

    fn op_level<'a>(&'a self, op: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.op_tokens.iter().filter(move |(o, _)| o == op).map(|(_, t)| t.as_str())
    }

    fn arg_level<'a>(&'a self, op: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.arg_tokens.iter().filter(move |(o, ..)| o == op).map(|(_, a, t)| (a.as_str(), t.as_str()))
    }

    /// Refinement for running `f` (first) concurrently with `g` (second);
    /// `f` and `g` may be the same operation.
    ///
    /// A conflict involving an operation-level token on either side skips the
    /// pair, since that operation is excluded regardless of argument values.
    /// Conflicting argument tokens on arguments of different sorts cannot be
    /// compared and contribute nothing.
    pub fn refine(&self, spec: &Spec, f: &str, g: &str) -> Refinement {
        let f_all: Vec<&str> = self.op_level(f).chain(self.arg_level(f).map(|(_, t)| t)).collect();
        let g_all: Vec<&str> = self.op_level(g).chain(self.arg_level(g).map(|(_, t)| t)).collect();
        for tf in self.op_level(f) {
            if let Some(tg) = g_all.iter().find(|tg| self.conflict(tf, tg)) {
                return Refinement::Skip { tokens: (tf.to_string(), tg.to_string()) };
            }
        }
        for tg in self.op_level(g) {
            if let Some(tf) = f_all.iter().find(|tf| self.conflict(tf, tg)) {
                return Refinement::Skip { tokens: (tf.to_string(), tg.to_string()) };
            }
        }
        let sort_of = |op: &str, arg: &str| spec.op(op).and_then(|o| o.param(arg)).map(|p| p.sort.clone());
        let mut disequalities = Vec::new();
        for (a, ta) in self.arg_level(f) {
            for (b, tb) in self.arg_level(g) {
                let pair = (a.to_string(), b.to_string());
                if self.conflict(ta, tb) && sort_of(f, a) == sort_of(g, b) && !disequalities.contains(&pair) {
                    disequalities.push(pair);
                }
            }
        }
        Refinement::Run { disequalities }
    }
}
