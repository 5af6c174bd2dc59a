//! Syntactic rewriting: substitution, renaming, `old` elimination and
//! alpha-equivalence.

use std::collections::{BTreeSet, HashMap};

use crate::ast::{Expr, Formula};

pub type Subst = HashMap<String, Expr>;

pub fn free_vars_expr(e: &Expr, out: &mut BTreeSet<String>) {
    if let Expr::Var(v) = e {
        out.insert(v.clone());
    }
    for c in e.children() {
        free_vars_expr(c, out);
    }
}

pub fn free_vars(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(f, &mut Vec::new(), &mut out);
    out
}

fn collect_free(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    if let Formula::Quant(_, b, body) = f {
        bound.push(b.name.clone());
        collect_free(body, bound, out);
        bound.pop();
        return;
    }
    for e in f.exprs() {
        let mut vs = BTreeSet::new();
        free_vars_expr(e, &mut vs);
        out.extend(vs.into_iter().filter(|v| !bound.contains(v)));
    }
    for g in f.subformulas() {
        collect_free(g, bound, out);
    }
}

pub fn subst_expr(e: &Expr, map: &Subst) -> Expr {
    let s = |x: &Expr| Box::new(subst_expr(x, map));
    match e {
        Expr::Var(v) => map.get(v).cloned().unwrap_or_else(|| e.clone()),
        Expr::Int(_) | Expr::Bool(_) | Expr::Empty | Expr::RwEmpty => e.clone(),
        Expr::Field(b, f) => Expr::Field(s(b), f.clone()),
        Expr::Old(x) => Expr::Old(s(x)),
        Expr::Pair(a, b) => Expr::Pair(s(a), s(b)),
        Expr::Fst(x) => Expr::Fst(s(x)),
        Expr::Snd(x) => Expr::Snd(s(x)),
        Expr::Arith(op, a, b) => Expr::Arith(*op, s(a), s(b)),
        Expr::Add(a, b) => Expr::Add(s(a), s(b)),
        Expr::Remove(a, b) => Expr::Remove(s(a), s(b)),
        Expr::RwAdd(a, b) => Expr::RwAdd(s(a), s(b)),
        Expr::RwRemove(a, b) => Expr::RwRemove(s(a), s(b)),
    }
}

/// Applies `g` to every expression directly under the formula structure.
pub fn map_exprs(f: &Formula, g: &mut impl FnMut(&Expr) -> Expr) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Cmp(op, a, b) => Formula::Cmp(*op, g(a), g(b)),
        Formula::Mem(a, b) => Formula::Mem(g(a), g(b)),
        Formula::SetEq(a, b) => Formula::SetEq(g(a), g(b)),
        Formula::InSet(a, b) => Formula::InSet(g(a), g(b)),
        Formula::IsEmpty(e) => Formula::IsEmpty(g(e)),
        Formula::Atom(e) => Formula::Atom(g(e)),
        Formula::Not(x) => Formula::not(map_exprs(x, g)),
        Formula::And(a, b) => Formula::and(map_exprs(a, g), map_exprs(b, g)),
        Formula::Or(a, b) => Formula::or(map_exprs(a, g), map_exprs(b, g)),
        Formula::Implies(a, b) => Formula::implies(map_exprs(a, g), map_exprs(b, g)),
        Formula::Iff(a, b) => Formula::iff(map_exprs(a, g), map_exprs(b, g)),
        Formula::Quant(q, b, body) => Formula::Quant(*q, b.clone(), Box::new(map_exprs(body, g))),
    }
}

/// Capture-avoiding substitution of free variables.
pub fn subst_formula(f: &Formula, map: &Subst) -> Formula {
    match f {
        Formula::Quant(q, binder, body) => {
            let mut inner = map.clone();
            inner.remove(&binder.name);
            let body_free = free_vars(body);
            let captured = inner.iter().any(|(k, v)| {
                body_free.contains(k) && {
                    let mut vs = BTreeSet::new();
                    free_vars_expr(v, &mut vs);
                    vs.contains(&binder.name)
                }
            });
            let mut binder = binder.clone();
            if captured {
                let mut avoid = body_free;
                for v in inner.values() {
                    free_vars_expr(v, &mut avoid);
                }
                let fresh = fresh_name(&binder.name, &avoid);
                inner.insert(binder.name.clone(), Expr::var(fresh.clone()));
                binder.name = fresh;
            }
            Formula::Quant(*q, binder, Box::new(subst_formula(body, &inner)))
        }
        Formula::Not(x) => Formula::not(subst_formula(x, map)),
        Formula::And(a, b) => Formula::and(subst_formula(a, map), subst_formula(b, map)),
        Formula::Or(a, b) => Formula::or(subst_formula(a, map), subst_formula(b, map)),
        Formula::Implies(a, b) => Formula::implies(subst_formula(a, map), subst_formula(b, map)),
        Formula::Iff(a, b) => Formula::iff(subst_formula(a, map), subst_formula(b, map)),
        _ => map_exprs(f, &mut |e| subst_expr(e, map)),
    }
}

/// First of `base_1`, `base_2`, ... not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    (1..)
        .map(|k| format!("{base}_{k}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded")
}

/// Renames free variables.
pub fn rename_formula(f: &Formula, names: &[(&str, &str)]) -> Formula {
    let map: Subst = names.iter().map(|(a, b)| (a.to_string(), Expr::var(*b))).collect();
    subst_formula(f, &map)
}

pub fn rename_expr(e: &Expr, names: &[(&str, &str)]) -> Expr {
    let map: Subst = names.iter().map(|(a, b)| (a.to_string(), Expr::var(*b))).collect();
    subst_expr(e, &map)
}

/// Eliminates `old`: `state` under `old` becomes `pre`, elsewhere `post`.
pub fn desugar_old(f: &Formula, state: &str, pre: &str, post: &str) -> Formula {
    let pre_map: Subst = [(state.to_string(), Expr::var(pre))].into();
    let post_map: Subst = [(state.to_string(), Expr::var(post))].into();
    fn walk(e: &Expr, pre: &Subst, post: &Subst) -> Expr {
        match e {
            Expr::Old(inner) => subst_expr(&strip_old(inner), pre),
            Expr::Var(_) => subst_expr(e, post),
            _ => {
                let s = |x: &Expr| Box::new(walk(x, pre, post));
                match e {
                    Expr::Field(b, f) => Expr::Field(s(b), f.clone()),
                    Expr::Pair(a, b) => Expr::Pair(s(a), s(b)),
                    Expr::Fst(x) => Expr::Fst(s(x)),
                    Expr::Snd(x) => Expr::Snd(s(x)),
                    Expr::Arith(op, a, b) => Expr::Arith(*op, s(a), s(b)),
                    Expr::Add(a, b) => Expr::Add(s(a), s(b)),
                    Expr::Remove(a, b) => Expr::Remove(s(a), s(b)),
                    Expr::RwAdd(a, b) => Expr::RwAdd(s(a), s(b)),
                    Expr::RwRemove(a, b) => Expr::RwRemove(s(a), s(b)),
                    _ => e.clone(),
                }
            }
        }
    }
    // Binders never shadow the state parameter, so a plain walk suffices.
    map_exprs(f, &mut |e| walk(e, &pre_map, &post_map))
}

fn strip_old(e: &Expr) -> Expr {
    match e {
        Expr::Old(inner) => strip_old(inner),
        _ => subst_expr(e, &Subst::new()),
    }
}

/// Equality up to consistent renaming of bound variables.
pub fn alpha_eq(a: &Formula, b: &Formula) -> bool {
    fn expr_eq(x: &Expr, y: &Expr, env: &[(String, String)]) -> bool {
        match (x, y) {
            (Expr::Var(u), Expr::Var(v)) => match env.iter().rev().find(|(l, r)| l == u || r == v) {
                Some((l, r)) => l == u && r == v,
                None => u == v,
            },
            (Expr::Field(b1, f1), Expr::Field(b2, f2)) => f1 == f2 && expr_eq(b1, b2, env),
            (Expr::Arith(o1, ..), Expr::Arith(o2, ..)) if o1 != o2 => false,
            _ => {
                std::mem::discriminant(x) == std::mem::discriminant(y)
                    && match (x, y) {
                        (Expr::Int(i), Expr::Int(j)) => i == j,
                        (Expr::Bool(i), Expr::Bool(j)) => i == j,
                        _ => {
                            let (cx, cy) = (x.children(), y.children());
                            cx.len() == cy.len() && cx.iter().zip(&cy).all(|(p, q)| expr_eq(p, q, env))
                        }
                    }
            }
        }
    }
    fn go(a: &Formula, b: &Formula, env: &mut Vec<(String, String)>) -> bool {
        match (a, b) {
            (Formula::Quant(q1, b1, body1), Formula::Quant(q2, b2, body2)) => {
                if q1 != q2 || b1.sort != b2.sort {
                    return false;
                }
                env.push((b1.name.clone(), b2.name.clone()));
                let r = go(body1, body2, env);
                env.pop();
                r
            }
            (Formula::Cmp(o1, ..), Formula::Cmp(o2, ..)) if o1 != o2 => false,
            _ => {
                if std::mem::discriminant(a) != std::mem::discriminant(b) {
                    return false;
                }
                let (ea, eb) = (a.exprs(), b.exprs());
                let (sa, sb) = (a.subformulas(), b.subformulas());
                ea.len() == eb.len()
                    && sa.len() == sb.len()
                    && ea.iter().zip(&eb).all(|(x, y)| expr_eq(x, y, env))
                    && sa.iter().zip(&sb).all(|(x, y)| go(x, y, env))
            }
        }
    }
    go(a, b, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Sort;

    #[test]
    fn substitution_avoids_capture() {
        // forall y. x < y   with x := y
        let f = Formula::forall("y", Sort::Int, Formula::cmp(crate::ast::CmpOp::Lt, Expr::var("x"), Expr::var("y")));
        let g = subst_formula(&f, &[("x".to_string(), Expr::var("y"))].into());
        let Formula::Quant(_, b, body) = &g else { unreachable!() };
        assert_ne!(b.name, "y");
        assert!(body.mentions_var("y"));
        assert!(!alpha_eq(&f, &g));
    }

    #[test]
    fn alpha_equivalence_ignores_binder_names() {
        let f = Formula::exists("v0", Sort::Int, Formula::eq(Expr::var("v0"), Expr::var("z")));
        let g = Formula::exists("w", Sort::Int, Formula::eq(Expr::var("w"), Expr::var("z")));
        let h = Formula::exists("z", Sort::Int, Formula::eq(Expr::var("z"), Expr::var("z")));
        assert!(alpha_eq(&f, &g));
        assert!(!alpha_eq(&f, &h));
    }

    #[test]
    fn old_refers_to_the_entry_state() {
        let f = Formula::SetEq(
            Expr::state_field("state", "courses"),
            Expr::add(Expr::var("c"), Expr::Old(Box::new(Expr::state_field("state", "courses")))),
        );
        let g = desugar_old(&f, "state", "pre", "post");
        let want = Formula::SetEq(
            Expr::state_field("post", "courses"),
            Expr::add(Expr::var("c"), Expr::state_field("pre", "courses")),
        );
        assert_eq!(g, want);
    }
}
