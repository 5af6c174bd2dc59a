use proptest::prelude::*;

use cise::ast::{ArithOp, CmpOp, FieldDecl, Quantifier};
use cise::checker::check_formula_valid;
use cise::eval::eval_formula;
use cise::pretty::{Printer, Style};
use cise::rewrite::alpha_eq;
use cise::sp::simplify;
use cise::{parse_formula, DomainBounds, Env, Expr, Formula, Sort, Spec, StateDecl, Value};

fn spec() -> Spec {
    let state = StateDecl {
        type_name: "state".into(),
        fields: vec![FieldDecl { name: "x".into(), sort: Sort::set(Sort::Int) }],
        invariant: Formula::True,
    };
    Spec { state, ops: Vec::new(), state_eq: None }
}

fn bounds() -> DomainBounds {
    DomainBounds::new(0, 2).unwrap()
}

fn free_vars() -> Vec<(String, Sort)> {
    vec![("a".into(), Sort::Int), ("b".into(), Sort::Int), ("s".into(), Sort::set(Sort::Int))]
}

fn int_term(bound: &'static [&'static str]) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0i64..3).prop_map(Expr::Int),
        prop::sample::select(bound).prop_map(Expr::var),
    ];
    leaf.prop_recursive(1, 3, 2, |inner| {
        (inner.clone(), inner).prop_map(|(x, y)| Expr::arith(ArithOp::Add, x, y))
    })
}

fn set_term() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![Just(Expr::Empty), Just(Expr::var("s"))];
    leaf.prop_recursive(2, 4, 1, |inner| {
        (prop::sample::select(&["a", "b"][..]), inner, any::<bool>()).prop_map(|(v, s, add)| {
            if add {
                Expr::add(Expr::var(v), s)
            } else {
                Expr::remove(Expr::var(v), s)
            }
        })
    })
}

fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop::sample::select(vec![CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge])
}

/// Formulas over `a`, `b : int` and `s : fset int`, with quantifiers
/// binding `x`.
fn formula() -> impl Strategy<Value = Formula> {
    const OUTER: &[&str] = &["a", "b"];
    const INNER: &[&str] = &["a", "b", "x"];
    let atom = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        (cmp_op(), int_term(OUTER), int_term(OUTER)).prop_map(|(op, x, y)| Formula::cmp(op, x, y)),
        (int_term(OUTER), set_term()).prop_map(|(e, s)| Formula::Mem(e, s)),
        set_term().prop_map(Formula::IsEmpty),
        (set_term(), set_term()).prop_map(|(x, y)| Formula::SetEq(x, y)),
        (any::<bool>(), cmp_op(), int_term(INNER), int_term(INNER), set_term()).prop_map(|(all, op, x, y, s)| {
            let body = Formula::or(Formula::cmp(op, x, y), Formula::Mem(Expr::var("x"), s));
            let q = if all { Quantifier::Forall } else { Quantifier::Exists };
            Formula::Quant(q, cise::ast::Binder::new("x", Sort::Int), Box::new(body))
        }),
    ];
    atom.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Formula::and(x, y)),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Formula::or(x, y)),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Formula::implies(x, y)),
            (inner.clone(), inner).prop_map(|(x, y)| Formula::iff(x, y)),
        ]
    })
}

/// Every environment over the free variables within bounds.
fn envs() -> Vec<Env> {
    let ints: Vec<i64> = bounds().ints().collect();
    let mut out = Vec::new();
    for &a in &ints {
        for &b in &ints {
            for mask in 0..1u32 << ints.len() {
                let s = Value::set_of_ints(ints.iter().copied().filter(|v| mask & (1 << v) != 0));
                out.push(Env::with([("a".to_string(), Value::Int(a)), ("b".to_string(), Value::Int(b)), ("s".to_string(), s)]));
            }
        }
    }
    out
}

fn truth(f: &Formula, env: &Env) -> bool {
    eval_formula(f, env, &spec().state, bounds()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplify_preserves_meaning(f in formula()) {
        let g = simplify(&f);
        for env in envs() {
            prop_assert_eq!(truth(&f, &env), truth(&g, &env), "{:?}", env.iter().collect::<Vec<_>>());
        }
    }

    #[test]
    fn checker_agrees_with_enumeration(f in formula()) {
        let valid = envs().iter().all(|env| truth(&f, env));
        let cex = check_formula_valid(&spec(), &f, &free_vars(), bounds()).unwrap();
        prop_assert_eq!(cex.is_none(), valid);
        if let Some(c) = cex {
            let env = Env::with(c.bindings.iter().cloned());
            prop_assert!(!truth(&f, &env));
        }
    }

    #[test]
    fn printed_formulas_parse_back(f in formula()) {
        let text = Printer::new(Style::FULL).formula(&f);
        let back = parse_formula(&text).unwrap();
        prop_assert!(alpha_eq(&simplify(&back), &simplify(&f)), "{}", text);
    }
}
