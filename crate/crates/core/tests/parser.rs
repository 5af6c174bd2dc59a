use std::fs;
use std::path::PathBuf;

use cise::ast::{Formula, Sort, Stmt};
use cise::parser::{parse_spec_named, ErrorKind};
use cise::pretty::print_spec;
use cise::typecheck::{typecheck, DiagnosticKind};
use cise::{parse_formula, parse_spec};

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn school_spec_parses_with_four_ops_and_user_equality() {
    let spec = parse_spec(&fixture("school.cise")).unwrap();
    let names: Vec<&str> = spec.ops.iter().map(|o| o.name.as_str()).collect();
    assert_eq!(names, ["addCourse", "addStudent", "enroll", "remCourse"]);
    let eq = spec.state_eq.as_ref().unwrap();
    assert_eq!(eq.name, "state_equality");
    assert_eq!(eq.body.conjuncts().len(), 3);
    assert!(typecheck(&spec).is_empty());

    let enroll = spec.op("enroll").unwrap();
    assert_eq!(enroll.params.len(), 2);
    assert_eq!(enroll.requires.len(), 3);
    assert_eq!(enroll.state_param, "state");
    assert_eq!(spec.state.fields[2].sort, Sort::set(Sort::pair(Sort::Int, Sort::Int)));
}

#[test]
fn requires_clause_order_is_preserved() {
    let spec = parse_spec(&fixture("school.cise")).unwrap();
    let rem = spec.op("remCourse").unwrap();
    assert_eq!(rem.requires[0].to_string(), "course > 0");
    assert!(matches!(rem.requires[1], Formula::Quant(..)));
    assert!(matches!(rem.requires[2], Formula::Mem(..)));
}

#[test]
fn generic_skeleton_has_no_user_equality() {
    let src = "type tau [@state] = { mutable x : int }\n\
               let f (a : int) (state : tau) requires { a > 0 } ensures { true } = state.x <- a\n\
               let g (b : int) (state : tau) requires { true } ensures { true } = state.x <- b";
    let spec = parse_spec(src).unwrap();
    assert_eq!(spec.ops.len(), 2);
    assert!(spec.state_eq.is_none());
}

#[test]
fn empty_file_reports_missing_state() {
    let e = parse_spec("").unwrap_err();
    assert_eq!(e.kinds(), vec![ErrorKind::MissingState]);
    assert!(e.to_string().contains("no [@state] type declared"));
}

#[test]
fn two_state_types_are_rejected() {
    let e = parse_spec("type a [@state] = { x : int }\ntype b [@state] = { y : int }").unwrap_err();
    assert_eq!(e.kinds(), vec![ErrorKind::MultipleState]);
    assert_eq!(e.0[0].span.line, 2);
}

#[test]
fn syntax_errors_carry_file_line_column() {
    let e = parse_spec_named("type t [@state] = { x : int }\nlet f (s : t) = s.x <- ", "bad.cise").unwrap_err();
    assert_eq!(e.kinds(), vec![ErrorKind::Syntax]);
    assert!(e.to_string().starts_with("bad.cise:2:"), "{e}");
}

#[test]
fn pair_added_to_int_set_is_a_sort_mismatch() {
    let src = "type t [@state] = { mutable courses : fset int }\n\
               let f (state : t) = state.courses <- add((1,2), state.courses)";
    let e = parse_spec(src).unwrap_err();
    assert_eq!(e.kinds(), vec![ErrorKind::Sort(DiagnosticKind::SortMismatch)]);
    assert!(e.to_string().contains("body of f"), "{e}");
    assert_eq!(e.0[0].span.line, 2);
}

#[test]
fn invariant_over_undeclared_field_is_one_unknown_identifier() {
    let src = "type t [@state] = { mutable courses : fset int } invariant { forall i. mem i teachers }";
    let e = parse_spec(src).unwrap_err();
    assert_eq!(e.kinds(), vec![ErrorKind::Sort(DiagnosticKind::UnknownIdentifier)]);
    assert!(e.to_string().contains("invariant"));
}

#[test]
fn old_outside_ensures_is_rejected() {
    let src = "type t [@state] = { mutable xs : fset int }\n\
               let f (state : t) requires { is_empty (old state).xs } = ()";
    let e = parse_spec(src).unwrap_err();
    assert_eq!(e.kinds(), vec![ErrorKind::Sort(DiagnosticKind::IllegalOld)]);
}

#[test]
fn parameter_named_like_a_field_is_rejected() {
    let src = "type t [@state] = { mutable xs : fset int }\nlet f (xs : int) (state : t) = ()";
    let e = parse_spec(src).unwrap_err();
    assert_eq!(e.kinds(), vec![ErrorKind::Sort(DiagnosticKind::Duplicate)]);
}

#[test]
fn nested_sets_are_rejected() {
    let e = parse_spec("type t [@state] = { mutable xs : fset (fset int) }").unwrap_err();
    assert_eq!(e.kinds(), vec![ErrorKind::Sort(DiagnosticKind::UnsupportedSort)]);
}

#[test]
fn untagged_type_is_unsupported() {
    let e = parse_spec("type t [@state] = { x : int }\ntype u = { y : int }").unwrap_err();
    assert_eq!(e.kinds(), vec![ErrorKind::Unsupported]);
}

#[test]
fn sp_input_form_parses_without_let() {
    let spec = parse_spec(&fixture("school_sp.cise")).unwrap();
    let op = spec.op("addCourse").unwrap();
    assert!(op.ensures.is_empty());
    assert_eq!(op.body.to_string(), "state.courses <- add(course, state.courses)");
}

#[test]
fn every_fixture_round_trips_through_the_printer() {
    for name in ["school.cise", "school_sp.cise", "generic.cise", "empty-ops.cise", "school_crdt.cise", "school_crdt_enrolled.cise"] {
        let spec = parse_spec(&fixture(name)).unwrap();
        let printed = print_spec(&spec);
        let again = parse_spec(&printed).unwrap_or_else(|e| panic!("{name}: {e}\n{printed}"));
        assert_eq!(spec, again, "{name}:\n{printed}");
    }
}

#[test]
fn formulas_follow_the_precedence_table() {
    let f = parse_formula("a -> b <-> c").unwrap();
    assert!(matches!(f, Formula::Implies(..)));
    let g = parse_formula("not mem x s /\\ y = 1 \\/ z").unwrap();
    let Formula::Or(lhs, _) = g else { panic!() };
    let Formula::And(neg, _) = *lhs else { panic!() };
    assert!(matches!(*neg, Formula::Not(_)));
    let h = parse_formula("forall i, j. mem (i, j) e -> mem i s").unwrap();
    let Formula::Quant(_, _, body) = h else { panic!() };
    let Formula::Quant(_, _, body) = *body else { panic!() };
    assert!(matches!(*body, Formula::Implies(..)));
}

#[test]
fn curried_and_call_style_builtins_agree() {
    assert_eq!(parse_formula("mem x (add 1 s)").unwrap(), parse_formula("mem(x, add(1, s))").unwrap());
    assert_eq!(parse_formula("s1 == s2").unwrap(), parse_formula("equal s1 s2").unwrap());
}

#[test]
fn skip_forms_are_equivalent() {
    for body in ["()", "skip", "begin end"] {
        let spec = parse_spec(&format!("type t [@state] = {{ x : int }}\nlet f (s : t) = {body}")).unwrap();
        assert_eq!(spec.ops[0].body, Stmt::Skip);
    }
}
