use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;

use cise::parser::ErrorKind;
use cise::token::Refinement;
use cise::{parse_spec, parse_tokens, Spec, TokenSystem};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn school() -> Spec {
    parse_spec(&fs::read_to_string(fixtures().join("school.cise")).unwrap()).unwrap()
}

fn corpus(dir: &str) -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(fixtures().join("tokens").join(dir))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "tok"))
        .collect();
    files.sort();
    files.iter().map(|p: &PathBuf| (stem(p), fs::read_to_string(p).unwrap())).collect()
}

fn stem(p: &Path) -> String {
    p.file_stem().unwrap().to_string_lossy().into_owned()
}

fn expected_kind(src: &str) -> String {
    let first = src.lines().next().unwrap_or_default();
    first.trim_start_matches("(* expect ").trim_end_matches(" *)").to_string()
}

#[test]
fn valid_corpus_parses() {
    let spec = school();
    let files = corpus("valid");
    assert!(files.len() >= 20);
    for (name, src) in files {
        if let Err(e) = parse_tokens(&src, &spec) {
            panic!("{name}: {e}");
        }
    }
}

#[test]
fn invalid_corpus_is_rejected_for_the_stated_reason() {
    let spec = school();
    let files = corpus("invalid");
    assert!(files.len() >= 15);
    for (name, src) in files {
        let want = expected_kind(&src);
        match parse_tokens(&src, &spec) {
            Ok(_) => panic!("{name}: accepted"),
            Err(errs) => {
                let kinds: Vec<String> = errs.0.iter().map(|e| format!("{:?}", e.kind)).collect();
                assert!(kinds.contains(&want), "{name}: wanted {want}, got {kinds:?}");
            }
        }
    }
}

#[test]
fn coarse_system_relates_enroll_and_remove() {
    let spec = school();
    let ts = parse_tokens(&fs::read_to_string(fixtures().join("coarse.tok")).unwrap(), &spec).unwrap();
    assert!(ts.conflict("t1", "t2") && ts.conflict("t2", "t1"));
    assert!(!ts.conflict("t1", "t3"));
    assert!(matches!(ts.refine(&spec, "enroll", "remCourse"), Refinement::Skip { .. }));
    assert!(matches!(ts.refine(&spec, "addCourse", "remCourse"), Refinement::Skip { .. }));
    assert_eq!(ts.refine(&spec, "enroll", "addCourse"), Refinement::Run { disequalities: vec![] });
}

#[test]
fn refined_system_injects_a_disequality() {
    let spec = school();
    let ts = parse_tokens(&fs::read_to_string(fixtures().join("refined.tok")).unwrap(), &spec).unwrap();
    assert_eq!(
        ts.refine(&spec, "enroll", "remCourse"),
        Refinement::Run { disequalities: vec![("course".into(), "course".into())] }
    );
}

#[test]
fn self_conflicting_token() {
    let spec = school();
    let ts = parse_tokens("token remCourse t1\nt1 conflicts t1\n", &spec).unwrap();
    assert!(matches!(ts.refine(&spec, "remCourse", "remCourse"), Refinement::Skip { .. }));
    let ts = parse_tokens("argtoken remCourse course t1\nt1 conflicts t1\n", &spec).unwrap();
    assert_eq!(
        ts.refine(&spec, "remCourse", "remCourse"),
        Refinement::Run { disequalities: vec![("course".into(), "course".into())] }
    );
}

#[test]
fn errors_carry_positions() {
    let spec = school();
    let errs = parse_tokens("token enroll t1\nt1 conflicts t9\n", &spec).unwrap_err();
    let e = &errs.0[0];
    assert_eq!(e.kind, ErrorKind::UndeclaredToken);
    assert_eq!((e.span.line, e.span.column), (2, 14));
}

const OPS: [(&str, &[&str]); 4] =
    [("addCourse", &["course"]), ("addStudent", &["student"]), ("enroll", &["student", "course"]), ("remCourse", &["course"])];

/// A random well-formed token file: declarations of distinct tokens,
/// then conflicts among them.
fn valid_file() -> impl Strategy<Value = (String, Vec<(usize, usize)>)> {
    (1usize..8)
        .prop_flat_map(|n| {
            let decls = prop::collection::vec((0usize..4, any::<bool>(), 0usize..2), n);
            let conflicts = prop::collection::vec((0..n, 0..n), 1..6);
            (decls, conflicts)
        })
        .prop_map(|(decls, conflicts)| {
            let mut src = String::new();
            for (i, (op, by_arg, arg)) in decls.iter().enumerate() {
                let (name, args) = OPS[*op];
                if *by_arg {
                    src += &format!("argtoken {name} {} k{i}\n", args[arg % args.len()]);
                } else {
                    src += &format!("token {name} k{i}\n");
                }
            }
            for (a, b) in &conflicts {
                src += &format!("k{a} conflicts k{b}\n");
            }
            (src, conflicts)
        })
}

proptest! {
    #[test]
    fn generated_systems_parse((src, conflicts) in valid_file()) {
        let ts: TokenSystem = parse_tokens(&src, &school()).unwrap();
        for (a, b) in conflicts {
            let (a, b) = (format!("k{a}"), format!("k{b}"));
            prop_assert!(ts.conflict(&a, &b) && ts.conflict(&b, &a));
        }
    }

    #[test]
    fn an_undeclared_operand_is_rejected((src, _) in valid_file(), right in any::<bool>()) {
        let mut lines: Vec<String> = src.lines().map(str::to_string).collect();
        let last = lines.last_mut().unwrap();
        let words: Vec<&str> = last.split(' ').collect();
        *last = if right { format!("{} conflicts zz", words[0]) } else { format!("zz conflicts {}", words[2]) };
        let errs = parse_tokens(&lines.join("\n"), &school()).unwrap_err();
        prop_assert!(errs.0.iter().any(|e| e.kind == ErrorKind::UndeclaredToken));
    }

    #[test]
    fn a_redeclared_token_is_rejected((src, _) in valid_file(), op in 0usize..4) {
        let src = format!("token {} k0\n{src}", OPS[op].0);
        let errs = parse_tokens(&src, &school()).unwrap_err();
        prop_assert!(errs.0.iter().any(|e| e.kind == ErrorKind::DuplicateToken));
    }
}
