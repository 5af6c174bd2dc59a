//! Token-system files.
//!
//! One declaration per line: `token op t1 t2 ...` or `argtoken op arg t`,
//! followed by conflict lines `t1 conflicts t2`.

use std::collections::HashMap;

use super::{ErrorKind, ParseError, ParseErrors, SourceSpan};
use crate::ast::Spec;
use crate::token::TokenSystem;

const KEYWORDS: [&str; 3] = ["token", "argtoken", "conflicts"];

struct Word<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

/// Blanks out `(* ... *)` comments (nestable), keeping line structure.
fn strip_comments(src: &str) -> Result<String, (usize, usize)> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len());
    let (mut depth, mut i) = (0usize, 0usize);
    let (mut line, mut col, mut open_at) = (1, 1, (1, 1));
    while i < chars.len() {
        let two = (chars[i], chars.get(i + 1).copied());
        if two == ('(', Some('*')) {
            if depth == 0 {
                open_at = (line, col);
            }
            depth += 1;
            out.push_str("  ");
            i += 2;
            col += 2;
        } else if depth > 0 && two == ('*', Some(')')) {
            depth -= 1;
            out.push_str("  ");
            i += 2;
            col += 2;
        } else {
            let c = chars[i];
            if c == '\n' {
                line += 1;
                col = 1;
                out.push('\n');
            } else {
                col += 1;
                out.push(if depth > 0 { ' ' } else { c });
            }
            i += 1;
        }
    }
    if depth > 0 {
        return Err(open_at);
    }
    Ok(out)
}

fn valid_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&s)
}

enum Line<'a> {
    Token { op: Word<'a>, tokens: Vec<Word<'a>> },
    ArgToken { op: Word<'a>, arg: Word<'a>, token: Word<'a> },
    Conflict { left: Word<'a>, right: Word<'a> },
}

pub fn parse_tokens(src: &str, spec: &Spec) -> Result<TokenSystem, ParseErrors> {
    parse_tokens_named(src, spec, "<tokens>")
}

pub fn parse_tokens_named(src: &str, spec: &Spec, file: &str) -> Result<TokenSystem, ParseErrors> {
    let err = |line, column, length, kind, message: String| ParseError {
        span: SourceSpan { file: file.to_string(), line, column, length },
        kind,
        message,
    };
    let werr = |w: &Word, kind, message: String| err(w.line, w.column, w.text.len(), kind, message);
    let clean = strip_comments(src)
        .map_err(|(l, c)| ParseErrors(vec![err(l, c, 2, ErrorKind::Lexical, "unterminated comment".into())]))?;

    let mut lines = Vec::new();
    let mut errors = Vec::new();
    for (i, text) in clean.lines().enumerate() {
        let mut words = Vec::new();
        let mut rest = text;
        let mut offset = 0;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let len = rest[start..].find(char::is_whitespace).unwrap_or(rest.len() - start);
            words.push(Word { text: &rest[start..start + len], line: i + 1, column: offset + start + 1 });
            offset += start + len;
            rest = &rest[start + len..];
        }
        if words.is_empty() {
            continue;
        }
        let shape_ok = match words[0].text {
            "token" => words.len() >= 3,
            "argtoken" => words.len() == 4,
            _ => words.len() == 3 && words[1].text == "conflicts",
        };
        if !shape_ok {
            let w = &words[0];
            errors.push(err(
                w.line,
                1,
                text.trim_end().len(),
                ErrorKind::Syntax,
                "expected `token OP TOKEN...`, `argtoken OP ARG TOKEN` or `TOKEN conflicts TOKEN`".into(),
            ));
            continue;
        }
        let is_conflict = !matches!(words[0].text, "token" | "argtoken");
        let bad_ident = words.iter().enumerate().find(|(k, w)| {
            let keyword_slot = if is_conflict { *k == 1 } else { *k == 0 };
            !keyword_slot && !valid_ident(w.text)
        });
        if let Some((_, w)) = bad_ident {
            errors.push(werr(w, ErrorKind::Syntax, format!("`{}` is not a valid identifier", w.text)));
            continue;
        }
        let mut ws = words.into_iter();
        let first = ws.next().unwrap();
        lines.push(match first.text {
            "token" => Line::Token { op: ws.next().unwrap(), tokens: ws.collect() },
            "argtoken" => Line::ArgToken { op: ws.next().unwrap(), arg: ws.next().unwrap(), token: ws.next().unwrap() },
            _ => Line::Conflict { left: first, right: ws.nth(1).unwrap() },
        });
    }

    // Line of each token's declaration, for declared-before-use checks.
    let mut declared_at: HashMap<&str, usize> = HashMap::new();
    let mut ts = TokenSystem::default();
    for line in &lines {
        let (op, toks): (&Word, Vec<&Word>) = match line {
            Line::Token { op, tokens } => (op, tokens.iter().collect()),
            Line::ArgToken { op, token, .. } => (op, vec![token]),
            Line::Conflict { .. } => continue,
        };
        for t in toks {
            if declared_at.contains_key(t.text) {
                errors.push(werr(t, ErrorKind::DuplicateToken, format!("token `{}` is declared more than once", t.text)));
            } else {
                declared_at.insert(t.text, t.line);
            }
        }
        let Some(decl) = spec.op(op.text) else {
            errors.push(werr(op, ErrorKind::UnknownOperation, format!("unknown operation `{}`", op.text)));
            continue;
        };
        match line {
            Line::Token { tokens, .. } => {
                for t in tokens {
                    ts.op_tokens.push((op.text.to_string(), t.text.to_string()));
                }
            }
            Line::ArgToken { arg, token, .. } => {
                if decl.param(arg.text).is_none() {
                    errors.push(werr(
                        arg,
                        ErrorKind::UnknownArgument,
                        format!("operation `{}` has no argument `{}`", op.text, arg.text),
                    ));
                } else {
                    ts.arg_tokens.push((op.text.to_string(), arg.text.to_string(), token.text.to_string()));
                }
            }
            Line::Conflict { .. } => unreachable!(),
        }
    }

    let mut seen_conflict = false;
    let mut has_decl = false;
    for line in &lines {
        match line {
            Line::Conflict { left, right } => {
                seen_conflict = true;
                let mut ok = true;
                for w in [left, right] {
                    match declared_at.get(w.text) {
                        None => {
                            ok = false;
                            errors.push(werr(w, ErrorKind::UndeclaredToken, format!("token `{}` is not declared", w.text)));
                        }
                        Some(&at) if at > w.line => {
                            ok = false;
                            errors.push(werr(
                                w,
                                ErrorKind::ConflictBeforeDeclaration,
                                format!("token `{}` is used before its declaration on line {at}", w.text),
                            ));
                        }
                        Some(_) => {}
                    }
                }
                if ok {
                    ts.add_conflict(left.text, right.text);
                }
            }
            Line::Token { op, .. } | Line::ArgToken { op, .. } => {
                has_decl = true;
                let forward = errors.iter().any(|e| e.kind == ErrorKind::ConflictBeforeDeclaration);
                if seen_conflict && !forward {
                    errors.push(err(
                        op.line,
                        1,
                        0,
                        ErrorKind::Syntax,
                        "token declarations must precede conflict declarations".into(),
                    ));
                }
            }
        }
    }
    if errors.is_empty() && (!has_decl || !seen_conflict) {
        let what = if has_decl { "conflict declaration" } else { "token declaration" };
        let last = clean.lines().count().max(1);
        errors.push(err(last, 1, 0, ErrorKind::Syntax, format!("a token system needs at least one {what}")));
    }
    if errors.is_empty() {
        Ok(ts)
    } else {
        errors.sort_by_key(|e| (e.span.line, e.span.column));
        Err(ParseErrors(errors))
    }
}
