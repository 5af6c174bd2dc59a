use super::{ErrorKind, ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// `[@name]`
    Attr(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
    pub len: usize,
}

const SYMBOLS: [&str; 26] = [
    "<->", "->", "<-", "<=", "<>", ">=", "==", "/\\", "\\/", "&&", "||", "(", ")", "{", "}", "[", "]", ",", ":", ";",
    ".", "=", "<", ">", "+", "-",
];

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(src: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, len, message: String| ParseError {
        span: SourceSpan { file: file.to_string(), line, column, length: len },
        kind: ErrorKind::Lexical,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let (start_line, start_col) = (line, col);
            let mut depth = 0usize;
            loop {
                if i >= chars.len() {
                    return Err(err(start_line, start_col, 2, "unterminated comment".into()));
                }
                if chars[i] == '(' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    i += 2;
                    col += 2;
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&')') {
                    depth -= 1;
                    i += 2;
                    col += 2;
                    if depth == 0 {
                        break;
                    }
                } else if chars[i] == '\n' {
                    i += 1;
                    line += 1;
                    col = 1;
                } else {
                    i += 1;
                    col += 1;
                }
            }
            continue;
        }
        let start = i;
        let tok = if is_ident_start(c) {
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            match text.parse() {
                Ok(v) => Tok::Int(v),
                Err(_) => return Err(err(line, col, i - start, format!("integer literal `{text}` is too large"))),
            }
        } else if c == '[' && chars.get(i + 1) == Some(&'@') {
            i += 2;
            let name_start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            if chars.get(i) != Some(&']') || name_start == i {
                return Err(err(line, col, i - start, "malformed attribute, expected `[@name]`".into()));
            }
            i += 1;
            Tok::Attr(chars[name_start..i - 1].iter().collect())
        } else {
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    i += s.len();
                    Tok::Sym(s)
                }
                None => return Err(err(line, col, 1, format!("unexpected character `{c}`"))),
            }
        };
        let len = i - start;
        out.push(Token { tok, line, column: col, len });
        col += len;
    }
    out.push(Token { tok: Tok::Eof, line, column: col, len: 0 });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src, "t").unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn longest_symbol_wins() {
        assert_eq!(
            toks("a <-> b <- c <= d"),
            vec![
                Tok::Ident("a".into()),
                Tok::Sym("<->"),
                Tok::Ident("b".into()),
                Tok::Sym("<-"),
                Tok::Ident("c".into()),
                Tok::Sym("<="),
                Tok::Ident("d".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn nested_comments_and_attributes() {
        assert_eq!(
            toks("(* a (* b *) c *) type [@state]"),
            vec![Tok::Ident("type".into()), Tok::Attr("state".into()), Tok::Eof]
        );
        let e = lex("x\n  (* open", "f.cise").unwrap_err();
        assert_eq!((e.span.line, e.span.column), (2, 3));
    }

    #[test]
    fn positions_are_one_based() {
        let t = lex("ab\n cd", "f").unwrap();
        assert_eq!((t[0].line, t[0].column), (1, 1));
        assert_eq!((t[1].line, t[1].column, t[1].len), (2, 2, 2));
    }
}
