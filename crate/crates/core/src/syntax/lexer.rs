use num_bigint::BigInt;

use super::{ParseError, Pos};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Kw(&'static str),
    Int(BigInt),
    Wild,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    At,
    /// `->`
    Arrow,
    /// `<-`
    Larrow,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

const KEYWORDS: [&str; 14] = [
    "constructors",
    "rewrite",
    "flat",
    "if",
    "then",
    "else",
    "for",
    "step",
    "until",
    "do",
    "while",
    "and",
    "or",
    "not",
];

pub fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Kw(k) => format!("`{k}`"),
        Tok::Int(i) => format!("integer `{i}`"),
        Tok::Eof => "end of input".to_string(),
        other => {
            let s = match other {
                Tok::Wild => "__",
                Tok::LParen => "(",
                Tok::RParen => ")",
                Tok::LBrace => "{",
                Tok::RBrace => "}",
                Tok::LBracket => "[",
                Tok::RBracket => "]",
                Tok::Comma => ",",
                Tok::Semi => ";",
                Tok::At => "@",
                Tok::Arrow => "->",
                Tok::Larrow => "<-",
                Tok::Lt => "<",
                Tok::Le => "<=",
                Tok::Gt => ">",
                Tok::Ge => ">=",
                Tok::EqEq => "==",
                Tok::Eq => "=",
                Tok::Plus => "+",
                Tok::Minus => "-",
                Tok::Star => "*",
                Tok::Slash => "/",
                _ => unreachable!(),
            };
            format!("`{s}`")
        }
    }
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let text: String = chars[start..i].iter().collect();
            out.push((Tok::Int(text.parse().expect("digits")), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let text: String = chars[start..i].iter().collect();
            let tok = if text == "__" {
                Tok::Wild
            } else if let Some(kw) = KEYWORDS.iter().find(|k| **k == text) {
                Tok::Kw(kw)
            } else {
                Tok::Ident(text)
            };
            out.push((tok, pos));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('<', Some('-')) => (Tok::Larrow, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('=', Some('=')) => (Tok::EqEq, 2),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            (',', _) => (Tok::Comma, 1),
            (';', _) => (Tok::Semi, 1),
            ('@', _) => (Tok::At, 1),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('=', _) => (Tok::Eq, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            _ => {
                return Err(ParseError::new(pos, format!("unexpected character `{c}`")));
            }
        };
        advance(&mut i, &mut line, &mut col, len);
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn arrows_and_comparisons() {
        assert_eq!(
            toks("x <- a <= b -> c < d"),
            vec![
                Tok::Ident("x".into()),
                Tok::Larrow,
                Tok::Ident("a".into()),
                Tok::Le,
                Tok::Ident("b".into()),
                Tok::Arrow,
                Tok::Ident("c".into()),
                Tok::Lt,
                Tok::Ident("d".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_wildcards_keywords() {
        assert_eq!(
            toks("# note\nif __ then _x"),
            vec![Tok::Kw("if"), Tok::Wild, Tok::Kw("then"), Tok::Ident("_x".into()), Tok::Eof]
        );
    }

    #[test]
    fn positions_track_lines() {
        let t = lex("a\n  b").unwrap();
        assert_eq!(t[1].1, Pos { line: 2, col: 3 });
    }

    #[test]
    fn rejects_stray_characters() {
        let e = lex("a $ b").unwrap_err();
        assert_eq!(e.pos, Pos { line: 1, col: 3 });
    }
}
