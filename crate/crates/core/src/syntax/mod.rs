//! Concrete syntax: lexer, parser and pretty-printer.
//!
//! ```text
//! program   := decl*
//! decl      := "constructors" NAME "/" (INT | "*") ("," NAME "/" (INT | "*"))* ";"
//!            | "rewrite" NAME ("@" "innermost")? "{" (rule (";" rule)* ";"?)? "}"
//!            | "flat" NAME "(" (VAR ("," VAR)*)? ")" "{" aterm ";"? "}"
//! rule      := term "->" aterm
//! aterm     := stmt ";" aterm | expr
//! stmt      := VAR "<-" expr | VAR "[" expr "]" "<-" expr | "<" VAR ("," VAR)* ">" "<-" expr
//!            | "if" expr "then" block ("else" block)?
//!            | "for" VAR "=" expr "step" "1" "until" expr "do" block
//!            | "while" expr "do" block | "do" block "until" expr
//! block     := "{" (stmt (";" stmt)* ";"?)? "}"
//! expr      := infix expression over "or" "and" "not" "<" "<=" ">" ">=" "==" "+" "-" "*" "/"
//! primary   := INT | "-" INT | "__" | NAME | NAME "(" args ")" | "<" args ">"
//!            | "(" aterm ")" | "if" expr "then" aterm "else" aterm | primary "[" expr "]"
//! ```

mod ast;
mod lexer;
mod parser;
pub mod printer;

use std::fmt;

pub use ast::*;
pub use parser::{parse_program, parse_query, parse_term};
pub use printer::{print_aterm, print_program};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    NestedAssignment,
    UnknownSymbol,
    ArityMismatch,
    NonGround,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError { pos, message: message.into(), kind: ParseErrorKind::Syntax }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}
