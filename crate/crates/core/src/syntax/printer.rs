//! Pretty-printer producing text the parser reads back to the same AST.

use std::fmt::Write;

use super::ast::*;
use crate::term::Head;

// Binding strength; an operand printed in a slot that needs more is
// parenthesised.
const SEQ: u8 = 0;
const IF: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const NOT: u8 = 4;
const CMP: u8 = 5;
const ADD: u8 = 6;
const MUL: u8 = 7;
const ATOM: u8 = 8;

fn infix(name: &str) -> Option<(u8, &'static str)> {
    Some(match name {
        "or" => (OR, "or"),
        "and" => (AND, "and"),
        "<" => (CMP, "<"),
        "<=" => (CMP, "<="),
        ">" => (CMP, ">"),
        ">=" => (CMP, ">="),
        "+" => (ADD, "+"),
        "-" => (ADD, "-"),
        "*" => (MUL, "*"),
        "/" => (MUL, "/"),
        _ => return None,
    })
}

fn level(a: &ATerm) -> u8 {
    match a {
        ATerm::Seq(..) => SEQ,
        ATerm::If(..) => IF,
        ATerm::App(Head::Named(n), args) if args.len() == 2 => infix(n).map_or(ATOM, |(l, _)| l),
        ATerm::App(Head::Named(n), args) if n == "not" && args.len() == 1 => NOT,
        _ => ATOM,
    }
}

pub fn print_aterm(a: &ATerm) -> String {
    let mut out = String::new();
    aterm(&mut out, a, SEQ);
    out
}

fn aterm(out: &mut String, a: &ATerm, min: u8) {
    if level(a) < min {
        out.push('(');
        aterm(out, a, SEQ);
        out.push(')');
        return;
    }
    match a {
        ATerm::Var(v) => out.push_str(v),
        ATerm::Seq(s, rest) => {
            stmt(out, s);
            out.push_str("; ");
            aterm(out, rest, SEQ);
        }
        ATerm::If(c, t, e) => {
            out.push_str("if ");
            aterm(out, c, IF);
            out.push_str(" then ");
            aterm(out, t, IF);
            out.push_str(" else ");
            aterm(out, e, IF);
        }
        ATerm::App(Head::Int(i), args) if args.is_empty() => {
            let _ = write!(out, "{i}");
        }
        ATerm::App(Head::Tuple, args) => {
            out.push('<');
            let start = out.len();
            list(out, args, ADD);
            // `<-` would lex as an arrow
            if out[start..].starts_with('-') {
                out.insert(start, ' ');
            }
            out.push('>');
        }
        ATerm::App(Head::Named(n), args) if args.len() == 2 && infix(n).is_some() => {
            let (l, op) = infix(n).unwrap();
            // left associative, comparisons not associative at all
            let (lmin, rmin) = if l == CMP { (ADD, ADD) } else { (l, l + 1) };
            aterm(out, &args[0], lmin);
            let _ = write!(out, " {op} ");
            aterm(out, &args[1], rmin);
        }
        ATerm::App(Head::Named(n), args) if n == "not" && args.len() == 1 => {
            out.push_str("not ");
            aterm(out, &args[0], NOT);
        }
        ATerm::App(Head::Named(n), args) if args.is_empty() => out.push_str(n),
        ATerm::App(h, args) => {
            let _ = write!(out, "{h}(");
            list(out, args, IF);
            out.push(')');
        }
    }
}

fn list(out: &mut String, items: &[ATerm], min: u8) {
    for (k, a) in items.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        aterm(out, a, min);
    }
}

fn block(out: &mut String, stmts: &[Stmt]) {
    out.push('{');
    for (k, s) in stmts.iter().enumerate() {
        out.push_str(if k == 0 { " " } else { "; " });
        stmt(out, s);
    }
    out.push_str(if stmts.is_empty() { "}" } else { " }" });
}

fn stmt(out: &mut String, s: &Stmt) {
    match s {
        Stmt::Assign(AssignLhs::Var(v), rhs) => {
            let _ = write!(out, "{v} <- ");
            aterm(out, rhs, IF);
        }
        Stmt::Assign(AssignLhs::Tuple(vs), rhs) => {
            let _ = write!(out, "<{}> <- ", vs.join(", "));
            aterm(out, rhs, IF);
        }
        Stmt::If(c, a, b) => {
            out.push_str("if ");
            aterm(out, c, IF);
            out.push_str(" then ");
            block(out, a);
            if !b.is_empty() {
                out.push_str(" else ");
                block(out, b);
            }
        }
        Stmt::For { var, start, end, body } => {
            let _ = write!(out, "for {var} = ");
            aterm(out, start, IF);
            out.push_str(" step 1 until ");
            aterm(out, end, IF);
            out.push_str(" do ");
            block(out, body);
        }
        Stmt::While { cond, body } => {
            out.push_str("while ");
            aterm(out, cond, IF);
            out.push_str(" do ");
            block(out, body);
        }
        Stmt::Until { body, cond } => {
            out.push_str("do ");
            block(out, body);
            out.push_str(" until ");
            aterm(out, cond, IF);
        }
    }
}

/// A body with its top-level statements on separate lines.
fn body(out: &mut String, a: &ATerm, indent: &str) {
    let mut cur = a;
    while let ATerm::Seq(s, rest) = cur {
        out.push_str(indent);
        stmt(out, s);
        out.push_str(";\n");
        cur = rest;
    }
    out.push_str(indent);
    aterm(out, cur, SEQ);
    out.push('\n');
}

pub fn print_procedure(p: &Procedure) -> String {
    let mut out = String::new();
    match &p.kind {
        ProcKind::Rewrite { rules, strategy } => {
            let _ = write!(out, "rewrite {}", p.name);
            if let Some(Strategy::Innermost) = strategy {
                out.push_str(" @innermost");
            }
            out.push_str(" {\n");
            for r in rules {
                out.push_str("  ");
                aterm(&mut out, &ATerm::from(&r.lhs), ATOM);
                out.push_str(" -> ");
                aterm(&mut out, &r.rhs, SEQ);
                out.push_str(";\n");
            }
            out.push_str("}\n");
        }
        ProcKind::Flat { params, body: b } => {
            let _ = writeln!(out, "flat {}({}) {{", p.name, params.join(", "));
            body(&mut out, b, "  ");
            out.push_str("}\n");
        }
    }
    out
}

pub fn print_program(prog: &Program) -> String {
    let mut out = String::new();
    if !prog.constructors.is_empty() {
        out.push_str("constructors ");
        for (k, c) in prog.constructors.iter().enumerate() {
            if k > 0 {
                out.push_str(", ");
            }
            match c.arity {
                Some(n) => {
                    let _ = write!(out, "{}/{n}", c.name);
                }
                None => {
                    let _ = write!(out, "{}/*", c.name);
                }
            }
        }
        out.push_str(";\n");
    }
    for p in &prog.procedures {
        out.push('\n');
        out.push_str(&print_procedure(p));
    }
    out
}
