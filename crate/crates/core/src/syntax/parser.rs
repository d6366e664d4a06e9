use std::collections::HashSet;

use num_bigint::BigInt;

use super::ast::*;
use super::lexer::{describe, lex, Tok};
use super::{ParseError, ParseErrorKind};
use crate::term::{Head, PlainTerm, Signature};

type PResult<T> = Result<T, ParseError>;

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
}

fn binop(op: &str, l: ATerm, r: ATerm) -> ATerm {
    ATerm::App(Head::named(op), vec![l, r])
}

impl Parser {
    fn new(src: &str) -> PResult<Parser> {
        Ok(Parser { toks: lex(src)?, i: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let j = (self.i + n).min(self.toks.len() - 1);
        &self.toks[j].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError::new(self.pos(), msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.err(format!("expected {wanted}, found {}", describe(self.peek())))
    }

    fn expect(&mut self, t: Tok) -> PResult<Pos> {
        let pos = self.pos();
        if self.eat(&t) {
            Ok(pos)
        } else {
            self.unexpected(&describe(&t))
        }
    }

    fn expect_kw(&mut self, kw: &'static str) -> PResult<()> {
        self.expect(Tok::Kw(kw)).map(|_| ())
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, pos))
            }
            _ => self.unexpected("an identifier"),
        }
    }

    // ---- declarations ----

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        loop {
            match self.peek() {
                Tok::Kw("constructors") => {
                    self.bump();
                    loop {
                        let (name, pos) = self.ident()?;
                        self.expect(Tok::Slash)?;
                        let arity = match self.bump() {
                            Tok::Int(n) => Some(
                                usize::try_from(n)
                                    .map_err(|_| ParseError::new(pos, "constructor arity out of range"))?,
                            ),
                            Tok::Star => None,
                            _ => return Err(ParseError::new(pos, "expected an arity or `*`")),
                        };
                        prog.constructors.push(CtorDecl { name, arity, pos });
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::Semi)?;
                }
                Tok::Kw("rewrite") => {
                    let p = self.rewrite_proc()?;
                    push_proc(&mut prog, p)?;
                }
                Tok::Kw("flat") => {
                    let p = self.flat_proc()?;
                    push_proc(&mut prog, p)?;
                }
                Tok::Eof => break,
                _ => return self.unexpected("`constructors`, `rewrite` or `flat`"),
            }
        }
        Ok(prog)
    }

    fn rewrite_proc(&mut self) -> PResult<Procedure> {
        let pos = self.pos();
        self.expect_kw("rewrite")?;
        let (name, _) = self.ident()?;
        let mut strategy = None;
        if self.eat(&Tok::At) {
            let (s, spos) = self.ident()?;
            if s != "innermost" {
                return Err(ParseError::new(spos, format!("unsupported strategy `{s}`")));
            }
            strategy = Some(Strategy::Innermost);
        }
        self.expect(Tok::LBrace)?;
        let mut rules = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let rpos = self.pos();
            let lhs = self.expr()?;
            let lhs = match lhs.to_plain() {
                Some(t @ PlainTerm::Node(Head::Named(_), _)) if !contains_if(&t) => t,
                _ => return Err(ParseError::new(rpos, "rule left-hand side must be a term f(t1, .., tn)")),
            };
            if lhs.head().and_then(Head::as_name) != Some(name.as_str()) {
                return Err(ParseError::new(
                    rpos,
                    format!("rule for `{}` inside procedure `{name}`", lhs.head().unwrap()),
                ));
            }
            self.expect(Tok::Arrow)?;
            let rhs = self.aterm()?;
            rules.push(Rule { lhs, rhs, pos: rpos });
            if !self.eat(&Tok::Semi) {
                self.expect(Tok::RBrace)?;
                break;
            }
        }
        let Some(arity) = rules.first().map(|r| r.lhs.args().len()) else {
            return Err(ParseError::new(pos, format!("rewrite procedure `{name}` has no rules")));
        };
        if let Some(r) = rules.iter().find(|r| r.lhs.args().len() != arity) {
            return Err(ParseError::new(r.pos, format!("rule arity differs from `{name}/{arity}`")));
        }
        Ok(Procedure { name, arity, kind: ProcKind::Rewrite { rules, strategy }, pos })
    }

    fn flat_proc(&mut self) -> PResult<Procedure> {
        let pos = self.pos();
        self.expect_kw("flat")?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params: Vec<String> = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let (p, ppos) = self.ident()?;
                if params.contains(&p) {
                    return Err(ParseError::new(ppos, format!("repeated formal parameter `{p}`")));
                }
                params.push(p);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        self.expect(Tok::LBrace)?;
        let body = self.aterm()?;
        self.eat(&Tok::Semi);
        self.expect(Tok::RBrace)?;
        Ok(Procedure { name, arity: params.len(), kind: ProcKind::Flat { params, body }, pos })
    }

    // ---- aterms and statements ----

    fn aterm(&mut self) -> PResult<ATerm> {
        let stmt = match self.peek() {
            Tok::Kw("for") | Tok::Kw("while") | Tok::Kw("do") => {
                let s = self.loop_stmt()?;
                if !self.eat(&Tok::Semi) {
                    return self.err("a loop must be followed by `;` and an expression returning a value");
                }
                s
            }
            Tok::Kw("if") => {
                let save = self.i;
                self.bump();
                let cond = self.expr()?;
                self.expect_kw("then")?;
                if *self.peek() != Tok::LBrace {
                    self.i = save;
                    return self.expr();
                }
                let s = self.stmt_if_tail(cond)?;
                self.expect(Tok::Semi)?;
                s
            }
            _ if self.at_assignment() => {
                let s = self.assignment()?;
                if !self.eat(&Tok::Semi) {
                    return self.err("an assignment must be followed by `;` and an expression");
                }
                s
            }
            _ => return self.expr(),
        };
        let rest = self.aterm()?;
        Ok(ATerm::Seq(Box::new(stmt), Box::new(rest)))
    }

    fn at_assignment(&self) -> bool {
        match (self.peek(), self.peek_at(1)) {
            (Tok::Ident(_), Tok::Larrow) => true,
            (Tok::Ident(_), Tok::LBracket) => {
                let mut depth = 0usize;
                let mut k = 1;
                loop {
                    match self.peek_at(k) {
                        Tok::LBracket => depth += 1,
                        Tok::RBracket => {
                            depth -= 1;
                            if depth == 0 {
                                return *self.peek_at(k + 1) == Tok::Larrow;
                            }
                        }
                        Tok::Eof => return false,
                        _ => {}
                    }
                    k += 1;
                }
            }
            (Tok::Lt, Tok::Ident(_)) => {
                let mut k = 1;
                loop {
                    match (self.peek_at(k), self.peek_at(k + 1)) {
                        (Tok::Ident(_), Tok::Comma) => k += 2,
                        (Tok::Ident(_), Tok::Gt) => return *self.peek_at(k + 2) == Tok::Larrow,
                        _ => return false,
                    }
                }
            }
            _ => false,
        }
    }

    fn assignment(&mut self) -> PResult<Stmt> {
        if self.eat(&Tok::Lt) {
            let mut vars = Vec::new();
            loop {
                let (v, vpos) = self.ident()?;
                if vars.contains(&v) {
                    return Err(ParseError::new(vpos, format!("`{v}` assigned twice in one tuple")));
                }
                vars.push(v);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::Gt)?;
            self.expect(Tok::Larrow)?;
            let rhs = self.assign_rhs()?;
            return Ok(Stmt::Assign(AssignLhs::Tuple(vars), rhs));
        }
        let (v, _) = self.ident()?;
        if self.eat(&Tok::LBracket) {
            // x[i] <- e   is   x <- d_replace(i, e, x)
            let idx = self.expr()?;
            self.expect(Tok::RBracket)?;
            self.expect(Tok::Larrow)?;
            let rhs = self.assign_rhs()?;
            let upd = ATerm::app("d_replace", vec![idx, rhs, ATerm::Var(v.clone())]);
            return Ok(Stmt::Assign(AssignLhs::Var(v), upd));
        }
        self.expect(Tok::Larrow)?;
        let rhs = self.assign_rhs()?;
        Ok(Stmt::Assign(AssignLhs::Var(v), rhs))
    }

    fn assign_rhs(&mut self) -> PResult<ATerm> {
        let pos = self.pos();
        let rhs = self.expr()?;
        if rhs.contains_seq() {
            return Err(ParseError {
                pos,
                message: "no assignment is allowed on the right-hand side of an assignment".into(),
                kind: ParseErrorKind::NestedAssignment,
            });
        }
        Ok(rhs)
    }

    fn loop_stmt(&mut self) -> PResult<Stmt> {
        match self.bump() {
            Tok::Kw("for") => {
                let (var, _) = self.ident()?;
                self.expect(Tok::Eq)?;
                let start = self.expr()?;
                self.expect_kw("step")?;
                let spos = self.pos();
                match self.bump() {
                    Tok::Int(n) if n == BigInt::from(1) => {}
                    _ => return Err(ParseError::new(spos, "only `step 1` is supported")),
                }
                self.expect_kw("until")?;
                let end = self.expr()?;
                self.expect_kw("do")?;
                let body = self.stmt_list()?;
                Ok(Stmt::For { var, start, end, body })
            }
            Tok::Kw("while") => {
                let cond = self.expr()?;
                self.expect_kw("do")?;
                let body = self.stmt_list()?;
                Ok(Stmt::While { cond, body })
            }
            Tok::Kw("do") => {
                let body = self.stmt_list()?;
                self.expect_kw("until")?;
                let cond = self.expr()?;
                Ok(Stmt::Until { body, cond })
            }
            _ => unreachable!("loop_stmt called off a loop keyword"),
        }
    }

    /// After `if cond then`, at `{`.
    fn stmt_if_tail(&mut self, cond: ATerm) -> PResult<Stmt> {
        let then = self.stmt_list()?;
        let els = if self.eat(&Tok::Kw("else")) { self.stmt_list()? } else { Vec::new() };
        Ok(Stmt::If(cond, then, els))
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        match self.peek() {
            Tok::Kw("for") | Tok::Kw("while") | Tok::Kw("do") => self.loop_stmt(),
            Tok::Kw("if") => {
                self.bump();
                let cond = self.expr()?;
                self.expect_kw("then")?;
                if *self.peek() != Tok::LBrace {
                    return self.err("a conditional statement needs `{ .. }` branches");
                }
                self.stmt_if_tail(cond)
            }
            _ if self.at_assignment() => self.assignment(),
            _ => self.unexpected("a statement"),
        }
    }

    fn stmt_list(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            out.push(self.stmt()?);
            if !self.eat(&Tok::Semi) {
                self.expect(Tok::RBrace)?;
                break;
            }
        }
        Ok(out)
    }

    // ---- expressions ----

    pub(super) fn expr(&mut self) -> PResult<ATerm> {
        let mut l = self.and_expr()?;
        while self.eat(&Tok::Kw("or")) {
            l = binop("or", l, self.and_expr()?);
        }
        Ok(l)
    }

    fn and_expr(&mut self) -> PResult<ATerm> {
        let mut l = self.not_expr()?;
        while self.eat(&Tok::Kw("and")) {
            l = binop("and", l, self.not_expr()?);
        }
        Ok(l)
    }

    fn not_expr(&mut self) -> PResult<ATerm> {
        if self.eat(&Tok::Kw("not")) {
            return Ok(ATerm::app("not", vec![self.not_expr()?]));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<ATerm> {
        let l = self.add_expr()?;
        let op = match self.peek() {
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "eq",
            _ => return Ok(l),
        };
        self.bump();
        let r = self.add_expr()?;
        Ok(binop(op, l, r))
    }

    fn add_expr(&mut self) -> PResult<ATerm> {
        let mut l = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => "+",
                Tok::Minus => "-",
                _ => return Ok(l),
            };
            self.bump();
            l = binop(op, l, self.mul_expr()?);
        }
    }

    fn mul_expr(&mut self) -> PResult<ATerm> {
        let mut l = self.postfix()?;
        loop {
            let op = match self.peek() {
                Tok::Star => "*",
                Tok::Slash => "/",
                _ => return Ok(l),
            };
            self.bump();
            l = binop(op, l, self.postfix()?);
        }
    }

    fn postfix(&mut self) -> PResult<ATerm> {
        let mut t = self.primary()?;
        while self.eat(&Tok::LBracket) {
            let idx = self.expr()?;
            self.expect(Tok::RBracket)?;
            t = ATerm::app("arg", vec![idx, t]);
        }
        Ok(t)
    }

    fn primary(&mut self) -> PResult<ATerm> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(ATerm::App(Head::Int(n), vec![]))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Int(n) => Ok(ATerm::App(Head::Int(-n), vec![])),
                    _ => self.err("`-` is only allowed in front of an integer literal"),
                }
            }
            Tok::Wild => {
                self.bump();
                Ok(ATerm::app("none", vec![]))
            }
            Tok::Ident(name) => {
                self.bump();
                if !self.eat(&Tok::LParen) {
                    return Ok(ATerm::Var(name));
                }
                let mut args = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        args.push(self.expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RParen)?;
                }
                Ok(ATerm::App(Head::Named(name), args))
            }
            Tok::Lt => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat(&Tok::Gt) {
                    loop {
                        // `>` closes the tuple, so elements stop below comparisons
                        items.push(self.add_expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::Gt)?;
                }
                Ok(ATerm::App(Head::Tuple, items))
            }
            Tok::LParen => {
                self.bump();
                let a = self.aterm()?;
                self.expect(Tok::RParen)?;
                Ok(a)
            }
            Tok::Kw("if") => {
                self.bump();
                let c = self.expr()?;
                self.expect_kw("then")?;
                let t = self.aterm()?;
                self.expect_kw("else")?;
                let e = self.aterm()?;
                Ok(ATerm::if_(c, t, e))
            }
            _ => self.unexpected("a term"),
        }
    }
}

fn contains_if(t: &PlainTerm) -> bool {
    match t {
        PlainTerm::Var(_) => false,
        PlainTerm::Node(h, args) => *h == Head::If || args.iter().any(contains_if),
    }
}

fn push_proc(prog: &mut Program, p: Procedure) -> PResult<()> {
    if prog.procedure(&p.name).is_some() {
        return Err(ParseError::new(p.pos, format!("procedure `{}` defined twice", p.name)));
    }
    prog.procedures.push(p);
    Ok(())
}

// ---- identifier resolution ----
//
// The parser reads every bare identifier as a variable. Afterwards, an
// identifier that is not bound in its procedure (formal, rule variable,
// assignment target or loop variable) and names a known 0-ary symbol becomes
// that constant.

fn assigned_vars(a: &ATerm, out: &mut HashSet<String>) {
    match a {
        ATerm::Var(_) => {}
        ATerm::App(_, args) => args.iter().for_each(|x| assigned_vars(x, out)),
        ATerm::If(c, t, e) => {
            assigned_vars(c, out);
            assigned_vars(t, out);
            assigned_vars(e, out);
        }
        ATerm::Seq(s, rest) => {
            stmt_assigned(s, out);
            assigned_vars(rest, out);
        }
    }
}

fn stmt_assigned(s: &Stmt, out: &mut HashSet<String>) {
    match s {
        Stmt::Assign(lhs, rhs) => {
            out.extend(lhs.vars().into_iter().map(String::from));
            assigned_vars(rhs, out);
        }
        Stmt::If(c, a, b) => {
            assigned_vars(c, out);
            a.iter().chain(b).for_each(|s| stmt_assigned(s, out));
        }
        Stmt::For { var, start, end, body } => {
            out.insert(var.clone());
            assigned_vars(start, out);
            assigned_vars(end, out);
            body.iter().for_each(|s| stmt_assigned(s, out));
        }
        Stmt::While { cond, body } | Stmt::Until { body, cond } => {
            assigned_vars(cond, out);
            body.iter().for_each(|s| stmt_assigned(s, out));
        }
    }
}

fn is_constant(sig: &Signature, name: &str) -> bool {
    sig.kind(&Head::named(name), 0).is_some()
}

fn resolve_aterm(a: ATerm, bound: &HashSet<String>, sig: &Signature) -> ATerm {
    match a {
        ATerm::Var(v) if !bound.contains(&v) && is_constant(sig, &v) => ATerm::App(Head::Named(v), vec![]),
        ATerm::Var(v) => ATerm::Var(v),
        ATerm::App(h, args) => ATerm::App(h, args.into_iter().map(|x| resolve_aterm(x, bound, sig)).collect()),
        ATerm::If(c, t, e) => {
            ATerm::if_(resolve_aterm(*c, bound, sig), resolve_aterm(*t, bound, sig), resolve_aterm(*e, bound, sig))
        }
        ATerm::Seq(s, rest) => {
            ATerm::Seq(Box::new(resolve_stmt(*s, bound, sig)), Box::new(resolve_aterm(*rest, bound, sig)))
        }
    }
}

fn resolve_stmt(s: Stmt, bound: &HashSet<String>, sig: &Signature) -> Stmt {
    let list = |ss: Vec<Stmt>| ss.into_iter().map(|s| resolve_stmt(s, bound, sig)).collect();
    match s {
        Stmt::Assign(lhs, rhs) => Stmt::Assign(lhs, resolve_aterm(rhs, bound, sig)),
        Stmt::If(c, a, b) => Stmt::If(resolve_aterm(c, bound, sig), list(a), list(b)),
        Stmt::For { var, start, end, body } => Stmt::For {
            var,
            start: resolve_aterm(start, bound, sig),
            end: resolve_aterm(end, bound, sig),
            body: list(body),
        },
        Stmt::While { cond, body } => Stmt::While { cond: resolve_aterm(cond, bound, sig), body: list(body) },
        Stmt::Until { body, cond } => Stmt::Until { body: list(body), cond: resolve_aterm(cond, bound, sig) },
    }
}

fn resolve_pattern(t: PlainTerm, sig: &Signature) -> PlainTerm {
    match t {
        PlainTerm::Var(v) if is_constant(sig, &v) => PlainTerm::Node(Head::Named(v), vec![]),
        PlainTerm::Var(v) => PlainTerm::Var(v),
        PlainTerm::Node(h, args) => PlainTerm::Node(h, args.into_iter().map(|a| resolve_pattern(a, sig)).collect()),
    }
}

fn resolve_program(prog: &mut Program) {
    let sig = prog.signature();
    for p in &mut prog.procedures {
        match &mut p.kind {
            ProcKind::Flat { params, body } => {
                let mut bound: HashSet<String> = params.iter().cloned().collect();
                assigned_vars(body, &mut bound);
                *body = resolve_aterm(std::mem::replace(body, ATerm::int(0)), &bound, &sig);
            }
            ProcKind::Rewrite { rules, .. } => {
                for r in rules {
                    r.lhs = resolve_pattern(std::mem::replace(&mut r.lhs, PlainTerm::int(0)), &sig);
                    let mut bound: HashSet<String> = r.lhs.vars().into_iter().map(String::from).collect();
                    assigned_vars(&r.rhs, &mut bound);
                    r.rhs = resolve_aterm(std::mem::replace(&mut r.rhs, ATerm::int(0)), &bound, &sig);
                }
            }
        }
    }
}

pub fn parse_program(src: &str) -> PResult<Program> {
    let mut p = Parser::new(src)?;
    let mut prog = p.program()?;
    resolve_program(&mut prog);
    Ok(prog)
}

/// Parse a single term; bare identifiers that `sig` knows as constants are
/// constants, any other bare identifier is a variable.
pub fn parse_term(src: &str, sig: &Signature) -> PResult<PlainTerm> {
    let mut p = Parser::new(src)?;
    let a = p.aterm()?;
    if *p.peek() != Tok::Eof {
        return p.unexpected("end of input");
    }
    let pos = Pos { line: 1, col: 1 };
    resolve_aterm(a, &HashSet::new(), sig)
        .to_plain()
        .ok_or_else(|| ParseError::new(pos, "expected a term without assignments"))
}

/// Parse a ground query over the symbols of `prog`.
pub fn parse_query(src: &str, prog: &Program) -> PResult<PlainTerm> {
    let sig = prog.signature();
    let t = parse_term(src, &sig)?;
    let pos = Pos { line: 1, col: 1 };
    check_query(&t, &sig, prog, pos)?;
    Ok(t)
}

fn check_query(t: &PlainTerm, sig: &Signature, prog: &Program, pos: Pos) -> PResult<()> {
    match t {
        PlainTerm::Var(v) => Err(ParseError {
            pos,
            message: format!("query is not ground: `{v}` is not a known constant"),
            kind: ParseErrorKind::NonGround,
        }),
        PlainTerm::Node(h, args) => {
            if sig.kind(h, args.len()).is_none() {
                let name = h.to_string();
                let known_elsewhere = sig.constructor_arity(&name).is_some()
                    || prog.procedure(&name).is_some()
                    || crate::builtins::Builtin::is_name(&name);
                return Err(if known_elsewhere {
                    ParseError {
                        pos,
                        message: format!("`{name}` applied to {} arguments", args.len()),
                        kind: ParseErrorKind::ArityMismatch,
                    }
                } else {
                    ParseError { pos, message: format!("unknown symbol `{name}`"), kind: ParseErrorKind::UnknownSymbol }
                });
            }
            args.iter().try_for_each(|a| check_query(a, sig, prog, pos))
        }
    }
}
