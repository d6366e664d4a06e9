//! Static checks: constructor discipline, left-linearity, non-overlap,
//! variable binding and pattern coverage.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::builtins::Builtin;
use crate::syntax::{ATerm, Pos, ProcKind, Procedure, Program, Rule, Stmt};
use crate::term::{CtorArity, Head, PlainTerm, Signature, SymbolKind, PREDECLARED_CONSTANTS};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code {
    /// Name used both as constructor (or builtin) and procedure.
    P001,
    /// Rule headed by a constructor.
    P002,
    /// Defined or compiled symbol inside a left-hand side pattern.
    P003,
    /// Unknown symbol, or a known one at the wrong arity.
    P004,
    /// Repeated variable in a left-hand side.
    L001,
    /// Two rules of one procedure overlap.
    O001,
    /// Variable read while unbound.
    B001,
    /// Variable assigned twice (single-assignment mode).
    B002,
    /// Assignment reads the variable it introduces.
    B003,
    /// Patterns do not cover every constructor.
    X001,
}

impl Code {
    pub fn severity(self) -> Severity {
        match self {
            Code::X001 => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagnostic {
    pub pos: Pos,
    pub code: Code,
    pub message: String,
}

impl Diagnostic {
    fn new(code: Code, pos: Pos, message: impl Into<String>) -> Diagnostic {
        Diagnostic { pos, code, message: message.into() }
    }

    pub fn severity(&self) -> Severity {
        self.code.severity()
    }

    pub fn is_error(&self) -> bool {
        self.severity() == Severity::Error
    }

    /// `severity code file:line:col message`
    pub fn render(&self, file: &str) -> String {
        format!("{} {} {}:{} {}", self.severity(), self.code, file, self.pos, self.message)
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum BindingMode {
    SingleAssignment,
    #[default]
    MultiAssignment,
}

/// Every check, sorted by position.
pub fn check_program(p: &Program, mode: BindingMode) -> Vec<Diagnostic> {
    let mut out = check_partition(p);
    out.extend(check_left_linear(p));
    out.extend(check_orthogonal(p));
    out.extend(check_bindings(p, mode));
    out.extend(check_exhaustive(p));
    out.sort();
    out.dedup();
    out
}

pub fn has_errors(ds: &[Diagnostic]) -> bool {
    ds.iter().any(Diagnostic::is_error)
}

// ---- constructor discipline ----

pub fn check_partition(p: &Program) -> Vec<Diagnostic> {
    let sig = p.signature();
    let mut out = Vec::new();
    for c in &p.constructors {
        if Builtin::is_name(&c.name) {
            out.push(Diagnostic::new(
                Code::P001,
                c.pos,
                format!("`{}` is a builtin and cannot be declared as a constructor", c.name),
            ));
        }
    }
    for proc in &p.procedures {
        let clash_ctor = sig.is_declared_constructor(&proc.name) || PREDECLARED_CONSTANTS.contains(&proc.name.as_str());
        if clash_ctor && !proc.is_flat() {
            for r in proc.rules() {
                out.push(Diagnostic::new(Code::P002, r.pos, format!("rule is headed by constructor `{}`", proc.name)));
            }
        } else if clash_ctor {
            out.push(Diagnostic::new(
                Code::P001,
                proc.pos,
                format!("`{}` is declared as a constructor and defined as a procedure", proc.name),
            ));
        } else if Builtin::is_name(&proc.name) {
            out.push(Diagnostic::new(
                Code::P001,
                proc.pos,
                format!("`{}` is a builtin and cannot be redefined", proc.name),
            ));
        }
        for r in proc.rules() {
            for a in r.lhs.args() {
                pattern_symbols(&sig, a, r.pos, &mut out);
            }
            rhs_symbols(&sig, &r.rhs, r.pos, &mut out);
        }
    }
    out
}

fn pattern_symbols(sig: &Signature, t: &PlainTerm, pos: Pos, out: &mut Vec<Diagnostic>) {
    let PlainTerm::Node(h, args) = t else { return };
    match sig.kind(h, args.len()) {
        Some(SymbolKind::Constructor) => {}
        Some(kind) => {
            out.push(Diagnostic::new(Code::P003, pos, format!("{kind} symbol `{h}` inside a left-hand side pattern")))
        }
        None => out.push(unknown(sig, h, args.len(), pos)),
    }
    args.iter().for_each(|a| pattern_symbols(sig, a, pos, out));
}

fn unknown(sig: &Signature, h: &Head, arity: usize, pos: Pos) -> Diagnostic {
    let name = h.to_string();
    let known = sig.constructor_arity(&name).is_some() || sig.defined_arity(&name).is_some() || Builtin::is_name(&name);
    let message = if known {
        format!("`{name}` applied to {arity} argument(s)")
    } else {
        format!("unknown symbol `{name}/{arity}`")
    };
    Diagnostic::new(Code::P004, pos, message)
}

fn rhs_symbols(sig: &Signature, a: &ATerm, pos: Pos, out: &mut Vec<Diagnostic>) {
    let mut go = |t: &ATerm| rhs_symbols(sig, t, pos, out);
    match a {
        ATerm::Var(_) => {}
        ATerm::App(h, args) => {
            if sig.kind(h, args.len()).is_none() {
                out.push(unknown(sig, h, args.len(), pos));
            }
            args.iter().for_each(|x| rhs_symbols(sig, x, pos, out));
        }
        ATerm::If(c, t, e) => {
            go(c);
            go(t);
            go(e);
        }
        ATerm::Seq(s, rest) => {
            stmt_symbols(sig, s, pos, out);
            rhs_symbols(sig, rest, pos, out);
        }
    }
}

fn stmt_symbols(sig: &Signature, s: &Stmt, pos: Pos, out: &mut Vec<Diagnostic>) {
    let list = |ss: &[Stmt], out: &mut Vec<Diagnostic>| ss.iter().for_each(|s| stmt_symbols(sig, s, pos, out));
    match s {
        Stmt::Assign(_, rhs) => rhs_symbols(sig, rhs, pos, out),
        Stmt::If(c, a, b) => {
            rhs_symbols(sig, c, pos, out);
            list(a, out);
            list(b, out);
        }
        Stmt::For { start, end, body, .. } => {
            rhs_symbols(sig, start, pos, out);
            rhs_symbols(sig, end, pos, out);
            list(body, out);
        }
        Stmt::While { cond, body } | Stmt::Until { body, cond } => {
            rhs_symbols(sig, cond, pos, out);
            list(body, out);
        }
    }
}

// ---- left-linearity ----

pub fn check_left_linear(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for proc in &p.procedures {
        for r in proc.rules() {
            let mut seen = HashSet::new();
            let mut reported = HashSet::new();
            for v in r.lhs.var_occurrences() {
                if !seen.insert(v) && reported.insert(v) {
                    out.push(Diagnostic::new(
                        Code::L001,
                        r.pos,
                        format!("variable `{v}` occurs more than once in the left-hand side"),
                    ));
                }
            }
        }
    }
    out
}

// ---- overlap ----

pub fn check_orthogonal(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for proc in &p.procedures {
        let rules = proc.rules();
        for (j, later) in rules.iter().enumerate() {
            for (i, earlier) in rules[..j].iter().enumerate() {
                let a = rename(&earlier.lhs, "1");
                let b = rename(&later.lhs, "2");
                if let Some(mgu) = unify(&a, &b) {
                    let witness = wildcards(&apply(&mgu, &a));
                    out.push(Diagnostic::new(
                        Code::O001,
                        later.pos,
                        format!("rules {} and {} of `{}` overlap on {witness}", i + 1, j + 1, proc.name),
                    ));
                }
            }
        }
    }
    out
}

fn rename(t: &PlainTerm, tag: &str) -> PlainTerm {
    match t {
        PlainTerm::Var(v) => PlainTerm::Var(format!("{v}'{tag}")),
        PlainTerm::Node(h, args) => PlainTerm::Node(h.clone(), args.iter().map(|a| rename(a, tag)).collect()),
    }
}

fn wildcards(t: &PlainTerm) -> PlainTerm {
    match t {
        PlainTerm::Var(_) => PlainTerm::var("_"),
        PlainTerm::Node(h, args) => PlainTerm::Node(h.clone(), args.iter().map(wildcards).collect()),
    }
}

type Subst = BTreeMap<String, PlainTerm>;

fn walk<'a>(s: &'a Subst, mut t: &'a PlainTerm) -> &'a PlainTerm {
    while let PlainTerm::Var(v) = t {
        match s.get(v) {
            Some(b) => t = b,
            None => break,
        }
    }
    t
}

fn occurs(s: &Subst, v: &str, t: &PlainTerm) -> bool {
    match walk(s, t) {
        PlainTerm::Var(w) => w == v,
        PlainTerm::Node(_, args) => args.iter().any(|a| occurs(s, v, a)),
    }
}

/// Syntactic first-order unification with occurs check.
pub fn unify(a: &PlainTerm, b: &PlainTerm) -> Option<Subst> {
    let mut s = Subst::new();
    let mut todo = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = todo.pop() {
        let (x, y) = (walk(&s, &x).clone(), walk(&s, &y).clone());
        match (x, y) {
            (PlainTerm::Var(v), PlainTerm::Var(w)) if v == w => {}
            (PlainTerm::Var(v), t) | (t, PlainTerm::Var(v)) => {
                if occurs(&s, &v, &t) {
                    return None;
                }
                s.insert(v, t);
            }
            (PlainTerm::Node(f, xs), PlainTerm::Node(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                todo.extend(xs.into_iter().zip(ys));
            }
        }
    }
    Some(s)
}

fn apply(s: &Subst, t: &PlainTerm) -> PlainTerm {
    match walk(s, t) {
        v @ PlainTerm::Var(_) => v.clone(),
        PlainTerm::Node(h, args) => PlainTerm::Node(h.clone(), args.iter().map(|a| apply(s, a)).collect()),
    }
}

// ---- variable bindings ----

pub fn check_bindings(p: &Program, mode: BindingMode) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for proc in &p.procedures {
        for r in proc.rules() {
            let scope: Vec<String> = r.lhs.vars().into_iter().map(String::from).collect();
            let mut b = Binder { mode, pos: r.pos, out: BTreeSet::new() };
            b.aterm(&r.rhs, &scope);
            out.extend(b.out);
        }
    }
    out
}

struct Binder {
    mode: BindingMode,
    pos: Pos,
    out: BTreeSet<Diagnostic>,
}

impl Binder {
    fn report(&mut self, code: Code, message: String) {
        self.out.insert(Diagnostic::new(code, self.pos, message));
    }

    fn reads(&mut self, a: &ATerm, scope: &[String], skip: &[&str]) {
        let mut unbound = BTreeSet::new();
        a.walk_vars(&mut |v| {
            if !scope.iter().any(|s| s == v) && !skip.contains(&v) {
                unbound.insert(v.to_string());
            }
        });
        for v in unbound {
            self.report(Code::B001, format!("variable `{v}` is used before it is bound"));
        }
    }

    fn aterm(&mut self, a: &ATerm, scope: &[String]) {
        match a {
            ATerm::Var(_) => self.reads(a, scope, &[]),
            ATerm::App(_, args) => args.iter().for_each(|x| self.aterm(x, scope)),
            ATerm::If(c, t, e) => {
                self.aterm(c, scope);
                self.aterm(t, scope);
                self.aterm(e, scope);
            }
            ATerm::Seq(s, rest) => self.seq(std::slice::from_ref(s), rest, scope),
        }
    }

    /// `stmts; rest`, with statement conditionals distributed over what
    /// follows them.
    fn seq(&mut self, stmts: &[Stmt], rest: &ATerm, scope: &[String]) {
        let Some((s, more)) = stmts.split_first() else {
            return self.aterm(rest, scope);
        };
        match s {
            Stmt::Assign(lhs, rhs) => {
                let targets = lhs.vars();
                let mut scope = scope.to_vec();
                let mut self_ref = Vec::new();
                for &x in &targets {
                    let bound = scope.iter().any(|s| s == x);
                    let mut mentions = false;
                    rhs.walk_vars(&mut |v| mentions |= v == x);
                    if !bound && mentions {
                        self.report(Code::B003, format!("`{x}` is assigned an expression that reads `{x}` itself"));
                        self_ref.push(x);
                    } else if bound && self.mode == BindingMode::SingleAssignment {
                        self.report(Code::B002, format!("`{x}` is bound more than once"));
                    }
                }
                self.reads(rhs, &scope, &self_ref);
                for x in targets {
                    if !scope.iter().any(|s| s == x) {
                        scope.push(x.to_string());
                    }
                }
                self.seq(more, rest, &scope);
            }
            Stmt::If(c, a, b) => {
                self.aterm(c, scope);
                for branch in [a, b] {
                    let joined: Vec<Stmt> = branch.iter().chain(more).cloned().collect();
                    self.seq(&joined, rest, scope);
                }
            }
            Stmt::For { var, start, end, body } => {
                self.aterm(start, scope);
                self.aterm(end, scope);
                let mut inner = scope.to_vec();
                if inner.iter().any(|s| s == var) {
                    if self.mode == BindingMode::SingleAssignment {
                        self.report(Code::B002, format!("`{var}` is bound more than once"));
                    }
                } else {
                    inner.push(var.clone());
                }
                self.seq(body, &ATerm::App(Head::Tuple, vec![]), &inner);
                self.seq(more, rest, &inner);
            }
            Stmt::While { cond, body } => {
                self.aterm(cond, scope);
                self.seq(body, &ATerm::App(Head::Tuple, vec![]), scope);
                self.seq(more, rest, scope);
            }
            Stmt::Until { body, cond } => {
                // the test and what follows run after the body
                let tail = ATerm::App(Head::Tuple, vec![cond.clone(), ATerm::seq(more.to_vec(), rest.clone())]);
                self.seq(body, &tail, scope);
            }
        }
    }
}

// ---- coverage ----

#[derive(Clone, Debug, PartialEq, Eq)]
enum Pat {
    Wild,
    Ctor(Head, Vec<Pat>),
}

impl Pat {
    fn from_term(t: &PlainTerm) -> Pat {
        match t {
            PlainTerm::Var(_) => Pat::Wild,
            PlainTerm::Node(h, args) => Pat::Ctor(h.clone(), args.iter().map(Pat::from_term).collect()),
        }
    }

    fn to_term(&self) -> PlainTerm {
        match self {
            Pat::Wild => PlainTerm::var("_"),
            Pat::Ctor(h, args) => PlainTerm::Node(h.clone(), args.iter().map(Pat::to_term).collect()),
        }
    }
}

type Ctor = (Head, usize);

/// The full constructor set a column ranges over, when finite.
fn column_signature(sig: &Signature, heads: &[Ctor]) -> Option<Vec<Ctor>> {
    let boolean = |h: &Head| matches!(h.as_name(), Some("true") | Some("false"));
    if !heads.is_empty() && heads.iter().all(|(h, n)| boolean(h) && *n == 0) {
        return Some(vec![(Head::named("false"), 0), (Head::named("true"), 0)]);
    }
    let user_fixed = |(h, n): &Ctor| {
        h.as_name()
            .and_then(|name| sig.constructor_arity(name))
            .is_some_and(|a| matches!(a, CtorArity::Fixed(set) if set.contains(n)))
    };
    if !heads.iter().all(user_fixed) {
        return None;
    }
    let mut all = Vec::new();
    for (name, arity) in sig.constructors() {
        if let CtorArity::Fixed(set) = arity {
            all.extend(set.iter().map(|&n| (Head::named(name), n)));
        }
    }
    Some(all)
}

fn specialize(row: &[Pat], c: &Ctor) -> Option<Vec<Pat>> {
    let (first, rest) = row.split_first()?;
    let mut out = match first {
        Pat::Wild => vec![Pat::Wild; c.1],
        Pat::Ctor(h, args) if *h == c.0 && args.len() == c.1 => args.clone(),
        Pat::Ctor(..) => return None,
    };
    out.extend_from_slice(rest);
    Some(out)
}

/// A vector of values matched by `q` and by no row of `rows`, if any.
fn useful(sig: &Signature, rows: &[Vec<Pat>], q: &[Pat]) -> Option<Vec<Pat>> {
    let Some((first, rest)) = q.split_first() else {
        return rows.is_empty().then(Vec::new);
    };
    let rebuild = |c: &Ctor, w: Vec<Pat>| {
        let mut w = w;
        let tail = w.split_off(c.1);
        let mut out = vec![Pat::Ctor(c.0.clone(), w)];
        out.extend(tail);
        out
    };
    match first {
        Pat::Ctor(h, args) => {
            let c = (h.clone(), args.len());
            let rows: Vec<Vec<Pat>> = rows.iter().filter_map(|r| specialize(r, &c)).collect();
            let q = specialize(q, &c).unwrap();
            useful(sig, &rows, &q).map(|w| rebuild(&c, w))
        }
        Pat::Wild => {
            let mut heads: Vec<Ctor> = Vec::new();
            for r in rows {
                if let Some(Pat::Ctor(h, args)) = r.first() {
                    let c = (h.clone(), args.len());
                    if !heads.contains(&c) {
                        heads.push(c);
                    }
                }
            }
            let complete =
                column_signature(sig, &heads).filter(|all| !heads.is_empty() && all.iter().all(|c| heads.contains(c)));
            if let Some(all) = complete {
                return all.iter().find_map(|c| {
                    let rows: Vec<Vec<Pat>> = rows.iter().filter_map(|r| specialize(r, c)).collect();
                    useful(sig, &rows, &specialize(q, c).unwrap()).map(|w| rebuild(c, w))
                });
            }
            let default: Vec<Vec<Pat>> =
                rows.iter().filter(|r| matches!(r.first(), Some(Pat::Wild))).map(|r| r[1..].to_vec()).collect();
            let w = useful(sig, &default, rest)?;
            let missing = if heads.is_empty() {
                None
            } else {
                column_signature(sig, &heads).and_then(|all| all.into_iter().find(|c| !heads.contains(c)))
            };
            let head = match missing {
                Some((h, n)) => Pat::Ctor(h, vec![Pat::Wild; n]),
                None => Pat::Wild,
            };
            let mut out = vec![head];
            out.extend(w);
            Some(out)
        }
    }
}

pub fn check_exhaustive(p: &Program) -> Vec<Diagnostic> {
    let sig = p.signature();
    let mut out = Vec::new();
    for proc in &p.procedures {
        if let Some(w) = uncovered(&sig, proc) {
            let pos = proc.rules().first().map_or(proc.pos, |r: &Rule| r.pos);
            out.push(Diagnostic::new(Code::X001, pos, format!("patterns of `{}` do not cover {}", proc.name, w)));
        }
    }
    out
}

/// A call shape no rule of `proc` matches.
pub fn uncovered(sig: &Signature, proc: &Procedure) -> Option<PlainTerm> {
    let ProcKind::Rewrite { rules, .. } = &proc.kind else { return None };
    fn constructor_pattern(sig: &Signature, t: &PlainTerm) -> bool {
        match t {
            PlainTerm::Var(_) => true,
            PlainTerm::Node(h, args) => {
                sig.is_constructor(h, args.len()) && args.iter().all(|a| constructor_pattern(sig, a))
            }
        }
    }
    // ill-formed patterns are reported elsewhere
    if !rules.iter().flat_map(|r| r.lhs.args()).all(|a| constructor_pattern(sig, a)) {
        return None;
    }
    let rows: Vec<Vec<Pat>> = rules.iter().map(|r| r.lhs.args().iter().map(Pat::from_term).collect()).collect();
    let w = useful(sig, &rows, &vec![Pat::Wild; proc.arity])?;
    Some(PlainTerm::app(&proc.name, w.iter().map(Pat::to_term).collect()))
}
