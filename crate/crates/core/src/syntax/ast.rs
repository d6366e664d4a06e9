use std::fmt;

use crate::term::{Head, PlainTerm, Signature};

/// 1-based source position.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A right-hand side: a term that may contain assignments, conditionals and
/// (before lowering) loops.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ATerm {
    Var(String),
    App(Head, Vec<ATerm>),
    /// Value-position conditional; both branches are aterms.
    If(Box<ATerm>, Box<ATerm>, Box<ATerm>),
    /// `stmt; rest`. Sequences associate to the right.
    Seq(Box<Stmt>, Box<ATerm>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AssignLhs {
    Var(String),
    Tuple(Vec<String>),
}

impl AssignLhs {
    pub fn vars(&self) -> Vec<&str> {
        match self {
            AssignLhs::Var(v) => vec![v],
            AssignLhs::Tuple(vs) => vs.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Assign(AssignLhs, ATerm),
    /// Statement-position conditional, `if c then { .. } else { .. }`.
    If(ATerm, Vec<Stmt>, Vec<Stmt>),
    For {
        var: String,
        start: ATerm,
        end: ATerm,
        body: Vec<Stmt>,
    },
    While {
        cond: ATerm,
        body: Vec<Stmt>,
    },
    Until {
        body: Vec<Stmt>,
        cond: ATerm,
    },
}

impl Stmt {
    pub fn is_loop(&self) -> bool {
        matches!(self, Stmt::For { .. } | Stmt::While { .. } | Stmt::Until { .. })
    }
}

impl ATerm {
    pub fn var(name: impl Into<String>) -> ATerm {
        ATerm::Var(name.into())
    }

    pub fn app(name: impl Into<String>, args: Vec<ATerm>) -> ATerm {
        ATerm::App(Head::Named(name.into()), args)
    }

    pub fn int(value: i64) -> ATerm {
        ATerm::App(Head::Int(value.into()), Vec::new())
    }

    pub fn assign(var: impl Into<String>, rhs: ATerm, rest: ATerm) -> ATerm {
        ATerm::Seq(Box::new(Stmt::Assign(AssignLhs::Var(var.into()), rhs)), Box::new(rest))
    }

    pub fn if_(cond: ATerm, then: ATerm, els: ATerm) -> ATerm {
        ATerm::If(Box::new(cond), Box::new(then), Box::new(els))
    }

    /// Fold a statement list in front of `rest`.
    pub fn seq(stmts: Vec<Stmt>, rest: ATerm) -> ATerm {
        stmts.into_iter().rev().fold(rest, |acc, s| ATerm::Seq(Box::new(s), Box::new(acc)))
    }

    pub fn contains_seq(&self) -> bool {
        match self {
            ATerm::Var(_) => false,
            ATerm::App(_, args) => args.iter().any(ATerm::contains_seq),
            ATerm::If(c, t, e) => c.contains_seq() || t.contains_seq() || e.contains_seq(),
            ATerm::Seq(..) => true,
        }
    }

    pub fn contains_loop(&self) -> bool {
        match self {
            ATerm::Var(_) => false,
            ATerm::App(_, args) => args.iter().any(ATerm::contains_loop),
            ATerm::If(c, t, e) => c.contains_loop() || t.contains_loop() || e.contains_loop(),
            ATerm::Seq(s, rest) => s.contains_loop() || rest.contains_loop(),
        }
    }

    /// Number of assignment statements, tuple assignments counted once.
    pub fn assignment_count(&self) -> usize {
        match self {
            ATerm::Var(_) => 0,
            ATerm::App(_, args) => args.iter().map(ATerm::assignment_count).sum(),
            ATerm::If(c, t, e) => c.assignment_count() + t.assignment_count() + e.assignment_count(),
            ATerm::Seq(s, rest) => s.assignment_count() + rest.assignment_count(),
        }
    }

    /// The term, when it has no statements.
    pub fn to_plain(&self) -> Option<PlainTerm> {
        match self {
            ATerm::Var(v) => Some(PlainTerm::Var(v.clone())),
            ATerm::App(h, args) => {
                Some(PlainTerm::Node(h.clone(), args.iter().map(ATerm::to_plain).collect::<Option<_>>()?))
            }
            ATerm::If(c, t, e) => Some(PlainTerm::Node(Head::If, vec![c.to_plain()?, t.to_plain()?, e.to_plain()?])),
            ATerm::Seq(..) => None,
        }
    }

    pub fn walk_vars<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            ATerm::Var(v) => f(v),
            ATerm::App(_, args) => args.iter().for_each(|a| a.walk_vars(f)),
            ATerm::If(c, t, e) => {
                c.walk_vars(f);
                t.walk_vars(f);
                e.walk_vars(f);
            }
            ATerm::Seq(s, rest) => {
                s.walk_vars(f);
                rest.walk_vars(f);
            }
        }
    }
}

impl Stmt {
    pub fn contains_loop(&self) -> bool {
        match self {
            Stmt::Assign(_, rhs) => rhs.contains_loop(),
            Stmt::If(c, a, b) => {
                c.contains_loop() || a.iter().any(Stmt::contains_loop) || b.iter().any(Stmt::contains_loop)
            }
            _ => true,
        }
    }

    pub fn assignment_count(&self) -> usize {
        let list = |ss: &[Stmt]| ss.iter().map(Stmt::assignment_count).sum::<usize>();
        match self {
            Stmt::Assign(_, rhs) => 1 + rhs.assignment_count(),
            Stmt::If(c, a, b) => c.assignment_count() + list(a) + list(b),
            Stmt::For { start, end, body, .. } => start.assignment_count() + end.assignment_count() + list(body),
            Stmt::While { cond, body } | Stmt::Until { body, cond } => cond.assignment_count() + list(body),
        }
    }

    /// Visits every variable occurrence, including assignment targets.
    pub fn walk_vars<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Stmt::Assign(lhs, rhs) => {
                lhs.vars().into_iter().for_each(&mut *f);
                rhs.walk_vars(f);
            }
            Stmt::If(c, a, b) => {
                c.walk_vars(f);
                a.iter().chain(b).for_each(|s| s.walk_vars(f));
            }
            Stmt::For { var, start, end, body } => {
                f(var);
                start.walk_vars(f);
                end.walk_vars(f);
                body.iter().for_each(|s| s.walk_vars(f));
            }
            Stmt::While { cond, body } | Stmt::Until { body, cond } => {
                cond.walk_vars(f);
                body.iter().for_each(|s| s.walk_vars(f));
            }
        }
    }
}

impl From<&PlainTerm> for ATerm {
    fn from(t: &PlainTerm) -> ATerm {
        match t {
            PlainTerm::Var(v) => ATerm::Var(v.clone()),
            PlainTerm::Node(Head::If, args) if args.len() == 3 => {
                ATerm::if_((&args[0]).into(), (&args[1]).into(), (&args[2]).into())
            }
            PlainTerm::Node(h, args) => ATerm::App(h.clone(), args.iter().map(ATerm::from).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub lhs: PlainTerm,
    pub rhs: ATerm,
    pub pos: Pos,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    Innermost,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProcKind {
    Rewrite { rules: Vec<Rule>, strategy: Option<Strategy> },
    Flat { params: Vec<String>, body: ATerm },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Procedure {
    pub name: String,
    pub arity: usize,
    pub kind: ProcKind,
    pub pos: Pos,
}

impl Procedure {
    pub fn is_flat(&self) -> bool {
        matches!(self.kind, ProcKind::Flat { .. })
    }

    /// The procedure as a list of rules; a flat procedure owns the single
    /// rule `p(x1, .., xn) -> body`.
    pub fn rules(&self) -> Vec<Rule> {
        match &self.kind {
            ProcKind::Rewrite { rules, .. } => rules.clone(),
            ProcKind::Flat { params, body } => vec![Rule {
                lhs: PlainTerm::app(&self.name, params.iter().map(PlainTerm::var).collect()),
                rhs: body.clone(),
                pos: self.pos,
            }],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtorDecl {
    pub name: String,
    /// `None` for variadic (`A/*`).
    pub arity: Option<usize>,
    pub pos: Pos,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub constructors: Vec<CtorDecl>,
    pub procedures: Vec<Procedure>,
}

impl Program {
    pub fn procedure(&self, name: &str) -> Option<&Procedure> {
        self.procedures.iter().find(|p| p.name == name)
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature::new();
        for c in &self.constructors {
            sig.declare_constructor(&c.name, c.arity);
        }
        for p in &self.procedures {
            sig.declare_defined(&p.name, p.arity);
        }
        sig
    }

    /// Does any rule or body mention `name`?
    pub fn mentions(&self, name: &str) -> bool {
        fn in_aterm(a: &ATerm, name: &str) -> bool {
            match a {
                ATerm::Var(_) => false,
                ATerm::App(h, args) => h.as_name() == Some(name) || args.iter().any(|x| in_aterm(x, name)),
                ATerm::If(c, t, e) => in_aterm(c, name) || in_aterm(t, name) || in_aterm(e, name),
                ATerm::Seq(s, rest) => in_stmt(s, name) || in_aterm(rest, name),
            }
        }
        fn in_stmt(s: &Stmt, name: &str) -> bool {
            let list = |ss: &[Stmt]| ss.iter().any(|s| in_stmt(s, name));
            match s {
                Stmt::Assign(_, rhs) => in_aterm(rhs, name),
                Stmt::If(c, a, b) => in_aterm(c, name) || list(a) || list(b),
                Stmt::For { start, end, body, .. } => in_aterm(start, name) || in_aterm(end, name) || list(body),
                Stmt::While { cond, body } | Stmt::Until { body, cond } => in_aterm(cond, name) || list(body),
            }
        }
        self.procedures.iter().flat_map(|p| p.rules()).any(|r| in_aterm(&r.rhs, name))
    }
}
