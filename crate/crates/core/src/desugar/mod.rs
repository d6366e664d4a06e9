//! Lowering to a pure rewrite system.
//!
//! The full pipeline, [`flatten_program`], runs
//!
//! 1. [`lower_loops`]: loops become tail-recursive flat procedures;
//! 2. [`expand_tuple_assign`]: `<x1, .., xn> <- t` becomes projections;
//! 3. [`distribute_if_seq`]: `if c then {A} else {B}; E` becomes
//!    `if c then (A; E) else (B; E)`;
//! 4. [`rename_multi_assign`]: reassignments get fresh names;
//! 5. [`eliminate`]: assignments are substituted away, keeping sharing.
//!
//! The evaluator instead runs [`runtime_program`], which stops after step 3
//! minus tuple expansion so that assignment order stays observable.

mod eliminate;
mod loops;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::rc::Rc;

pub use eliminate::{canonical, eliminate, eliminate_random, eliminate_step, CanonGraph, CanonNode, ETerm};
pub use loops::{lower_loops, LoopKind, LoopOrigin, LoweredProgram};

use crate::builtins::Builtin;
use crate::syntax::{ATerm, AssignLhs, CtorDecl, ProcKind, Procedure, Program, Rule, Stmt, Strategy};
use crate::term::{PlainTerm, PREDECLARED_CONSTANTS};

/// Supplies identifiers that clash with nothing in the program.
#[derive(Clone, Debug, Default)]
pub struct NameGen {
    taken: HashSet<String>,
}

impl NameGen {
    pub fn for_program(p: &Program) -> NameGen {
        let mut taken: HashSet<String> = PREDECLARED_CONSTANTS.iter().map(|s| s.to_string()).collect();
        taken.extend(Builtin::names().map(|(n, _)| n.to_string()));
        taken.extend(p.constructors.iter().map(|c| c.name.clone()));
        for proc in &p.procedures {
            taken.insert(proc.name.clone());
            for r in proc.rules() {
                collect_names(&r.lhs, &mut taken);
                r.rhs.walk_vars(&mut |v| {
                    taken.insert(v.to_string());
                });
                collect_heads(&r.rhs, &mut taken);
            }
        }
        NameGen { taken }
    }

    /// Reserves `name`; false when it was already in use.
    pub fn claim(&mut self, name: &str) -> bool {
        self.taken.insert(name.to_string())
    }

    /// `name` itself if free, else `name_2`, `name_3`, ...
    pub fn fresh_exact(&mut self, name: &str) -> String {
        if self.claim(name) {
            return name.to_string();
        }
        (2..).map(|k| format!("{name}_{k}")).find(|n| self.claim(n)).unwrap()
    }

    /// A new variant of `base` obtained by bumping its numeric suffix:
    /// `y1` gives `y2`, then `y3`; `x` gives `x1`.
    pub fn fresh(&mut self, base: &str) -> String {
        let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
        let start: u64 = base[stem.len()..].parse().unwrap_or(0);
        (start + 1..).map(|k| format!("{stem}{k}")).find(|n| self.claim(n)).unwrap()
    }
}

fn collect_names(t: &PlainTerm, out: &mut HashSet<String>) {
    match t {
        PlainTerm::Var(v) => {
            out.insert(v.clone());
        }
        PlainTerm::Node(h, args) => {
            if let Some(n) = h.as_name() {
                out.insert(n.to_string());
            }
            args.iter().for_each(|a| collect_names(a, out));
        }
    }
}

fn collect_heads(a: &ATerm, out: &mut HashSet<String>) {
    match a {
        ATerm::Var(_) => {}
        ATerm::App(h, args) => {
            if let Some(n) = h.as_name() {
                out.insert(n.to_string());
            }
            args.iter().for_each(|x| collect_heads(x, out));
        }
        ATerm::If(c, t, e) => {
            collect_heads(c, out);
            collect_heads(t, out);
            collect_heads(e, out);
        }
        ATerm::Seq(s, rest) => {
            for_each_aterm(s, &mut |x| collect_heads(x, out));
            collect_heads(rest, out);
        }
    }
}

fn for_each_aterm(s: &Stmt, f: &mut impl FnMut(&ATerm)) {
    match s {
        Stmt::Assign(_, rhs) => f(rhs),
        Stmt::If(c, a, b) => {
            f(c);
            a.iter().chain(b).for_each(|s| for_each_aterm(s, f));
        }
        Stmt::For { start, end, body, .. } => {
            f(start);
            f(end);
            body.iter().for_each(|s| for_each_aterm(s, f));
        }
        Stmt::While { cond, body } | Stmt::Until { body, cond } => {
            f(cond);
            body.iter().for_each(|s| for_each_aterm(s, f));
        }
    }
}

/// Variables read by `a` before any assignment to them.
pub fn free_vars(a: &ATerm) -> BTreeSet<String> {
    stacker::maybe_grow(64 * 1024, 1024 * 1024, || match a {
        ATerm::Var(v) => BTreeSet::from([v.clone()]),
        ATerm::App(_, args) => args.iter().flat_map(free_vars).collect(),
        ATerm::If(c, t, e) => {
            let mut out = free_vars(c);
            out.extend(free_vars(t));
            out.extend(free_vars(e));
            out
        }
        ATerm::Seq(s, rest) => block_free_vars(std::slice::from_ref(&**s), free_vars(rest)),
    })
}

/// Free variables of a statement block followed by code reading `after`.
pub fn block_free_vars(stmts: &[Stmt], after: BTreeSet<String>) -> BTreeSet<String> {
    let Some((s, more)) = stmts.split_first() else { return after };
    let after = block_free_vars(more, after);
    match s {
        Stmt::Assign(lhs, rhs) => {
            let mut out = after;
            for v in lhs.vars() {
                out.remove(v);
            }
            out.extend(free_vars(rhs));
            out
        }
        Stmt::If(c, a, b) => {
            let mut out = block_free_vars(a, after.clone());
            out.extend(block_free_vars(b, after));
            out.extend(free_vars(c));
            out
        }
        Stmt::For { var, start, end, body } => {
            let mut out = block_free_vars(body, BTreeSet::new());
            out.extend(after);
            out.remove(var);
            out.extend(free_vars(start));
            out.extend(free_vars(end));
            out
        }
        Stmt::While { cond, body } => {
            let mut out = block_free_vars(body, free_vars(cond));
            out.extend(free_vars(cond));
            out.extend(after);
            out
        }
        Stmt::Until { body, cond } => {
            let mut tail = free_vars(cond);
            tail.extend(after);
            block_free_vars(body, tail)
        }
    }
}

/// Replaces each `<x1, .., xn> <- t` by `_t_k <- t; x1 <- pi(1, _t_k); ..`.
pub fn expand_tuple_assign(a: &ATerm, names: &mut NameGen) -> ATerm {
    match a {
        ATerm::Var(_) => a.clone(),
        ATerm::App(h, args) => ATerm::App(h.clone(), args.iter().map(|x| expand_tuple_assign(x, names)).collect()),
        ATerm::If(c, t, e) => {
            ATerm::if_(expand_tuple_assign(c, names), expand_tuple_assign(t, names), expand_tuple_assign(e, names))
        }
        ATerm::Seq(s, rest) => {
            let stmts = expand_stmt(s, names);
            ATerm::seq(stmts, expand_tuple_assign(rest, names))
        }
    }
}

fn expand_block(stmts: &[Stmt], names: &mut NameGen) -> Vec<Stmt> {
    stmts.iter().flat_map(|s| expand_stmt(s, names)).collect()
}

fn expand_stmt(s: &Stmt, names: &mut NameGen) -> Vec<Stmt> {
    match s {
        Stmt::Assign(AssignLhs::Tuple(vs), rhs) => {
            let tmp = names.fresh_exact("_t");
            let mut out = vec![Stmt::Assign(AssignLhs::Var(tmp.clone()), expand_tuple_assign(rhs, names))];
            for (i, v) in vs.iter().enumerate() {
                let proj = ATerm::app("pi", vec![ATerm::int(i as i64 + 1), ATerm::var(tmp.clone())]);
                out.push(Stmt::Assign(AssignLhs::Var(v.clone()), proj));
            }
            out
        }
        Stmt::Assign(lhs, rhs) => vec![Stmt::Assign(lhs.clone(), expand_tuple_assign(rhs, names))],
        Stmt::If(c, a, b) => {
            vec![Stmt::If(expand_tuple_assign(c, names), expand_block(a, names), expand_block(b, names))]
        }
        Stmt::For { var, start, end, body } => vec![Stmt::For {
            var: var.clone(),
            start: expand_tuple_assign(start, names),
            end: expand_tuple_assign(end, names),
            body: expand_block(body, names),
        }],
        Stmt::While { cond, body } => {
            vec![Stmt::While { cond: expand_tuple_assign(cond, names), body: expand_block(body, names) }]
        }
        Stmt::Until { body, cond } => {
            vec![Stmt::Until { body: expand_block(body, names), cond: expand_tuple_assign(cond, names) }]
        }
    }
}

/// Pushes the continuation of every statement-if into both branches.
///
/// The continuation is copied, so a chain of k statement-ifs grows the
/// term by a factor of up to 2^k.
pub fn distribute_if_seq(a: &ATerm) -> ATerm {
    stacker::maybe_grow(64 * 1024, 1024 * 1024, || match a {
        ATerm::Var(_) => a.clone(),
        ATerm::App(h, args) => ATerm::App(h.clone(), args.iter().map(distribute_if_seq).collect()),
        ATerm::If(c, t, e) => ATerm::if_(distribute_if_seq(c), distribute_if_seq(t), distribute_if_seq(e)),
        ATerm::Seq(s, rest) => match &**s {
            Stmt::If(c, x, y) => ATerm::if_(
                distribute_if_seq(c),
                distribute_if_seq(&ATerm::seq(x.clone(), (**rest).clone())),
                distribute_if_seq(&ATerm::seq(y.clone(), (**rest).clone())),
            ),
            Stmt::Assign(lhs, rhs) => ATerm::Seq(
                Box::new(Stmt::Assign(lhs.clone(), distribute_if_seq(rhs))),
                Box::new(distribute_if_seq(rest)),
            ),
            other => ATerm::Seq(Box::new(other.clone()), Box::new(distribute_if_seq(rest))),
        },
    })
}

/// Gives every assignment to an already bound variable a fresh name, so
/// that each name is assigned at most once on any path.
///
/// `bound` lists the variables in scope on entry (the rule's parameters).
///
/// # Panics
///
/// On loops or statement-ifs; run [`lower_loops`] and
/// [`distribute_if_seq`] first.
pub fn rename_multi_assign(a: &ATerm, bound: &[String], names: &mut NameGen) -> ATerm {
    let env: HashMap<String, String> = bound.iter().map(|v| (v.clone(), v.clone())).collect();
    rename(a, &env, names)
}

fn rename(a: &ATerm, env: &HashMap<String, String>, names: &mut NameGen) -> ATerm {
    stacker::maybe_grow(64 * 1024, 1024 * 1024, || match a {
        ATerm::Var(v) => ATerm::Var(env.get(v).cloned().unwrap_or_else(|| v.clone())),
        ATerm::App(h, args) => ATerm::App(h.clone(), args.iter().map(|x| rename(x, env, names)).collect()),
        ATerm::If(c, t, e) => ATerm::if_(rename(c, env, names), rename(t, env, names), rename(e, env, names)),
        ATerm::Seq(s, rest) => {
            let Stmt::Assign(lhs, rhs) = &**s else {
                panic!("rename_multi_assign: loops and statement-ifs must be lowered first")
            };
            let rhs = rename(rhs, env, names);
            let mut inner = env.clone();
            let mut fresh_lhs = Vec::new();
            for v in lhs.vars() {
                let name = if env.contains_key(v) { names.fresh(v) } else { v.to_string() };
                inner.insert(v.to_string(), name.clone());
                fresh_lhs.push(name);
            }
            let lhs = match lhs {
                AssignLhs::Var(_) => AssignLhs::Var(fresh_lhs.pop().unwrap()),
                AssignLhs::Tuple(_) => AssignLhs::Tuple(fresh_lhs),
            };
            ATerm::Seq(Box::new(Stmt::Assign(lhs, rhs)), Box::new(rename(rest, &inner, names)))
        }
    })
}

/// The program the evaluator runs: loops lowered and statement-ifs
/// distributed, assignments kept.
pub fn runtime_program(p: &Program) -> LoweredProgram {
    let mut lowered = lower_loops(p);
    for proc in &mut lowered.program.procedures {
        match &mut proc.kind {
            ProcKind::Flat { body, .. } => *body = distribute_if_seq(body),
            ProcKind::Rewrite { rules, .. } => {
                for r in rules {
                    r.rhs = distribute_if_seq(&r.rhs);
                }
            }
        }
    }
    lowered
}

#[derive(Clone, Debug)]
pub struct FlatRule {
    pub lhs: PlainTerm,
    pub rhs: Rc<ETerm>,
}

#[derive(Clone, Debug)]
pub struct FlatProcedure {
    pub name: String,
    pub arity: usize,
    pub rules: Vec<FlatRule>,
    pub strategy: Option<Strategy>,
    /// Was the source a `flat` procedure?
    pub flat: bool,
}

/// The assignment-free rewrite system of a program.
#[derive(Clone, Debug)]
pub struct RewriteSystem {
    pub constructors: Vec<CtorDecl>,
    pub procedures: Vec<FlatProcedure>,
    pub origins: BTreeMap<String, LoopOrigin>,
}

pub fn flatten_program(p: &Program) -> RewriteSystem {
    let mut names = NameGen::for_program(p);
    let lowered = loops::lower_with(p, &mut names);
    let procedures = lowered
        .program
        .procedures
        .iter()
        .map(|proc| FlatProcedure {
            name: proc.name.clone(),
            arity: proc.arity,
            rules: proc.rules().iter().map(|r| flatten_rule(r, &mut names)).collect(),
            strategy: match &proc.kind {
                ProcKind::Rewrite { strategy, .. } => *strategy,
                ProcKind::Flat { .. } => None,
            },
            flat: proc.is_flat(),
        })
        .collect();
    RewriteSystem { constructors: lowered.program.constructors, procedures, origins: lowered.origins }
}

fn flatten_rule(r: &Rule, names: &mut NameGen) -> FlatRule {
    let bound: Vec<String> = r.lhs.vars().into_iter().map(String::from).collect();
    let a = expand_tuple_assign(&r.rhs, names);
    let a = distribute_if_seq(&a);
    let a = rename_multi_assign(&a, &bound, names);
    FlatRule { lhs: r.lhs.clone(), rhs: eliminate(&ETerm::from_aterm(&a)) }
}

impl RewriteSystem {
    pub fn rule_count(&self) -> usize {
        self.procedures.iter().map(|p| p.rules.len()).sum()
    }

    /// The system as source text structure. Rules print in `rewrite` form,
    /// except flat procedures whose parameter names would read back as
    /// constants.
    pub fn to_program(&self) -> Program {
        let mut program = Program { constructors: self.constructors.clone(), procedures: Vec::new() };
        let sig = {
            let mut sig = program.signature();
            for p in &self.procedures {
                sig.declare_defined(&p.name, p.arity);
            }
            sig
        };
        let is_const = |v: &str| {
            PREDECLARED_CONSTANTS.contains(&v)
                || sig.is_declared_constructor(v)
                || sig.defined_arity(v) == Some(0)
                || Builtin::lookup(v, 0).is_some()
        };
        for p in &self.procedures {
            let rules: Vec<Rule> = p
                .rules
                .iter()
                .map(|r| Rule {
                    lhs: r.lhs.clone(),
                    rhs: ATerm::from(&r.rhs.to_plain().expect("eliminated")),
                    pos: Default::default(),
                })
                .collect();
            let collides = rules.iter().any(|r| r.lhs.vars().into_iter().any(is_const));
            let kind = if p.flat && collides {
                let params = r_params(&rules[0].lhs);
                ProcKind::Flat { params, body: rules[0].rhs.clone() }
            } else {
                ProcKind::Rewrite { rules, strategy: p.strategy }
            };
            program.procedures.push(Procedure { name: p.name.clone(), arity: p.arity, kind, pos: Default::default() });
        }
        program
    }
}

fn r_params(lhs: &PlainTerm) -> Vec<String> {
    lhs.args()
        .iter()
        .map(|a| match a {
            PlainTerm::Var(v) => v.clone(),
            PlainTerm::Node(..) => unreachable!("flat rules have variable arguments"),
        })
        .collect()
}

#[cfg(test)]
mod tests;
