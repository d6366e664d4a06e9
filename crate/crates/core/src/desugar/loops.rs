//! Loops to tail-recursive flat procedures, outermost loop first.

use std::collections::{BTreeMap, BTreeSet};

use super::{block_free_vars, free_vars, NameGen};
use crate::syntax::{ATerm, ProcKind, Procedure, Program, Rule, Stmt};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LoopKind {
    For,
    While,
    Until,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopOrigin {
    /// The procedure whose body contained the loop (possibly itself a
    /// generated one, for nested loops).
    pub procedure: String,
    pub kind: LoopKind,
}

#[derive(Clone, Debug)]
pub struct LoweredProgram {
    pub program: Program,
    pub origins: BTreeMap<String, LoopOrigin>,
}

pub fn lower_loops(p: &Program) -> LoweredProgram {
    let mut names = NameGen::for_program(p);
    lower_with(p, &mut names)
}

pub(super) fn lower_with(p: &Program, names: &mut NameGen) -> LoweredProgram {
    let mut l = Lowerer { names, queue: Vec::new(), origins: BTreeMap::new(), counter: 0 };
    let mut program = Program { constructors: p.constructors.clone(), procedures: Vec::new() };
    for proc in &p.procedures {
        let proc = l.procedure(proc);
        program.procedures.push(proc);
    }
    // generated procedures may hold inner loops; lower them in turn
    while !l.queue.is_empty() {
        let batch = std::mem::take(&mut l.queue);
        for proc in batch {
            let proc = l.procedure(&proc);
            program.procedures.push(proc);
        }
    }
    LoweredProgram { program, origins: l.origins }
}

struct Lowerer<'n> {
    names: &'n mut NameGen,
    queue: Vec<Procedure>,
    origins: BTreeMap<String, LoopOrigin>,
    counter: usize,
}

impl Lowerer<'_> {
    fn procedure(&mut self, p: &Procedure) -> Procedure {
        let kind = match &p.kind {
            ProcKind::Flat { params, body } => {
                ProcKind::Flat { params: params.clone(), body: self.aterm(&p.name, body, params) }
            }
            ProcKind::Rewrite { rules, strategy } => ProcKind::Rewrite {
                rules: rules
                    .iter()
                    .map(|r| {
                        let scope: Vec<String> = r.lhs.vars().into_iter().map(String::from).collect();
                        Rule { lhs: r.lhs.clone(), rhs: self.aterm(&p.name, &r.rhs, &scope), pos: r.pos }
                    })
                    .collect(),
                strategy: *strategy,
            },
        };
        Procedure { kind, ..p.clone() }
    }

    fn aterm(&mut self, owner: &str, a: &ATerm, scope: &[String]) -> ATerm {
        match a {
            ATerm::Var(_) => a.clone(),
            ATerm::App(h, args) => ATerm::App(h.clone(), args.iter().map(|x| self.aterm(owner, x, scope)).collect()),
            ATerm::If(c, t, e) => {
                ATerm::if_(self.aterm(owner, c, scope), self.aterm(owner, t, scope), self.aterm(owner, e, scope))
            }
            ATerm::Seq(s, rest) => self.seq(owner, s, rest, scope),
        }
    }

    fn seq(&mut self, owner: &str, s: &Stmt, rest: &ATerm, scope: &[String]) -> ATerm {
        match s {
            Stmt::Assign(lhs, rhs) => {
                let rhs = self.aterm(owner, rhs, scope);
                let mut inner = scope.to_vec();
                extend(&mut inner, lhs.vars());
                let rest = self.aterm(owner, rest, &inner);
                ATerm::Seq(Box::new(Stmt::Assign(lhs.clone(), rhs)), Box::new(rest))
            }
            Stmt::If(c, a, b) if a.iter().chain(b).any(Stmt::contains_loop) => {
                // push what follows into both branches so the loops inside
                // them are followed by a value
                let d = ATerm::if_(c.clone(), ATerm::seq(a.clone(), rest.clone()), ATerm::seq(b.clone(), rest.clone()));
                self.aterm(owner, &d, scope)
            }
            Stmt::If(c, a, b) => {
                let c = self.aterm(owner, c, scope);
                let mut inner = scope.to_vec();
                for st in a.iter().chain(b) {
                    if let Stmt::Assign(lhs, _) = st {
                        extend(&mut inner, lhs.vars());
                    }
                }
                let rest = self.aterm(owner, rest, &inner);
                ATerm::Seq(Box::new(Stmt::If(c, a.clone(), b.clone())), Box::new(rest))
            }
            Stmt::For { var, start, end, body } => {
                let (name, k) = self.fresh_proc("p_for");
                let end_var = self.names.fresh_exact(&format!("_end_{k}"));
                // the continuation is reachable without running the body
                let mut reads = block_free_vars(body, BTreeSet::new());
                reads.extend(free_vars(rest));
                let mut carried = carried(&reads, scope);
                carried.retain(|v| v != var && *v != end_var);
                let mut params = vec![var.clone(), end_var.clone()];
                params.extend(carried.iter().cloned());
                let next = ATerm::app("+", vec![ATerm::var(var.clone()), ATerm::int(1)]);
                let mut rec_args = vec![next, ATerm::var(end_var.clone())];
                rec_args.extend(carried.iter().map(ATerm::var));
                let recur = ATerm::app(name.clone(), rec_args);
                let guard = ATerm::app("<=", vec![ATerm::var(var.clone()), ATerm::var(end_var)]);
                let body = ATerm::if_(guard, ATerm::seq(body.clone(), recur), rest.clone());
                self.emit(owner, &name, LoopKind::For, params, body);
                let mut call_args = vec![self.aterm(owner, start, scope), self.aterm(owner, end, scope)];
                call_args.extend(carried.iter().map(ATerm::var));
                ATerm::app(name, call_args)
            }
            Stmt::While { cond, body } => {
                let (name, _) = self.fresh_proc("p_while");
                let mut reads = block_free_vars(body, free_vars(cond));
                reads.extend(free_vars(cond));
                reads.extend(free_vars(rest));
                let carried = carried(&reads, scope);
                let recur = ATerm::app(name.clone(), carried.iter().map(ATerm::var).collect());
                let proc_body = ATerm::if_(cond.clone(), ATerm::seq(body.clone(), recur.clone()), rest.clone());
                self.emit(owner, &name, LoopKind::While, carried, proc_body);
                recur
            }
            Stmt::Until { body, cond } => {
                let (name, _) = self.fresh_proc("p_until");
                let mut after = free_vars(cond);
                after.extend(free_vars(rest));
                let carried = carried(&block_free_vars(body, after), scope);
                let recur = ATerm::app(name.clone(), carried.iter().map(ATerm::var).collect());
                let proc_body = ATerm::seq(body.clone(), ATerm::if_(cond.clone(), rest.clone(), recur.clone()));
                self.emit(owner, &name, LoopKind::Until, carried, proc_body);
                recur
            }
        }
    }

    fn fresh_proc(&mut self, stem: &str) -> (String, usize) {
        loop {
            self.counter += 1;
            let name = format!("{stem}_{}", self.counter);
            if self.names.claim(&name) {
                return (name, self.counter);
            }
        }
    }

    fn emit(&mut self, owner: &str, name: &str, kind: LoopKind, params: Vec<String>, body: ATerm) {
        self.origins.insert(name.to_string(), LoopOrigin { procedure: owner.to_string(), kind });
        self.queue.push(Procedure {
            name: name.to_string(),
            arity: params.len(),
            kind: ProcKind::Flat { params, body },
            pos: Default::default(),
        });
    }
}

fn extend(scope: &mut Vec<String>, vars: Vec<&str>) {
    for v in vars {
        if !scope.iter().any(|s| s == v) {
            scope.push(v.to_string());
        }
    }
}

/// Outer variables a loop reads, in binding order.
fn carried(reads: &BTreeSet<String>, scope: &[String]) -> Vec<String> {
    scope.iter().filter(|v| reads.contains(*v)).cloned().collect()
}
