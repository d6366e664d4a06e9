//! Assignment elimination over a shared term graph.
//!
//! An assignment `x <- r; b` is a [`ETerm::Let`]; eliminating it puts the
//! same `r` node at every occurrence of `x` in `b`, so repeated uses of a
//! variable become shared subterms rather than copies.

use std::collections::HashMap;
use std::rc::Rc;

use rand::Rng;

use crate::syntax::{ATerm, AssignLhs, Stmt};
use crate::term::{Head, PlainTerm};

#[derive(Debug, PartialEq, Eq)]
pub enum ETerm {
    Var(String),
    App(Head, Vec<Rc<ETerm>>),
    Let(String, Rc<ETerm>, Rc<ETerm>),
}

type Memo = HashMap<*const ETerm, Rc<ETerm>>;

fn grow<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(64 * 1024, 1024 * 1024, f)
}

impl ETerm {
    /// # Panics
    ///
    /// On loops, statement-ifs and tuple assignments.
    pub fn from_aterm(a: &ATerm) -> Rc<ETerm> {
        grow(|| {
            Rc::new(match a {
                ATerm::Var(v) => ETerm::Var(v.clone()),
                ATerm::App(h, args) => ETerm::App(h.clone(), args.iter().map(ETerm::from_aterm).collect()),
                ATerm::If(c, t, e) => {
                    ETerm::App(Head::If, vec![ETerm::from_aterm(c), ETerm::from_aterm(t), ETerm::from_aterm(e)])
                }
                ATerm::Seq(s, rest) => match &**s {
                    Stmt::Assign(AssignLhs::Var(x), rhs) => {
                        ETerm::Let(x.clone(), ETerm::from_aterm(rhs), ETerm::from_aterm(rest))
                    }
                    other => panic!("ETerm::from_aterm: unlowered statement {other:?}"),
                },
            })
        })
    }

    /// The term with sharing expanded; `None` while lets remain.
    pub fn to_plain(&self) -> Option<PlainTerm> {
        grow(|| match self {
            ETerm::Var(v) => Some(PlainTerm::Var(v.clone())),
            ETerm::App(h, args) => {
                Some(PlainTerm::Node(h.clone(), args.iter().map(|a| a.to_plain()).collect::<Option<_>>()?))
            }
            ETerm::Let(..) => None,
        })
    }

    pub fn to_aterm(&self) -> ATerm {
        grow(|| match self {
            ETerm::Var(v) => ATerm::Var(v.clone()),
            ETerm::App(Head::If, args) if args.len() == 3 => {
                ATerm::if_(args[0].to_aterm(), args[1].to_aterm(), args[2].to_aterm())
            }
            ETerm::App(h, args) => ATerm::App(h.clone(), args.iter().map(|a| a.to_aterm()).collect()),
            ETerm::Let(x, r, b) => ATerm::assign(x.clone(), r.to_aterm(), b.to_aterm()),
        })
    }

    /// Distinct let nodes reachable from `e`.
    pub fn let_count(e: &Rc<ETerm>) -> usize {
        lets(e).len()
    }
}

fn lets(e: &Rc<ETerm>) -> Vec<Rc<ETerm>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let mut stack = vec![e.clone()];
    while let Some(n) = stack.pop() {
        if !seen.insert(Rc::as_ptr(&n)) {
            continue;
        }
        match &*n {
            ETerm::Var(_) => {}
            ETerm::App(_, args) => stack.extend(args.iter().rev().cloned()),
            ETerm::Let(_, r, b) => {
                stack.push(b.clone());
                stack.push(r.clone());
                out.push(n.clone());
            }
        }
    }
    out
}

fn rebuild(e: &Rc<ETerm>, kids: Vec<Rc<ETerm>>) -> Rc<ETerm> {
    let ETerm::App(h, old) = &**e else { unreachable!() };
    if old.iter().zip(&kids).all(|(a, b)| Rc::ptr_eq(a, b)) {
        e.clone()
    } else {
        Rc::new(ETerm::App(h.clone(), kids))
    }
}

/// `e` with free occurrences of `x` replaced by `t`.
fn subst(e: &Rc<ETerm>, x: &str, t: &Rc<ETerm>, memo: &mut Memo) -> Rc<ETerm> {
    if let Some(r) = memo.get(&Rc::as_ptr(e)) {
        return r.clone();
    }
    let out = grow(|| match &**e {
        ETerm::Var(v) if v == x => t.clone(),
        ETerm::Var(_) => e.clone(),
        ETerm::App(_, args) => {
            let kids = args.iter().map(|a| subst(a, x, t, memo)).collect();
            rebuild(e, kids)
        }
        ETerm::Let(y, r, b) => {
            let r2 = subst(r, x, t, memo);
            // `y` shadows `x` in the body
            let b2 = if y == x { b.clone() } else { subst(b, x, t, memo) };
            if Rc::ptr_eq(r, &r2) && Rc::ptr_eq(b, &b2) {
                e.clone()
            } else {
                Rc::new(ETerm::Let(y.clone(), r2, b2))
            }
        }
    });
    memo.insert(Rc::as_ptr(e), out.clone());
    out
}

/// Removes every let, innermost first.
pub fn eliminate(e: &Rc<ETerm>) -> Rc<ETerm> {
    elim(e, &mut Memo::new())
}

fn elim(e: &Rc<ETerm>, memo: &mut Memo) -> Rc<ETerm> {
    if let Some(r) = memo.get(&Rc::as_ptr(e)) {
        return r.clone();
    }
    let out = grow(|| match &**e {
        ETerm::Var(_) => e.clone(),
        ETerm::App(_, args) => {
            let kids = args.iter().map(|a| elim(a, memo)).collect();
            rebuild(e, kids)
        }
        ETerm::Let(x, r, b) => {
            let r2 = elim(r, memo);
            let b2 = elim(b, memo);
            subst(&b2, x, &r2, &mut Memo::new())
        }
    });
    memo.insert(Rc::as_ptr(e), out.clone());
    out
}

/// Removes every let, each time picking one uniformly among those left.
pub fn eliminate_random(e: &Rc<ETerm>, rng: &mut impl Rng) -> Rc<ETerm> {
    let mut cur = e.clone();
    loop {
        let candidates = lets(&cur);
        if candidates.is_empty() {
            return cur;
        }
        let target = &candidates[rng.gen_range(0..candidates.len())];
        let ETerm::Let(x, r, b) = &**target else { unreachable!() };
        let replacement = subst(b, x, r, &mut Memo::new());
        cur = replace(&cur, target, &replacement, &mut Memo::new());
    }
}

/// Eliminates one innermost let (one whose parts hold no lets), the
/// `pick`-th of them modulo their number. `None` when no lets remain.
pub fn eliminate_step(e: &Rc<ETerm>, pick: usize) -> Option<Rc<ETerm>> {
    let inner: Vec<Rc<ETerm>> = lets(e)
        .into_iter()
        .filter(|l| {
            let ETerm::Let(_, r, b) = &**l else { unreachable!() };
            lets(r).is_empty() && lets(b).is_empty()
        })
        .collect();
    if inner.is_empty() {
        return None;
    }
    let target = &inner[pick % inner.len()];
    let ETerm::Let(x, r, b) = &**target else { unreachable!() };
    let replacement = subst(b, x, r, &mut Memo::new());
    Some(replace(e, target, &replacement, &mut Memo::new()))
}

fn replace(e: &Rc<ETerm>, target: &Rc<ETerm>, with: &Rc<ETerm>, memo: &mut Memo) -> Rc<ETerm> {
    if Rc::ptr_eq(e, target) {
        return with.clone();
    }
    if let Some(r) = memo.get(&Rc::as_ptr(e)) {
        return r.clone();
    }
    let out = grow(|| match &**e {
        ETerm::Var(_) => e.clone(),
        ETerm::App(_, args) => {
            let kids = args.iter().map(|a| replace(a, target, with, memo)).collect();
            rebuild(e, kids)
        }
        ETerm::Let(y, r, b) => {
            let r2 = replace(r, target, with, memo);
            let b2 = replace(b, target, with, memo);
            if Rc::ptr_eq(r, &r2) && Rc::ptr_eq(b, &b2) {
                e.clone()
            } else {
                Rc::new(ETerm::Let(y.clone(), r2, b2))
            }
        }
    });
    memo.insert(Rc::as_ptr(e), out.clone());
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CanonNode {
    Var(String),
    App(Head, Vec<usize>),
}

/// A let-free term graph numbered in first-visit, left-to-right order.
/// Constants are merged by head and variables by name, so two graphs are
/// equal exactly when they have the same shape and the same sharing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonGraph {
    pub nodes: Vec<CanonNode>,
    pub root: usize,
}

/// # Panics
///
/// If `e` still contains lets.
pub fn canonical(e: &Rc<ETerm>) -> CanonGraph {
    struct Walk {
        nodes: Vec<CanonNode>,
        by_ptr: HashMap<*const ETerm, usize>,
        consts: HashMap<Head, usize>,
        vars: HashMap<String, usize>,
    }
    impl Walk {
        fn visit(&mut self, e: &Rc<ETerm>) -> usize {
            if let Some(&k) = self.by_ptr.get(&Rc::as_ptr(e)) {
                return k;
            }
            let k = grow(|| match &**e {
                ETerm::Var(v) => {
                    if let Some(&k) = self.vars.get(v) {
                        return k;
                    }
                    self.nodes.push(CanonNode::Var(v.clone()));
                    self.vars.insert(v.clone(), self.nodes.len() - 1);
                    self.nodes.len() - 1
                }
                ETerm::App(h, args) if args.is_empty() => {
                    if let Some(&k) = self.consts.get(h) {
                        return k;
                    }
                    self.nodes.push(CanonNode::App(h.clone(), Vec::new()));
                    self.consts.insert(h.clone(), self.nodes.len() - 1);
                    self.nodes.len() - 1
                }
                ETerm::App(h, args) => {
                    let k = self.nodes.len();
                    self.nodes.push(CanonNode::App(h.clone(), Vec::new()));
                    let kids = args.iter().map(|a| self.visit(a)).collect();
                    self.nodes[k] = CanonNode::App(h.clone(), kids);
                    k
                }
                ETerm::Let(..) => panic!("canonical: term still has lets"),
            });
            self.by_ptr.insert(Rc::as_ptr(e), k);
            k
        }
    }
    let mut w = Walk { nodes: Vec::new(), by_ptr: HashMap::new(), consts: HashMap::new(), vars: HashMap::new() };
    let root = w.visit(e);
    CanonGraph { nodes: w.nodes, root }
}
