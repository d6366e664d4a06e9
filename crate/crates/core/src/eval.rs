//! Leftmost-innermost evaluation over the decorated-term store.
//!
//! A call `β = p(s̄)` matches a rule of `p`, builds the assignment-free
//! image of the rule's right-hand side in the store (variables resolve to
//! the labels of their defining terms), splices `β` to the image root and
//! then walks the right-hand side in statement order. Conditionals evaluate
//! their guard and splice in exactly one branch.
//!
//! Evaluation runs on an explicit work stack so deep recursion in the
//! evaluated program does not touch the native stack.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::builtins::{error_const, is_error, Builtin};
use crate::desugar::{runtime_program, LoweredProgram};
use crate::store::{DecoratePolicy, Label, Snapshot, StoreError, Substitution, Violation};
use crate::syntax::{ATerm, AssignLhs, ProcKind, Procedure, Program, Stmt};
use crate::term::{Head, PlainTerm, Signature, SymbolKind};
use crate::trace::{EventKind, MutationRecord, NodeRecord, TraceEvent};

/// Order in which the arguments of one node are evaluated.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum ArgOrder {
    #[default]
    LeftToRight,
    /// Test-only: exposes order dependence of destructive programs.
    RightToLeft,
    /// Test-only: an independent seeded shuffle per node. Refuses programs
    /// that use `d_replace`.
    Random,
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub max_steps: u64,
    pub max_depth: usize,
    pub order: ArgOrder,
    pub seed: u64,
    /// First label of the store.
    pub origin: u64,
    pub policy: DecoratePolicy,
    pub occurs_check: bool,
    /// Validate the whole store after every step.
    pub check_store: bool,
    pub trace: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            max_steps: 1_000_000,
            max_depth: 10_000,
            order: ArgOrder::LeftToRight,
            seed: 0,
            origin: 0,
            policy: DecoratePolicy::ShareIdentical,
            occurs_check: false,
            check_store: false,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("step limit of {0} exceeded")]
    StepLimit(u64),
    #[error("call depth limit of {0} exceeded")]
    DepthLimit(usize),
    #[error("`error` reached {0}")]
    ErrorConstant(String),
    #[error("guard of conditional is not a Boolean: {0}")]
    NonBooleanGuard(String),
    #[error("tuple assignment to {expected} variables from {found}")]
    TupleArity { expected: usize, found: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("store invariant violated: {0:?}")]
    StoreViolation(Violation),
    #[error("refused: {0}")]
    Refused(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl EvalError {
    pub fn is_limit(&self) -> bool {
        matches!(self, EvalError::StepLimit(_) | EvalError::DepthLimit(_))
    }
}

/// A program prepared for evaluation: loops lowered, statement-ifs
/// distributed.
#[derive(Clone, Debug)]
pub struct Engine {
    runtime: LoweredProgram,
    sig: Signature,
    procs: HashMap<String, usize>,
    destructive: bool,
}

/// Everything a run leaves behind, including on failure.
#[derive(Debug)]
pub struct Outcome {
    pub value: Result<PlainTerm, EvalError>,
    pub trace: Vec<TraceEvent>,
    pub steps: u64,
    pub snapshot: Snapshot,
    pub root: Label,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub normal_form: PlainTerm,
    pub trace: Vec<TraceEvent>,
    pub steps: u64,
}

pub fn run_query(p: &Program, q: &PlainTerm, opts: &EvalOptions) -> Result<Evaluation, EvalError> {
    let out = Engine::new(p).run(q, opts);
    out.value.map(|normal_form| Evaluation { normal_form, trace: out.trace, steps: out.steps })
}

impl Engine {
    pub fn new(p: &Program) -> Engine {
        let runtime = runtime_program(p);
        let sig = runtime.program.signature();
        let procs = runtime.program.procedures.iter().enumerate().map(|(i, p)| (p.name.clone(), i)).collect();
        let destructive = runtime.program.mentions(Builtin::DReplace.name());
        Engine { runtime, sig, procs, destructive }
    }

    pub fn program(&self) -> &Program {
        &self.runtime.program
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn run(&self, q: &PlainTerm, opts: &EvalOptions) -> Outcome {
        let mut snap = Snapshot::with_origin(opts.origin);
        snap.set_occurs_check(opts.occurs_check);
        if opts.order == ArgOrder::Random && self.destructive {
            let root = snap.intern(Head::named("none"));
            let err = EvalError::Refused("random argument order on a program using d_replace".into());
            return Outcome { value: Err(err), trace: Vec::new(), steps: 0, snapshot: snap, root };
        }
        let root = snap.decorate(&self.sig, q, opts.policy);
        snap.set_root(root);
        let mut m = Machine {
            engine: self,
            opts,
            mark: snap.next_label().0,
            snap,
            stack: vec![Work::Label(root)],
            steps: 0,
            depth: 0,
            trace: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
        };
        let value = m.run().and_then(|()| {
            let r = m.snap.resolve(root);
            if is_error(&m.snap, r) {
                return Err(EvalError::ErrorConstant("the top level".into()));
            }
            Ok(m.snap.strip(r)?)
        });
        Outcome { value, trace: m.trace, steps: m.steps, snapshot: m.snap, root }
    }
}

/// Evaluation order of a spliced right-hand side, mirroring its statements.
#[derive(Debug)]
enum Act {
    /// A variable occurrence or other already built class.
    Eval(Label),
    App {
        label: Label,
        args: Vec<Act>,
    },
    If {
        label: Label,
        cond: Box<Act>,
        then: Box<Act>,
        els: Box<Act>,
    },
    Seq(Vec<Act>),
    TupleCheck {
        label: Label,
        n: usize,
    },
}

#[derive(Debug)]
enum Work {
    Act(Act),
    /// Evaluate a class in place, children first.
    Label(Label),
    /// Children are normal; apply whatever the head calls for.
    Apply(Label),
    /// Guard evaluated; pick a branch. `None` branches are evaluated as
    /// plain classes.
    Branch {
        label: Label,
        cond: Label,
        then: Option<Box<Act>>,
        els: Option<Box<Act>>,
    },
    /// End of a non-tail call.
    Return,
}

struct Machine<'e> {
    engine: &'e Engine,
    opts: &'e EvalOptions,
    snap: Snapshot,
    stack: Vec<Work>,
    steps: u64,
    depth: usize,
    trace: Vec<TraceEvent>,
    /// First label allocated since the last trace event.
    mark: u64,
    rng: ChaCha8Rng,
}

impl<'e> Machine<'e> {
    fn run(&mut self) -> Result<(), EvalError> {
        while let Some(w) = self.stack.pop() {
            match w {
                Work::Act(a) => self.act(a)?,
                Work::Label(l) => self.label(l),
                Work::Apply(l) => self.apply(l)?,
                Work::Branch { label, cond, then, els } => self.branch(label, cond, then, els)?,
                Work::Return => self.depth -= 1,
            }
        }
        Ok(())
    }

    fn order<T>(&mut self, mut items: Vec<T>) -> Vec<T> {
        match self.opts.order {
            ArgOrder::LeftToRight => {}
            ArgOrder::RightToLeft => items.reverse(),
            ArgOrder::Random => items.shuffle(&mut self.rng),
        }
        items
    }

    /// Push items so that the first one is processed first.
    fn push_all(&mut self, items: Vec<Work>) {
        self.stack.extend(items.into_iter().rev());
    }

    fn act(&mut self, a: Act) -> Result<(), EvalError> {
        match a {
            Act::Eval(l) => self.label(l),
            Act::App { label, args } => {
                if !self.snap.is_normal(label) {
                    self.stack.push(Work::Apply(label));
                    let args = self.order(args);
                    self.push_all(args.into_iter().map(Work::Act).collect());
                }
            }
            Act::If { label, cond, then, els } => {
                if !self.snap.is_normal(label) {
                    let c = act_label(&cond);
                    self.stack.push(Work::Branch { label, cond: c, then: Some(then), els: Some(els) });
                    self.stack.push(Work::Act(*cond));
                }
            }
            Act::Seq(items) => self.push_all(items.into_iter().map(Work::Act).collect()),
            Act::TupleCheck { label, n } => {
                let l = self.snap.resolve(label);
                let node = self.snap.node(l);
                if node.head != Head::Tuple || node.children.len() < n {
                    return Err(EvalError::TupleArity { expected: n, found: self.show(l) });
                }
            }
        }
        Ok(())
    }

    fn label(&mut self, l: Label) {
        let l = self.snap.resolve(l);
        if self.snap.is_normal(l) {
            return;
        }
        let node = self.snap.node(l);
        if node.head == Head::If && node.children.len() == 3 {
            let cond = node.children[0];
            self.stack.push(Work::Branch { label: l, cond, then: None, els: None });
            self.stack.push(Work::Label(cond));
            return;
        }
        let kids = node.children.clone();
        self.stack.push(Work::Apply(l));
        let kids = self.order(kids);
        self.push_all(kids.into_iter().map(Work::Label).collect());
    }

    fn tick(&mut self) -> Result<(), EvalError> {
        self.steps += 1;
        if self.steps > self.opts.max_steps {
            return Err(EvalError::StepLimit(self.opts.max_steps));
        }
        Ok(())
    }

    fn after_step(&mut self) -> Result<(), EvalError> {
        if self.opts.check_store {
            self.snap.check(self.opts.occurs_check).map_err(EvalError::StoreViolation)?;
        }
        Ok(())
    }

    fn show(&self, l: Label) -> String {
        match self.snap.strip(l) {
            Ok(t) => t.to_string(),
            Err(_) => format!("<cyclic {l}>"),
        }
    }

    fn strict_args(&self, l: Label) -> Result<(), EvalError> {
        if self.snap.children(l).iter().any(|&c| is_error(&self.snap, self.snap.resolve(c))) {
            return Err(EvalError::ErrorConstant(format!("an argument of {}", self.show(l))));
        }
        Ok(())
    }

    fn apply(&mut self, l: Label) -> Result<(), EvalError> {
        let l = self.snap.resolve(l);
        if self.snap.is_normal(l) {
            return Ok(());
        }
        let engine = self.engine;
        let node = self.snap.node(l);
        let arity = node.children.len();
        let head = node.head.clone();
        match engine.sig.kind(&head, arity) {
            Some(SymbolKind::Defined) => {
                let idx = engine.procs[head.as_name().unwrap_or_default()];
                self.call(l, &engine.runtime.program.procedures[idx])
            }
            Some(SymbolKind::Compiled) => {
                let b = head
                    .as_name()
                    .and_then(|n| Builtin::lookup(n, arity))
                    .ok_or_else(|| EvalError::Internal(format!("no builtin for {head}")))?;
                self.builtin(l, b)
            }
            // Constructors, including the `c_f` constants made by `top`.
            Some(SymbolKind::Constructor) | None => {
                self.snap.mark_normal(l);
                Ok(())
            }
        }
    }

    fn builtin(&mut self, l: Label, b: Builtin) -> Result<(), EvalError> {
        self.strict_args(l)?;
        self.tick()?;
        let before = self.opts.trace.then(|| self.show(l));
        let args = self.snap.resolved_children(l);
        let result = b.apply(&mut self.snap, &args)?;
        self.snap.splice(l, result)?;
        if let Some(before) = before {
            let (kind, mutated) = if b.is_destructive() {
                let target = self.snap.resolve(result);
                let children = self.snap.children(target).to_vec();
                (EventKind::Destructive, Some(MutationRecord { label: target, children }))
            } else {
                (EventKind::Builtin, None)
            };
            self.event(kind, b.name().to_string(), l, before, result, mutated);
        }
        self.after_step()
    }

    fn branch(
        &mut self,
        label: Label,
        cond: Label,
        then: Option<Box<Act>>,
        els: Option<Box<Act>>,
    ) -> Result<(), EvalError> {
        let label = self.snap.resolve(label);
        let c = self.snap.resolve(cond);
        let guard = {
            let n = self.snap.node(c);
            match (n.children.is_empty(), n.head.as_name()) {
                (true, Some("true")) => true,
                (true, Some("false")) => false,
                _ if is_error(&self.snap, c) => {
                    return Err(EvalError::ErrorConstant("the guard of a conditional".into()))
                }
                _ => return Err(EvalError::NonBooleanGuard(self.show(c))),
            }
        };
        self.tick()?;
        let before = self.opts.trace.then(|| self.show(label));
        let kids = self.snap.children(label).to_vec();
        let (target, act) = if guard { (kids[1], then) } else { (kids[2], els) };
        self.snap.splice(label, target)?;
        if let Some(before) = before {
            self.event(EventKind::Cond, "if".into(), label, before, target, None);
        }
        self.after_step()?;
        match act {
            Some(a) => self.stack.push(Work::Act(*a)),
            None => self.stack.push(Work::Label(target)),
        }
        Ok(())
    }

    fn call(&mut self, l: Label, proc: &'e Procedure) -> Result<(), EvalError> {
        self.strict_args(l)?;
        self.tick()?;
        let before = self.opts.trace.then(|| self.show(l));
        let matched = match &proc.kind {
            ProcKind::Flat { params, body } => {
                let args = self.snap.children(l);
                let theta: Vec<(&str, Label)> = params.iter().map(String::as_str).zip(args.iter().copied()).collect();
                Some((theta, body, EventKind::Call, proc.name.clone()))
            }
            ProcKind::Rewrite { rules, .. } => rules.iter().enumerate().find_map(|(k, r)| {
                let theta: Substitution = self.snap.match_pattern(&r.lhs, l)?;
                let theta: Vec<(&str, Label)> =
                    r.lhs.vars().into_iter().map(|v| (v, theta.get(v).expect("matched variable"))).collect();
                Some((theta, &r.rhs, EventKind::Rewrite, format!("{}#{}", proc.name, k + 1)))
            }),
        };
        let Some((mut env, rhs, kind, rule)) = matched else {
            // completeness fallback
            let err = error_const(&mut self.snap);
            self.snap.splice(l, err)?;
            if let Some(before) = before {
                self.event(EventKind::Splice, "error".into(), l, before, err, None);
            }
            return self.after_step();
        };
        let (root, act) = self.image(rhs, &mut env)?;
        self.snap.splice(l, root)?;
        if let Some(before) = before {
            self.event(kind, rule, l, before, root, None);
        }
        self.after_step()?;
        if !matches!(self.stack.last(), Some(Work::Return)) {
            if self.depth >= self.opts.max_depth {
                return Err(EvalError::DepthLimit(self.opts.max_depth));
            }
            self.depth += 1;
            self.stack.push(Work::Return);
        }
        self.stack.push(Work::Act(act));
        Ok(())
    }

    /// Build the assignment-free image of `a` under `env`.
    fn image(&mut self, a: &'e ATerm, env: &mut Vec<(&'e str, Label)>) -> Result<(Label, Act), EvalError> {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || match a {
            ATerm::Var(x) => {
                let l = env
                    .iter()
                    .rev()
                    .find(|(v, _)| v == x)
                    .map(|e| e.1)
                    .ok_or_else(|| EvalError::Internal(format!("unbound variable `{x}`")))?;
                Ok((l, Act::Eval(l)))
            }
            ATerm::App(h, args) => {
                let mut kids = Vec::with_capacity(args.len());
                let mut acts = Vec::with_capacity(args.len());
                for x in args {
                    let (l, act) = self.image(x, env)?;
                    kids.push(l);
                    acts.push(act);
                }
                let label = self.snap.alloc(&self.engine.sig, h.clone(), kids);
                Ok((label, Act::App { label, args: acts }))
            }
            ATerm::If(c, t, e) => {
                let (cl, ca) = self.image(c, env)?;
                let (tl, ta) = self.image(t, env)?;
                let (el, ea) = self.image(e, env)?;
                let label = self.snap.fresh(Head::If, vec![cl, tl, el]);
                Ok((label, Act::If { label, cond: Box::new(ca), then: Box::new(ta), els: Box::new(ea) }))
            }
            ATerm::Seq(s, rest) => {
                let Stmt::Assign(lhs, rhs) = &**s else {
                    return Err(EvalError::Internal("statement survived lowering".into()));
                };
                let (rl, ra) = self.image(rhs, env)?;
                let mark = env.len();
                let mut acts = vec![ra];
                match lhs {
                    AssignLhs::Var(x) => env.push((x, rl)),
                    AssignLhs::Tuple(xs) => {
                        acts.push(Act::TupleCheck { label: rl, n: xs.len() });
                        for (i, x) in xs.iter().enumerate() {
                            let idx = self.snap.intern(Head::Int((i + 1).into()));
                            let pl = self.snap.fresh(Head::named(Builtin::Pi.name()), vec![idx, rl]);
                            acts.push(Act::App { label: pl, args: vec![Act::Eval(idx), Act::Eval(rl)] });
                            env.push((x, pl));
                        }
                    }
                }
                let (l, act) = self.image(rest, env)?;
                env.truncate(mark);
                acts.push(act);
                Ok((l, Act::Seq(acts)))
            }
        })
    }

    fn event(
        &mut self,
        kind: EventKind,
        rule: String,
        label: Label,
        before: String,
        result: Label,
        mutated: Option<MutationRecord>,
    ) {
        let next = self.snap.next_label().0;
        let nodes = (self.mark..next)
            .filter_map(|k| {
                let l = Label(k);
                self.snap.entry_node(l).map(|n| NodeRecord::new(l, &n.head, &n.children))
            })
            .collect();
        self.mark = next;
        let result = self.snap.resolve(result);
        self.trace.push(TraceEvent {
            step: self.steps,
            kind,
            rule,
            label,
            before,
            after: self.show(result),
            result,
            nodes,
            mutated,
        });
    }
}

fn act_label(a: &Act) -> Label {
    match a {
        Act::Eval(l) | Act::App { label: l, .. } | Act::If { label: l, .. } | Act::TupleCheck { label: l, .. } => *l,
        Act::Seq(items) => act_label(items.last().expect("non-empty sequence")),
    }
}
