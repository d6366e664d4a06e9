//! Decorated terms: the equivalence-class store.
//!
//! A [`Snapshot`] is a table from [`Label`] to a node (head symbol plus
//! child labels). Two occurrences with the same label are the same class and
//! are therefore structurally identical. Replacing every occurrence of a class
//! (`T|(β ← u)`) is implemented by turning the entry for `β` into a forwarding
//! pointer, so every parent slot that held `β` observes `u` on its next read.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{Head, PlainTerm, Signature};

/// Name of an equivalence class.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u64);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub head: Head,
    pub children: Vec<Label>,
    normal: bool,
}

impl Node {
    pub fn is_normal(&self) -> bool {
        self.normal
    }
}

#[derive(Clone, Debug)]
enum Entry {
    Node(Node),
    Forward(Label),
}

/// How input terms are decorated.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum DecoratePolicy {
    /// Syntactically identical subterms receive one label.
    #[default]
    ShareIdentical,
    /// Every occurrence gets its own label.
    AllFresh,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("cycle detected through class {0}")]
    Cycle(Label),
    #[error("splicing {target} into {replacement} would create a cycle")]
    Occurs { target: Label, replacement: Label },
}

/// The first violated store invariant found by [`Snapshot::check`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("closedness: class {parent} refers to missing class {child}")]
    Dangling { parent: Label, child: Label },
    #[error("closedness: root {0} is not a live class")]
    DeadRoot(Label),
    #[error("forwarding chain starting at {0} does not terminate")]
    ForwardLoop(Label),
    #[error("coherence: shared constant {label} does not hold `{head}`")]
    InternMismatch { label: Label, head: Head },
    #[error("acyclicity: class {0} reaches itself")]
    Cycle(Label),
}

/// Variable bindings produced by matching.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(BTreeMap<String, Label>);

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn get(&self, var: &str) -> Option<Label> {
        self.0.get(var).copied()
    }

    pub fn insert(&mut self, var: impl Into<String>, label: Label) -> Option<Label> {
        self.0.insert(var.into(), label)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Label)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(String, Label)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (String, Label)>>(iter: I) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    origin: u64,
    entries: Vec<Entry>,
    interned: HashMap<Head, Label>,
    root: Option<Label>,
    occurs_check: bool,
}

impl Default for Snapshot {
    fn default() -> Self {
        Snapshot::new()
    }
}

impl Snapshot {
    pub fn new() -> Snapshot {
        Snapshot::with_origin(0)
    }

    /// A store whose first label is `origin`.
    pub fn with_origin(origin: u64) -> Snapshot {
        Snapshot { origin, entries: Vec::new(), interned: HashMap::new(), root: None, occurs_check: false }
    }

    pub fn set_occurs_check(&mut self, on: bool) {
        self.occurs_check = on;
    }

    pub fn occurs_check(&self) -> bool {
        self.occurs_check
    }

    pub fn origin(&self) -> u64 {
        self.origin
    }

    /// The label the next allocation will receive.
    pub fn next_label(&self) -> Label {
        Label(self.origin + self.entries.len() as u64)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn root(&self) -> Option<Label> {
        self.root.map(|r| self.resolve(r))
    }

    pub fn set_root(&mut self, root: Label) {
        self.root = Some(root);
    }

    fn index(&self, l: Label) -> Option<usize> {
        let i = l.0.checked_sub(self.origin)? as usize;
        (i < self.entries.len()).then_some(i)
    }

    pub fn contains(&self, l: Label) -> bool {
        self.index(l).is_some()
    }

    fn entry(&self, l: Label) -> &Entry {
        match self.index(l) {
            Some(i) => &self.entries[i],
            None => panic!("label {l} is not part of this snapshot"),
        }
    }

    fn entry_mut(&mut self, l: Label) -> &mut Entry {
        match self.index(l) {
            Some(i) => &mut self.entries[i],
            None => panic!("label {l} is not part of this snapshot"),
        }
    }

    /// Follow forwarding pointers to the live class.
    pub fn resolve(&self, mut l: Label) -> Label {
        while let Entry::Forward(next) = self.entry(l) {
            l = *next;
        }
        l
    }

    /// Like [`resolve`](Self::resolve) but shortens the chain it walked.
    pub fn resolve_mut(&mut self, l: Label) -> Label {
        let target = self.resolve(l);
        let mut cur = l;
        while cur != target {
            let Entry::Forward(next) = *self.entry(cur) else { break };
            *self.entry_mut(cur) = Entry::Forward(target);
            cur = next;
        }
        target
    }

    pub fn node(&self, l: Label) -> &Node {
        match self.entry(self.resolve(l)) {
            Entry::Node(n) => n,
            Entry::Forward(_) => unreachable!(),
        }
    }

    /// The node stored at `l` itself, `None` when `l` has been spliced away.
    pub fn entry_node(&self, l: Label) -> Option<&Node> {
        match self.index(l).map(|i| &self.entries[i]) {
            Some(Entry::Node(n)) => Some(n),
            _ => None,
        }
    }

    pub fn head(&self, l: Label) -> &Head {
        &self.node(l).head
    }

    pub fn children(&self, l: Label) -> &[Label] {
        &self.node(l).children
    }

    /// Children with forwarding resolved.
    pub fn resolved_children(&self, l: Label) -> Vec<Label> {
        self.children(l).iter().map(|&c| self.resolve(c)).collect()
    }

    pub fn is_normal(&self, l: Label) -> bool {
        self.node(l).normal
    }

    pub fn mark_normal(&mut self, l: Label) {
        let l = self.resolve(l);
        if let Entry::Node(n) = self.entry_mut(l) {
            n.normal = true;
        }
    }

    fn push(&mut self, head: Head, children: Vec<Label>, normal: bool) -> Label {
        let l = self.next_label();
        self.entries.push(Entry::Node(Node { head, children, normal }));
        l
    }

    /// A new class that shares with nothing.
    pub fn fresh(&mut self, head: Head, children: Vec<Label>) -> Label {
        self.push(head, children, false)
    }

    /// The globally shared class of a constructor constant.
    pub fn intern(&mut self, head: Head) -> Label {
        if let Some(&l) = self.interned.get(&head) {
            return l;
        }
        let l = self.push(head.clone(), Vec::new(), true);
        self.interned.insert(head, l);
        l
    }

    /// Allocate `head(children)`: constructor constants are shared, anything
    /// else is fresh.
    pub fn alloc(&mut self, sig: &Signature, head: Head, children: Vec<Label>) -> Label {
        if children.is_empty() && sig.is_constructor(&head, 0) {
            self.intern(head)
        } else {
            self.fresh(head, children)
        }
    }

    /// Place a node at an explicit label, growing the table as needed. Used
    /// to rebuild a snapshot from a recorded trace.
    pub fn install(&mut self, l: Label, head: Head, children: Vec<Label>) {
        let i = (l.0 - self.origin) as usize;
        while self.entries.len() <= i {
            self.entries.push(Entry::Forward(Label(u64::MAX)));
        }
        if children.is_empty() {
            self.interned.entry(head.clone()).or_insert(l);
        }
        self.entries[i] = Entry::Node(Node { head, children, normal: false });
    }

    /// Overwrite the children of a live class in place. Every occurrence of
    /// the class observes the change.
    pub fn set_children(&mut self, l: Label, children: Vec<Label>) {
        let l = self.resolve(l);
        if let Entry::Node(n) = self.entry_mut(l) {
            n.children = children;
        }
    }

    /// Does `from`'s subgraph contain `target`?
    pub fn reaches(&self, from: Label, target: Label) -> bool {
        let target = self.resolve(target);
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.resolve(from)];
        while let Some(l) = stack.pop() {
            if l == target {
                return true;
            }
            if seen.insert(l) {
                stack.extend(self.children(l).iter().map(|&c| self.resolve(c)));
            }
        }
        false
    }

    /// `T|(β ← l)`: every occurrence of class `beta` now reads as `l`.
    pub fn splice(&mut self, beta: Label, l: Label) -> Result<(), StoreError> {
        let beta = self.resolve_mut(beta);
        let l = self.resolve_mut(l);
        if beta == l {
            return Ok(());
        }
        if self.occurs_check && self.reaches(l, beta) {
            return Err(StoreError::Occurs { target: beta, replacement: l });
        }
        let node = self.node(beta);
        if node.children.is_empty() && self.interned.get(&node.head) == Some(&beta) {
            let head = node.head.clone();
            self.interned.remove(&head);
        }
        *self.entry_mut(beta) = Entry::Forward(l);
        Ok(())
    }

    /// Enter a ground term as a decorated term.
    ///
    /// # Panics
    /// If `t` contains a variable.
    pub fn decorate(&mut self, sig: &Signature, t: &PlainTerm, policy: DecoratePolicy) -> Label {
        let mut memo = HashMap::new();
        self.decorate_with(sig, t, policy, &mut memo)
    }

    fn decorate_with<'t>(
        &mut self,
        sig: &Signature,
        t: &'t PlainTerm,
        policy: DecoratePolicy,
        memo: &mut HashMap<&'t PlainTerm, Label>,
    ) -> Label {
        let PlainTerm::Node(head, args) = t else {
            panic!("decorate: term is not ground: {t}");
        };
        if policy == DecoratePolicy::ShareIdentical {
            if let Some(&l) = memo.get(t) {
                return l;
            }
        }
        let children = args.iter().map(|a| self.decorate_with(sig, a, policy, memo)).collect();
        let l = match policy {
            DecoratePolicy::ShareIdentical => self.alloc(sig, head.clone(), children),
            DecoratePolicy::AllFresh => self.fresh(head.clone(), children),
        };
        if policy == DecoratePolicy::ShareIdentical {
            memo.insert(t, l);
        }
        l
    }

    /// Erase labels.
    pub fn strip(&self, l: Label) -> Result<PlainTerm, StoreError> {
        let mut on_path = BTreeSet::new();
        let mut memo = HashMap::new();
        self.strip_rec(self.resolve(l), &mut on_path, &mut memo)
    }

    fn strip_rec(
        &self,
        l: Label,
        on_path: &mut BTreeSet<Label>,
        memo: &mut HashMap<Label, PlainTerm>,
    ) -> Result<PlainTerm, StoreError> {
        if let Some(t) = memo.get(&l) {
            return Ok(t.clone());
        }
        if !on_path.insert(l) {
            return Err(StoreError::Cycle(l));
        }
        let node = self.node(l);
        let mut args = Vec::with_capacity(node.children.len());
        for &c in &node.children {
            let c = self.resolve(c);
            args.push(stacker::maybe_grow(32 * 1024, 1024 * 1024, || self.strip_rec(c, on_path, memo))?);
        }
        on_path.remove(&l);
        let t = PlainTerm::Node(node.head.clone(), args);
        memo.insert(l, t.clone());
        Ok(t)
    }

    /// Match a left-linear pattern against a class.
    pub fn match_pattern(&self, pattern: &PlainTerm, l: Label) -> Option<Substitution> {
        let mut theta = Substitution::new();
        self.match_into(pattern, l, &mut theta).then_some(theta)
    }

    fn match_into(&self, pattern: &PlainTerm, l: Label, theta: &mut Substitution) -> bool {
        let l = self.resolve(l);
        match pattern {
            PlainTerm::Var(v) => match theta.get(v) {
                // non-linear patterns: both occurrences must be one class
                Some(prev) => self.resolve(prev) == l,
                None => {
                    theta.insert(v.clone(), l);
                    true
                }
            },
            PlainTerm::Node(head, args) => {
                let node = self.node(l);
                node.head == *head
                    && node.children.len() == args.len()
                    && args.iter().zip(node.children.clone()).all(|(p, c)| self.match_into(p, c, theta))
            }
        }
    }

    /// Build `rhs·θ`. Variables are shared references to their binding;
    /// new structure is fresh except constructor constants.
    ///
    /// # Panics
    /// If `rhs` has a variable outside `θ`'s domain.
    pub fn instantiate(&mut self, sig: &Signature, rhs: &PlainTerm, theta: &Substitution) -> Label {
        match rhs {
            PlainTerm::Var(v) => theta.get(v).unwrap_or_else(|| panic!("instantiate: unbound variable `{v}`")),
            PlainTerm::Node(head, args) => {
                let children = args.iter().map(|a| self.instantiate(sig, a, theta)).collect();
                self.alloc(sig, head.clone(), children)
            }
        }
    }

    /// A structurally identical term that shares no labels with `l`.
    pub fn copy_class(&mut self, l: Label) -> Result<Label, StoreError> {
        let mut memo = HashMap::new();
        let mut on_path = BTreeSet::new();
        self.copy_rec(self.resolve(l), &mut memo, &mut on_path)
    }

    fn copy_rec(
        &mut self,
        l: Label,
        memo: &mut HashMap<Label, Label>,
        on_path: &mut BTreeSet<Label>,
    ) -> Result<Label, StoreError> {
        if let Some(&c) = memo.get(&l) {
            return Ok(c);
        }
        if !on_path.insert(l) {
            return Err(StoreError::Cycle(l));
        }
        let node = self.node(l).clone();
        let mut children = Vec::with_capacity(node.children.len());
        for c in node.children {
            let c = self.resolve(c);
            children.push(self.copy_rec(c, memo, on_path)?);
        }
        on_path.remove(&l);
        let copy = self.push(node.head, children, node.normal);
        memo.insert(l, copy);
        Ok(copy)
    }

    /// Labels reachable from `l` (resolved).
    pub fn reachable(&self, l: Label) -> BTreeSet<Label> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.resolve(l)];
        while let Some(l) = stack.pop() {
            if seen.insert(l) {
                stack.extend(self.children(l).iter().map(|&c| self.resolve(c)));
            }
        }
        seen
    }

    /// Reachable classes with their resolved shape, for comparing snapshots.
    pub fn graph(&self, l: Label) -> BTreeMap<Label, (Head, Vec<Label>)> {
        self.reachable(l).into_iter().map(|n| (n, (self.head(n).clone(), self.resolved_children(n)))).collect()
    }

    /// Verify closedness, forwarding, constant sharing and, optionally,
    /// acyclicity.
    pub fn check(&self, acyclic: bool) -> Result<(), Violation> {
        let n = self.entries.len();
        for (i, entry) in self.entries.iter().enumerate() {
            let here = Label(self.origin + i as u64);
            match entry {
                Entry::Forward(next) => {
                    let mut cur = *next;
                    let mut hops = 0;
                    loop {
                        let Some(j) = self.index(cur) else {
                            return Err(Violation::Dangling { parent: here, child: cur });
                        };
                        match &self.entries[j] {
                            Entry::Node(_) => break,
                            Entry::Forward(nx) => cur = *nx,
                        }
                        hops += 1;
                        if hops > n {
                            return Err(Violation::ForwardLoop(here));
                        }
                    }
                }
                Entry::Node(node) => {
                    if let Some(&child) = node.children.iter().find(|&&c| !self.contains(c)) {
                        return Err(Violation::Dangling { parent: here, child });
                    }
                }
            }
        }
        if let Some(r) = self.root {
            if !self.contains(r) {
                return Err(Violation::DeadRoot(r));
            }
        }
        for (head, &l) in &self.interned {
            let node = self.node(l);
            if node.head != *head || !node.children.is_empty() {
                return Err(Violation::InternMismatch { label: l, head: head.clone() });
            }
        }
        if acyclic {
            self.check_acyclic()?;
        }
        Ok(())
    }

    fn check_acyclic(&self) -> Result<(), Violation> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.entries.len()];
        for start in 0..self.entries.len() {
            if state[start] != 0 || matches!(self.entries[start], Entry::Forward(_)) {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
            state[start] = 1;
            while let Some(&mut (i, ref mut next)) = stack.last_mut() {
                let Entry::Node(node) = &self.entries[i] else { unreachable!() };
                if *next < node.children.len() {
                    let c = self.resolve(node.children[*next]);
                    *next += 1;
                    let j = self.index(c).expect("closedness checked first");
                    match state[j] {
                        0 => {
                            state[j] = 1;
                            stack.push((j, 0));
                        }
                        1 => return Err(Violation::Cycle(c)),
                        _ => {}
                    }
                } else {
                    state[i] = 2;
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn corrupt_child(&mut self, l: Label, slot: usize, bogus: Label) {
        let l = self.resolve(l);
        if let Entry::Node(n) = self.entry_mut(l) {
            n.children[slot] = bogus;
        }
    }
}
