//! Evaluation traces: one record per step, serialized as JSON lines.
//!
//! Besides the printed before/after terms, each event carries the store
//! nodes allocated during the step and any in-place mutation, which is
//! enough to rebuild the final store from the decorated query alone.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{DecoratePolicy, Label, Snapshot, StoreError};
use crate::term::{Head, PlainTerm, Signature};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// A rule of a rewrite procedure.
    Rewrite,
    Builtin,
    Destructive,
    Cond,
    /// The rule of a flat procedure.
    Call,
    /// A redex no rule matches, replaced by `error`.
    Splice,
}

/// A store node as allocated: head printed, children by label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub label: Label,
    pub head: String,
    pub children: Vec<Label>,
}

impl NodeRecord {
    pub fn new(label: Label, head: &Head, children: &[Label]) -> NodeRecord {
        NodeRecord { label, head: head.to_string(), children: children.to_vec() }
    }

    pub fn head(&self) -> Head {
        decode_head(&self.head)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub label: Label,
    pub children: Vec<Label>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub kind: EventKind,
    /// `p` for a flat procedure, `p#k` for rule k of a rewrite procedure,
    /// the builtin's name, `if`, or `error`.
    pub rule: String,
    /// The class that was rewritten.
    pub label: Label,
    pub before: String,
    pub after: String,
    /// The class `label` now forwards to.
    pub result: Label,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutated: Option<MutationRecord>,
}

fn decode_head(s: &str) -> Head {
    match s {
        "<>" => Head::Tuple,
        "if" => Head::If,
        _ => match s.parse::<BigInt>() {
            Ok(i) => Head::Int(i),
            Err(_) => Head::Named(s.to_string()),
        },
    }
}

pub fn to_json_lines(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_json_lines(text: &str) -> Result<Vec<TraceEvent>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("event {step}: label {label} is not in the store")]
    Unknown { step: u64, label: Label },
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Rebuild the store a run ended with: decorate `query` exactly as the run
/// did, then apply each event's allocations, mutation and splice.
pub fn replay(
    sig: &Signature,
    query: &PlainTerm,
    origin: u64,
    policy: DecoratePolicy,
    events: &[TraceEvent],
) -> Result<(Snapshot, Label), ReplayError> {
    let mut snap = Snapshot::with_origin(origin);
    let root = snap.decorate(sig, query, policy);
    snap.set_root(root);
    for e in events {
        for n in &e.nodes {
            snap.install(n.label, n.head(), n.children.clone());
        }
        if let Some(m) = &e.mutated {
            snap.set_children(m.label, m.children.clone());
        }
        for l in [e.label, e.result] {
            if !snap.contains(l) {
                return Err(ReplayError::Unknown { step: e.step, label: l });
            }
        }
        snap.splice(e.label, e.result)?;
    }
    Ok((snap, root))
}

/// Structure reachable from `root`, comparable across two stores.
pub fn final_graph(snap: &Snapshot, root: Label) -> BTreeMap<Label, (Head, Vec<Label>)> {
    snap.graph(snap.resolve(root))
}
