//! Plain (undecorated) terms and the symbol signature of a program.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;

use crate::builtins;

/// The head symbol of a term node.
///
/// Integers and tuples are built-in constructor families; `If` is the
/// conditional, which the evaluator treats as a compiled procedure with
/// lazy branches.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    Named(String),
    Int(BigInt),
    Tuple,
    If,
}

impl Head {
    pub fn named(name: impl Into<String>) -> Head {
        Head::Named(name.into())
    }

    pub fn as_name(&self) -> Option<&str> {
        match self {
            Head::Named(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Head::Int(i) => Some(i),
            _ => None,
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Head::Named(n) => f.write_str(n),
            Head::Int(i) => write!(f, "{i}"),
            Head::Tuple => f.write_str("<>"),
            Head::If => f.write_str("if"),
        }
    }
}

/// A first-order term with variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlainTerm {
    Var(String),
    Node(Head, Vec<PlainTerm>),
}

impl PlainTerm {
    pub fn var(name: impl Into<String>) -> PlainTerm {
        PlainTerm::Var(name.into())
    }

    pub fn app(name: impl Into<String>, args: Vec<PlainTerm>) -> PlainTerm {
        PlainTerm::Node(Head::Named(name.into()), args)
    }

    pub fn constant(name: impl Into<String>) -> PlainTerm {
        PlainTerm::app(name, Vec::new())
    }

    pub fn int(value: impl Into<BigInt>) -> PlainTerm {
        PlainTerm::Node(Head::Int(value.into()), Vec::new())
    }

    pub fn tuple(items: Vec<PlainTerm>) -> PlainTerm {
        PlainTerm::Node(Head::Tuple, items)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            PlainTerm::Var(_) => false,
            PlainTerm::Node(_, args) => args.iter().all(PlainTerm::is_ground),
        }
    }

    /// Variables in left-to-right order of first occurrence, with repeats.
    pub fn var_occurrences(&self) -> Vec<&str> {
        fn go<'a>(t: &'a PlainTerm, out: &mut Vec<&'a str>) {
            match t {
                PlainTerm::Var(v) => out.push(v),
                PlainTerm::Node(_, args) => args.iter().for_each(|a| go(a, out)),
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    pub fn vars(&self) -> BTreeSet<&str> {
        self.var_occurrences().into_iter().collect()
    }

    pub fn size(&self) -> usize {
        match self {
            PlainTerm::Var(_) => 1,
            PlainTerm::Node(_, args) => 1 + args.iter().map(PlainTerm::size).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            PlainTerm::Var(_) => 1,
            PlainTerm::Node(_, args) => 1 + args.iter().map(PlainTerm::depth).max().unwrap_or(0),
        }
    }

    pub fn head(&self) -> Option<&Head> {
        match self {
            PlainTerm::Var(_) => None,
            PlainTerm::Node(h, _) => Some(h),
        }
    }

    pub fn args(&self) -> &[PlainTerm] {
        match self {
            PlainTerm::Var(_) => &[],
            PlainTerm::Node(_, args) => args,
        }
    }
}

impl fmt::Display for PlainTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::printer::print_aterm(&crate::syntax::ATerm::from(self)))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    Constructor,
    Defined,
    Compiled,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolKind::Constructor => "constructor",
            SymbolKind::Defined => "defined",
            SymbolKind::Compiled => "compiled",
        })
    }
}

/// Arity of a declared constructor: one or more fixed arities, or any
/// arity (`A/*`, used for arrays).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CtorArity {
    Fixed(BTreeSet<usize>),
    Variadic,
}

impl CtorArity {
    pub fn admits(&self, arity: usize) -> bool {
        match self {
            CtorArity::Fixed(set) => set.contains(&arity),
            CtorArity::Variadic => true,
        }
    }
}

/// Constructor constants every program has.
pub const PREDECLARED_CONSTANTS: [&str; 4] = ["error", "true", "false", "none"];

/// Prefix of the per-constructor constants produced by `top`.
pub const TOP_PREFIX: &str = "c_";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    constructors: BTreeMap<String, CtorArity>,
    defined: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new() -> Signature {
        Signature::default()
    }

    pub fn declare_constructor(&mut self, name: &str, arity: Option<usize>) {
        match arity {
            None => {
                self.constructors.insert(name.to_string(), CtorArity::Variadic);
            }
            Some(n) => {
                let entry =
                    self.constructors.entry(name.to_string()).or_insert_with(|| CtorArity::Fixed(BTreeSet::new()));
                if let CtorArity::Fixed(set) = entry {
                    set.insert(n);
                }
            }
        }
    }

    pub fn declare_defined(&mut self, name: &str, arity: usize) {
        self.defined.insert(name.to_string(), arity);
    }

    pub fn constructors(&self) -> impl Iterator<Item = (&str, &CtorArity)> {
        self.constructors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn constructor_arity(&self, name: &str) -> Option<&CtorArity> {
        self.constructors.get(name)
    }

    pub fn defined_arity(&self, name: &str) -> Option<usize> {
        self.defined.get(name).copied()
    }

    pub fn is_declared_constructor(&self, name: &str) -> bool {
        self.constructors.contains_key(name)
    }

    /// Classify `head` applied to `arity` arguments. `None` means the
    /// symbol is unknown (or used at an arity it was not declared with).
    pub fn kind(&self, head: &Head, arity: usize) -> Option<SymbolKind> {
        match head {
            Head::Int(_) => (arity == 0).then_some(SymbolKind::Constructor),
            Head::Tuple => Some(SymbolKind::Constructor),
            Head::If => (arity == 3).then_some(SymbolKind::Compiled),
            Head::Named(name) => {
                if self.defined.get(name) == Some(&arity) {
                    return Some(SymbolKind::Defined);
                }
                if builtins::Builtin::lookup(name, arity).is_some() {
                    return Some(SymbolKind::Compiled);
                }
                if self.constructors.get(name).is_some_and(|a| a.admits(arity)) {
                    return Some(SymbolKind::Constructor);
                }
                if arity == 0 && self.is_implicit_constant(name) {
                    return Some(SymbolKind::Constructor);
                }
                None
            }
        }
    }

    pub fn is_constructor(&self, head: &Head, arity: usize) -> bool {
        self.kind(head, arity) == Some(SymbolKind::Constructor)
    }

    fn is_implicit_constant(&self, name: &str) -> bool {
        if PREDECLARED_CONSTANTS.contains(&name) {
            return true;
        }
        let Some(rest) = name.strip_prefix(TOP_PREFIX) else {
            return false;
        };
        if let Some(n) = rest.strip_prefix("tuple") {
            return n.parse::<usize>().is_ok();
        }
        match self.constructors.get(rest) {
            Some(CtorArity::Variadic) => true,
            Some(CtorArity::Fixed(set)) => set.iter().any(|&a| a > 0),
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.declare_constructor("cons", Some(2));
        s.declare_constructor("NIL", Some(0));
        s.declare_constructor("A", None);
        s.declare_defined("append", 2);
        s
    }

    #[test]
    fn classifies_symbols() {
        let s = sig();
        assert_eq!(s.kind(&Head::named("cons"), 2), Some(SymbolKind::Constructor));
        assert_eq!(s.kind(&Head::named("cons"), 1), None);
        assert_eq!(s.kind(&Head::named("append"), 2), Some(SymbolKind::Defined));
        assert_eq!(s.kind(&Head::named("+"), 2), Some(SymbolKind::Compiled));
        assert_eq!(s.kind(&Head::named("A"), 7), Some(SymbolKind::Constructor));
        assert_eq!(s.kind(&Head::Int(5.into()), 0), Some(SymbolKind::Constructor));
        assert_eq!(s.kind(&Head::Tuple, 2), Some(SymbolKind::Constructor));
        assert_eq!(s.kind(&Head::named("error"), 0), Some(SymbolKind::Constructor));
        assert_eq!(s.kind(&Head::named("c_cons"), 0), Some(SymbolKind::Constructor));
        assert_eq!(s.kind(&Head::named("c_tuple2"), 0), Some(SymbolKind::Constructor));
        assert_eq!(s.kind(&Head::named("c_NIL"), 0), None);
        assert_eq!(s.kind(&Head::named("nope"), 0), None);
    }

    #[test]
    fn term_helpers() {
        let t = PlainTerm::app("f", vec![PlainTerm::var("x"), PlainTerm::app("g", vec![PlainTerm::var("x")])]);
        assert!(!t.is_ground());
        assert_eq!(t.var_occurrences(), vec!["x", "x"]);
        assert_eq!(t.size(), 4);
        assert_eq!(t.depth(), 3);
    }
}
