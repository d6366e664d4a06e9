//! Procedure schemas and compiled procedures, implemented natively over the
//! store.

use std::cmp::Ordering;
use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::store::{Label, Snapshot, StoreError};
use crate::term::{Head, TOP_PREFIX};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    Top,
    Eq,
    Arg,
    Pi,
    Replace,
    DReplace,
    Copy,
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
}

const TABLE: [(&str, usize, Builtin); 19] = [
    ("top", 1, Builtin::Top),
    ("eq", 2, Builtin::Eq),
    ("arg", 2, Builtin::Arg),
    ("pi", 2, Builtin::Pi),
    ("replace", 3, Builtin::Replace),
    ("d_replace", 3, Builtin::DReplace),
    ("copy", 1, Builtin::Copy),
    ("sum", 2, Builtin::Add),
    ("+", 2, Builtin::Add),
    ("-", 2, Builtin::Sub),
    ("*", 2, Builtin::Mul),
    ("/", 2, Builtin::Div),
    ("<", 2, Builtin::Lt),
    ("<=", 2, Builtin::Le),
    (">", 2, Builtin::Gt),
    (">=", 2, Builtin::Ge),
    ("and", 2, Builtin::And),
    ("or", 2, Builtin::Or),
    ("not", 1, Builtin::Not),
];

impl Builtin {
    pub fn lookup(name: &str, arity: usize) -> Option<Builtin> {
        TABLE.iter().find(|(n, a, _)| *n == name && *a == arity).map(|e| e.2)
    }

    /// Is `name` reserved for a builtin at some arity?
    pub fn is_name(name: &str) -> bool {
        TABLE.iter().any(|(n, _, _)| *n == name)
    }

    pub fn names() -> impl Iterator<Item = (&'static str, usize)> {
        TABLE.iter().map(|(n, a, _)| (*n, *a))
    }

    pub fn name(self) -> &'static str {
        TABLE.iter().find(|e| e.2 == self).map(|e| e.0).unwrap()
    }

    pub fn arity(self) -> usize {
        TABLE.iter().find(|e| e.2 == self).map(|e| e.1).unwrap()
    }

    pub fn is_destructive(self) -> bool {
        self == Builtin::DReplace
    }

    /// Apply to evaluated arguments. Ill-typed operands and out-of-range
    /// indices give the `error` constant.
    ///
    /// `d_replace` mutates the class of its third argument and returns it.
    pub fn apply(self, snap: &mut Snapshot, args: &[Label]) -> Result<Label, StoreError> {
        debug_assert_eq!(args.len(), self.arity());
        let args: Vec<Label> = args.iter().map(|&a| snap.resolve(a)).collect();
        let int = |snap: &Snapshot, l: Label| -> Option<BigInt> {
            let n = snap.node(l);
            n.children.is_empty().then(|| n.head.as_int().cloned()).flatten()
        };
        let boolean = |snap: &Snapshot, l: Label| -> Option<bool> {
            let n = snap.node(l);
            if !n.children.is_empty() {
                return None;
            }
            match n.head.as_name() {
                Some("true") => Some(true),
                Some("false") => Some(false),
                _ => None,
            }
        };
        let out = match self {
            Builtin::Top => {
                let n = snap.node(args[0]);
                if n.children.is_empty() {
                    return Ok(args[0]);
                }
                let name = match &n.head {
                    Head::Tuple => format!("{TOP_PREFIX}tuple{}", n.children.len()),
                    h => format!("{TOP_PREFIX}{h}"),
                };
                Some(snap.intern(Head::Named(name)))
            }
            Builtin::Eq => {
                let e = structurally_equal(snap, args[0], args[1]);
                Some(bool_const(snap, e))
            }
            Builtin::Arg | Builtin::Pi => {
                let node = snap.node(args[1]);
                if self == Builtin::Pi && node.head != Head::Tuple {
                    None
                } else {
                    index(snap, args[0], node.children.len()).map(|i| node.children[i])
                }
            }
            Builtin::Replace | Builtin::DReplace => {
                let node = snap.node(args[2]).clone();
                match index(snap, args[0], node.children.len()) {
                    None => None,
                    Some(i) => {
                        let mut kids = node.children;
                        kids[i] = args[1];
                        if self == Builtin::Replace {
                            let l = snap.fresh(node.head, kids);
                            snap.mark_normal(l);
                            Some(l)
                        } else {
                            if snap.occurs_check() && snap.reaches(args[1], args[2]) {
                                return Err(StoreError::Occurs { target: args[2], replacement: args[1] });
                            }
                            snap.set_children(args[2], kids);
                            Some(args[2])
                        }
                    }
                }
            }
            Builtin::Copy => Some(snap.copy_class(args[0])?),
            Builtin::Add | Builtin::Sub | Builtin::Mul | Builtin::Div => {
                match (int(snap, args[0]), int(snap, args[1])) {
                    (Some(a), Some(b)) => {
                        let r = match self {
                            Builtin::Add => Some(a + b),
                            Builtin::Sub => Some(a - b),
                            Builtin::Mul => Some(a * b),
                            _ => (!b.is_zero()).then(|| a.div_floor(&b)),
                        };
                        r.map(|v| snap.intern(Head::Int(v)))
                    }
                    _ => None,
                }
            }
            Builtin::Lt | Builtin::Le | Builtin::Gt | Builtin::Ge => match (int(snap, args[0]), int(snap, args[1])) {
                (Some(a), Some(b)) => {
                    let o = a.cmp(&b);
                    let r = match self {
                        Builtin::Lt => o == Ordering::Less,
                        Builtin::Le => o != Ordering::Greater,
                        Builtin::Gt => o == Ordering::Greater,
                        _ => o != Ordering::Less,
                    };
                    Some(bool_const(snap, r))
                }
                _ => None,
            },
            Builtin::And | Builtin::Or => match (boolean(snap, args[0]), boolean(snap, args[1])) {
                (Some(a), Some(b)) => {
                    let r = if self == Builtin::And { a && b } else { a || b };
                    Some(bool_const(snap, r))
                }
                _ => None,
            },
            Builtin::Not => boolean(snap, args[0]).map(|b| bool_const(snap, !b)),
        };
        Ok(match out {
            Some(l) => l,
            None => error_const(snap),
        })
    }
}

pub fn error_const(snap: &mut Snapshot) -> Label {
    snap.intern(Head::named("error"))
}

pub fn bool_const(snap: &mut Snapshot, b: bool) -> Label {
    snap.intern(Head::named(if b { "true" } else { "false" }))
}

/// Is `l` the `error` constant (shared or a copy of it)?
pub fn is_error(snap: &Snapshot, l: Label) -> bool {
    let n = snap.node(l);
    n.children.is_empty() && n.head.as_name() == Some("error")
}

/// 1-based index operand to a 0-based slot.
fn index(snap: &Snapshot, i: Label, len: usize) -> Option<usize> {
    let n = snap.node(i);
    if !n.children.is_empty() {
        return None;
    }
    let i = n.head.as_int()?.to_usize()?;
    (1..=len).contains(&i).then(|| i - 1)
}

/// Structural equality of the terms two classes denote. Pairs already
/// under comparison are assumed equal, so cyclic graphs terminate.
pub fn structurally_equal(snap: &Snapshot, a: Label, b: Label) -> bool {
    let mut assumed = HashSet::new();
    let mut stack = vec![(a, b)];
    while let Some((a, b)) = stack.pop() {
        let (a, b) = (snap.resolve(a), snap.resolve(b));
        if a == b || !assumed.insert((a, b)) {
            continue;
        }
        let (na, nb) = (snap.node(a), snap.node(b));
        if na.head != nb.head || na.children.len() != nb.children.len() {
            return false;
        }
        stack.extend(na.children.iter().copied().zip(nb.children.iter().copied()));
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::DecoratePolicy;
    use crate::syntax::parse_term;
    use crate::term::{PlainTerm, Signature};

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.declare_constructor("cons", Some(2));
        s.declare_constructor("NIL", Some(0));
        s.declare_constructor("A", None);
        s
    }

    fn run(b: Builtin, args: &[&str]) -> (Snapshot, Vec<Label>, Label) {
        let s = sig();
        let mut snap = Snapshot::new();
        let ls: Vec<Label> = args
            .iter()
            .map(|a| snap.decorate(&s, &parse_term(a, &s).unwrap(), DecoratePolicy::ShareIdentical))
            .collect();
        let r = b.apply(&mut snap, &ls).unwrap();
        (snap, ls, r)
    }

    fn val(b: Builtin, args: &[&str]) -> PlainTerm {
        let (snap, _, r) = run(b, args);
        snap.strip(r).unwrap()
    }

    fn t(src: &str) -> PlainTerm {
        parse_term(src, &sig()).unwrap()
    }

    #[test]
    fn table_lookup() {
        assert_eq!(Builtin::lookup("sum", 2), Some(Builtin::Add));
        assert_eq!(Builtin::lookup("d_replace", 3), Some(Builtin::DReplace));
        assert_eq!(Builtin::lookup("eq", 3), None);
        assert!(Builtin::names().filter(|(n, a)| Builtin::lookup(n, *a).unwrap().is_destructive()).count() == 1);
    }

    #[test]
    fn top_schema() {
        assert_eq!(val(Builtin::Top, &["cons(1, NIL)"]), t("c_cons"));
        assert_eq!(val(Builtin::Top, &["NIL"]), t("NIL"));
        assert_eq!(val(Builtin::Top, &["<1, 2>"]), t("c_tuple2"));
        assert_eq!(val(Builtin::Top, &["7"]), t("7"));
    }

    #[test]
    fn eq_schema() {
        assert_eq!(val(Builtin::Eq, &["NIL", "NIL"]), t("true"));
        assert_eq!(val(Builtin::Eq, &["NIL", "0"]), t("false"));
        let s = sig();
        let mut snap = Snapshot::new();
        let a = snap.decorate(&s, &t("cons(1, NIL)"), DecoratePolicy::AllFresh);
        let b = snap.decorate(&s, &t("cons(1, NIL)"), DecoratePolicy::AllFresh);
        assert_ne!(a, b);
        let r = Builtin::Eq.apply(&mut snap, &[a, b]).unwrap();
        assert_eq!(snap.strip(r).unwrap(), t("true"));
    }

    #[test]
    fn arg_and_pi() {
        assert_eq!(val(Builtin::Arg, &["2", "A(5, 6, 7)"]), t("6"));
        assert_eq!(val(Builtin::Arg, &["1", "<1, 2>"]), t("1"));
        assert_eq!(val(Builtin::Arg, &["4", "A(5, 6, 7)"]), t("error"));
        assert_eq!(val(Builtin::Arg, &["0", "A(5, 6, 7)"]), t("error"));
        assert_eq!(val(Builtin::Arg, &["NIL", "A(5)"]), t("error"));
        assert_eq!(val(Builtin::Pi, &["2", "<1, 2>"]), t("2"));
        assert_eq!(val(Builtin::Pi, &["1", "A(5)"]), t("error"));
        // the child label itself, not a copy
        let (snap, ls, r) = run(Builtin::Arg, &["1", "A(cons(1, NIL))"]);
        assert_eq!(r, snap.children(ls[1])[0]);
    }

    #[test]
    fn replace_is_fresh() {
        let (snap, ls, r) = run(Builtin::Replace, &["1", "0", "A(5, 6)"]);
        assert_eq!(snap.strip(r).unwrap(), t("A(0, 6)"));
        assert_eq!(snap.strip(ls[2]).unwrap(), t("A(5, 6)"));
        assert_ne!(r, ls[2]);
        assert_eq!(snap.children(r)[1], snap.children(ls[2])[1]);
        assert_eq!(val(Builtin::Replace, &["3", "0", "A(5, 6)"]), t("error"));
    }

    #[test]
    fn d_replace_mutates_in_place() {
        let (snap, ls, r) = run(Builtin::DReplace, &["1", "2", "<1, 2>"]);
        assert_eq!(r, snap.resolve(ls[2]));
        assert_eq!(snap.strip(ls[2]).unwrap(), t("<2, 2>"));
    }

    #[test]
    fn d_replace_occurs_check() {
        let s = sig();
        let mut snap = Snapshot::new();
        snap.set_occurs_check(true);
        let one = snap.decorate(&s, &t("1"), DecoratePolicy::ShareIdentical);
        let x = snap.decorate(&s, &t("A(5)"), DecoratePolicy::ShareIdentical);
        let outer = snap.fresh(Head::named("A"), vec![x]);
        let e = Builtin::DReplace.apply(&mut snap, &[one, outer, x]);
        assert!(matches!(e, Err(StoreError::Occurs { .. })));
    }

    #[test]
    fn arithmetic() {
        assert_eq!(val(Builtin::Add, &["3", "5"]), t("8"));
        assert_eq!(val(Builtin::Sub, &["3", "5"]), t("-2"));
        assert_eq!(val(Builtin::Mul, &["7", "2"]), t("14"));
        assert_eq!(val(Builtin::Div, &["7", "2"]), t("3"));
        assert_eq!(val(Builtin::Div, &["-7", "2"]), t("-4"));
        assert_eq!(val(Builtin::Div, &["7", "0"]), t("error"));
        assert_eq!(val(Builtin::Add, &["NIL", "1"]), t("error"));
        assert_eq!(val(Builtin::Le, &["1", "3"]), t("true"));
        assert_eq!(val(Builtin::Gt, &["1", "3"]), t("false"));
        let big = "123456789012345678901234567890";
        assert_eq!(val(Builtin::Mul, &[big, "10"]), t("1234567890123456789012345678900"));
    }

    #[test]
    fn booleans_are_strict_and_typed() {
        assert_eq!(val(Builtin::And, &["true", "false"]), t("false"));
        assert_eq!(val(Builtin::Or, &["true", "false"]), t("true"));
        assert_eq!(val(Builtin::Not, &["false"]), t("true"));
        assert_eq!(val(Builtin::And, &["true", "1"]), t("error"));
    }

    #[test]
    fn copy_then_mutate_leaves_original() {
        let (mut snap, ls, c) = run(Builtin::Copy, &["A(5, 6)"]);
        let zero = snap.intern(Head::Int(0.into()));
        let one = snap.intern(Head::Int(1.into()));
        Builtin::DReplace.apply(&mut snap, &[one, zero, c]).unwrap();
        assert_eq!(snap.strip(c).unwrap(), t("A(0, 6)"));
        assert_eq!(snap.strip(ls[0]).unwrap(), t("A(5, 6)"));
    }
}
