//! Term rewriting with assignments, loops and destructive updates.
//!
//! Programs are parsed by [`syntax`], verified by [`checks`], lowered by
//! [`desugar`] and run by [`eval`] over the decorated-term store in
//! [`store`].

pub mod builtins;
pub mod checks;
pub mod desugar;
pub mod eval;
pub mod store;
pub mod syntax;
pub mod term;
pub mod trace;

pub use builtins::Builtin;
pub use checks::{check_program, BindingMode, Code, Diagnostic, Severity};
pub use desugar::{flatten_program, lower_loops, LoweredProgram, RewriteSystem};
pub use eval::{run_query, ArgOrder, Engine, EvalError, EvalOptions, Evaluation, Outcome};
pub use store::{DecoratePolicy, Label, Snapshot, StoreError, Substitution, Violation};
pub use syntax::{parse_program, parse_query, parse_term, ParseError, Program};
pub use term::{Head, PlainTerm, Signature, SymbolKind};
pub use trace::{EventKind, TraceEvent};
