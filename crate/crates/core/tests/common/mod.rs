//! Corpus access shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use rewlang_core::{parse_program, parse_query, run_query, EvalError, EvalOptions, Program};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn source(name: &str) -> String {
    let path = corpus_dir().join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn load(name: &str) -> Program {
    parse_program(&source(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn eval_with(p: &Program, q: &str, opts: &EvalOptions) -> Result<String, EvalError> {
    let q = parse_query(q, p).unwrap_or_else(|e| panic!("{q}: {e}"));
    run_query(p, &q, opts).map(|e| e.normal_form.to_string())
}

pub fn eval(p: &Program, q: &str) -> Result<String, EvalError> {
    eval_with(p, q, &EvalOptions::default())
}

/// Corpus programs with sample queries and their expected values.
pub const QUERIES: &[(&str, &[(&str, &str)])] = &[
    (
        "append.trs",
        &[
            ("append(cons(1, NIL), cons(2, NIL))", "cons(1, cons(2, NIL))"),
            ("append(NIL, cons(2, NIL))", "cons(2, NIL)"),
        ],
    ),
    ("length.trs", &[("length(cons(4, cons(4, NIL)))", "2"), ("length(NIL)", "0")]),
    (
        "zeroint.trs",
        &[
            ("zeroint(1, 3, A(5, 6, 7))", "A(0, 0, 0)"),
            ("zeroint(2, 3, A(5, 6, 7))", "A(5, 0, 0)"),
            ("zeroint(1, 0, A(5))", "A(5)"),
        ],
    ),
    (
        "zeroint_assign.trs",
        &[
            ("zeroint(1, 3, A(5, 6, 7))", "A(0, 0, 0)"),
            ("zeroint(2, 3, A(5, 6, 7))", "A(5, 0, 0)"),
            ("zeroint(1, 0, A(5))", "A(5)"),
        ],
    ),
    (
        "bsearch_fixed.trs",
        &[
            ("bsearch(1, 5, A(1, 3, 5, 7, 9), 7)", "<true, 4>"),
            ("bsearch(1, 5, A(1, 3, 5, 7, 9), 4)", "<false, none>"),
            ("bsearch(1, 0, A, 4)", "<false, none>"),
        ],
    ),
    ("doubling_recursive.trs", &[("p(1, 3, 1)", "15"), ("p(5, 3, 9)", "9")]),
    ("doubling_loop.trs", &[("p(1, 3, 1)", "15"), ("p(5, 3, 9)", "9")]),
    (
        "insertion_sort.trs",
        &[("InsertionSort(A(3, 1, 2), 3)", "A(1, 2, 3)"), ("InsertionSort(A(2, 2, 1, 9), 4)", "A(1, 2, 2, 9)")],
    ),
    ("pair_alias.trs", &[("f(<1, 2>)", "<1, <2, 2>>")]),
    ("dzero.trs", &[("caller(A(5, 6, 7), 3)", "A(0, 0, 0)"), ("caller_copy(A(5, 6, 7), 3)", "A(5, 6, 7)")]),
    (
        "eqtop.trs",
        &[
            ("same_root(cons(1, NIL), cons(2, NIL))", "true"),
            ("same_root(cons(1, NIL), NIL)", "false"),
            ("classify(cons(1, NIL))", "1"),
            ("classify(NIL)", "0"),
            ("classify(pair(1, 2))", "2"),
            ("swap_eq(<1, 1>)", "true"),
            ("swap_eq(<1, 2>)", "false"),
        ],
    ),
];

/// Corpus programs without destructive operations.
pub const PURE: &[&str] = &[
    "append.trs",
    "length.trs",
    "zeroint.trs",
    "zeroint_assign.trs",
    "bsearch_fixed.trs",
    "doubling_recursive.trs",
    "doubling_loop.trs",
    "eqtop.trs",
];

/// Every program in the corpus, including those without sample queries.
pub fn all_programs() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".trs"))
        .collect();
    names.sort();
    names
}
