//! Benchmark workloads: corpus programs paired with queries that scale.

use std::path::PathBuf;

use rewlang_core::{parse_program, Engine, PlainTerm, Program};

pub fn corpus_program(name: &str) -> Program {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_program(&src).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn array(xs: impl IntoIterator<Item = i64>) -> PlainTerm {
    PlainTerm::app("A", xs.into_iter().map(PlainTerm::int).collect())
}

/// A prepared engine and the query it should evaluate.
pub struct Workload {
    pub engine: Engine,
    pub query: PlainTerm,
}

impl Workload {
    fn new(file: &str, query: PlainTerm) -> Workload {
        Workload { engine: Engine::new(&corpus_program(file)), query }
    }

    /// The loop example iterated `n` times; the result grows as 2^n.
    pub fn doubling_loop(n: i64) -> Workload {
        let q = PlainTerm::app("p", vec![PlainTerm::int(1), PlainTerm::int(n), PlainTerm::int(1)]);
        Workload::new("doubling_loop.trs", q)
    }

    /// Insertion sort of `n, n - 1, .., 1`, the quadratic case.
    pub fn insertion_sort_reversed(n: i64) -> Workload {
        let q = PlainTerm::app("InsertionSort", vec![array((1..=n).rev()), PlainTerm::int(n)]);
        Workload::new("insertion_sort.trs", q)
    }

    /// Binary search for the last element of `1..=n`.
    pub fn bsearch(n: i64) -> Workload {
        let q = PlainTerm::app("bsearch", vec![PlainTerm::int(1), PlainTerm::int(n), array(1..=n), PlainTerm::int(n)]);
        Workload::new("bsearch_fixed.trs", q)
    }

    /// Appending two lists of length `n`.
    pub fn append(n: usize) -> Workload {
        let list = (0..n)
            .fold(PlainTerm::constant("NIL"), |acc, k| PlainTerm::app("cons", vec![PlainTerm::int(k as i64), acc]));
        Workload::new("append.trs", PlainTerm::app("append", vec![list.clone(), list]))
    }

    pub fn run(&self) -> PlainTerm {
        self.engine.run(&self.query, &Default::default()).value.expect("benchmark workload evaluates")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_evaluate() {
        assert_eq!(Workload::doubling_loop(3).run().to_string(), "15");
        assert_eq!(Workload::insertion_sort_reversed(5).run().to_string(), "A(1, 2, 3, 4, 5)");
        assert_eq!(Workload::bsearch(9).run().to_string(), "<true, 9>");
        assert_eq!(Workload::append(2).run().to_string(), "cons(1, cons(0, cons(1, cons(0, NIL))))");
    }
}
