use std::rc::Rc;

use proptest::prelude::*;
use proptest::strategy::Strategy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::syntax::{parse_program, print_aterm, print_program};

fn body_of(p: &Program, name: &str) -> String {
    match &p.procedure(name).unwrap().kind {
        ProcKind::Flat { params, body } => format!("({}) {}", params.join(", "), print_aterm(body)),
        ProcKind::Rewrite { .. } => panic!("{name} is not flat"),
    }
}

#[test]
fn fresh_names_bump_suffix() {
    let mut g = NameGen::default();
    g.claim("y1");
    assert_eq!(g.fresh("y1"), "y2");
    assert_eq!(g.fresh("y1"), "y3");
    assert_eq!(g.fresh("x"), "x1");
    assert_eq!(g.fresh_exact("_t"), "_t");
    assert_eq!(g.fresh_exact("_t"), "_t_2");
}

#[test]
fn for_loop_becomes_tail_recursion() {
    let p = parse_program("flat s(n, x) { y <- x; for i = 1 step 1 until n do { y <- 2 * y + 1 }; y }").unwrap();
    let l = lower_loops(&p);
    assert_eq!(body_of(&l.program, "s"), "(n, x) y <- x; p_for_1(1, n, y)");
    assert_eq!(
        body_of(&l.program, "p_for_1"),
        "(i, _end_1, y) if i <= _end_1 then (y <- 2 * y + 1; p_for_1(i + 1, _end_1, y)) else y"
    );
    assert_eq!(l.origins["p_for_1"], LoopOrigin { procedure: "s".into(), kind: LoopKind::For });
}

#[test]
fn while_carries_variables_read_after_the_loop() {
    let p = parse_program("flat f(c, x) { while c > 0 do { x <- 5; c <- c - 1 }; x }").unwrap();
    let l = lower_loops(&p);
    assert_eq!(body_of(&l.program, "f"), "(c, x) p_while_1(c, x)");
    assert_eq!(body_of(&l.program, "p_while_1"), "(c, x) if c > 0 then (x <- 5; c <- c - 1; p_while_1(c, x)) else x");
}

#[test]
fn until_runs_body_first() {
    let p = parse_program("flat f(n) { do { n <- n - 1; t <- n } until n <= 0; t }").unwrap();
    let l = lower_loops(&p);
    assert_eq!(body_of(&l.program, "f"), "(n) p_until_1(n)");
    assert_eq!(body_of(&l.program, "p_until_1"), "(n) n <- n - 1; t <- n; if n <= 0 then t else p_until_1(n)");
}

#[test]
fn nested_loops_lower_outermost_first() {
    let p =
        parse_program("flat f(n, s) { for i = 1 step 1 until n do { for j = 1 step 1 until i do { s <- s + j } }; s }")
            .unwrap();
    let l = lower_loops(&p);
    let names: Vec<&str> = l.program.procedures.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names, ["f", "p_for_1", "p_for_2"]);
    assert_eq!(l.origins["p_for_2"].procedure, "p_for_1");
    assert_eq!(
        body_of(&l.program, "p_for_2"),
        "(j, _end_2, i, _end_1, s) if j <= _end_2 then (s <- s + j; p_for_2(j + 1, _end_2, i, _end_1, s)) \
         else p_for_1(i + 1, _end_1, s)"
    );
}

#[test]
fn generated_names_avoid_user_names() {
    let p = parse_program("flat p_while_1(x) { while x > 0 do { x <- x - 1 }; x }").unwrap();
    let l = lower_loops(&p);
    assert!(l.program.procedure("p_while_2").is_some());
}

#[test]
fn tuple_assignment_expands_to_projections() {
    let p = parse_program("flat f(t) { <a, b> <- t; a + b }").unwrap();
    let ProcKind::Flat { body, .. } = &p.procedures[0].kind else { unreachable!() };
    let mut g = NameGen::for_program(&p);
    assert_eq!(print_aterm(&expand_tuple_assign(body, &mut g)), "_t <- t; a <- pi(1, _t); b <- pi(2, _t); a + b");
}

#[test]
fn statement_if_distributes_continuation() {
    let p = parse_program("flat f(c) { if c then { x <- 1 } else { x <- 2; y <- 3 }; g(x) }").unwrap();
    let ProcKind::Flat { body, .. } = &p.procedures[0].kind else { unreachable!() };
    assert_eq!(print_aterm(&distribute_if_seq(body)), "if c then (x <- 1; g(x)) else (x <- 2; y <- 3; g(x))");
}

#[test]
fn reassignment_gets_fresh_names() {
    let p = parse_program("flat p(i, n, y1) { y1 <- 2 * y1; y1 <- y1 + 1; p(i, n, y1) }").unwrap();
    let ProcKind::Flat { body, params } = &p.procedures[0].kind else { unreachable!() };
    let mut g = NameGen::for_program(&p);
    assert_eq!(print_aterm(&rename_multi_assign(body, params, &mut g)), "y2 <- 2 * y1; y3 <- y2 + 1; p(i, n, y3)");
}

#[test]
fn renaming_is_branch_local() {
    let p = parse_program("flat f(x) { if x then (x <- 1; x) else (x <- 2; x) }").unwrap();
    let ProcKind::Flat { body, params } = &p.procedures[0].kind else { unreachable!() };
    let mut g = NameGen::for_program(&p);
    assert_eq!(print_aterm(&rename_multi_assign(body, params, &mut g)), "if x then (x1 <- 1; x1) else (x2 <- 2; x2)");
}

fn eterm(src: &str) -> Rc<ETerm> {
    let p = parse_program(&format!("constructors c/0, g/1, f/2; flat h(y) {{ {src} }}")).unwrap();
    let ProcKind::Flat { body, .. } = &p.procedures[0].kind else { unreachable!() };
    ETerm::from_aterm(body)
}

#[test]
fn elimination_shares_the_assigned_term() {
    let e = eliminate(&eterm("x <- g(c); f(x, x)"));
    let ETerm::App(_, kids) = &*e else { panic!() };
    assert!(Rc::ptr_eq(&kids[0], &kids[1]));
    assert_eq!(e.to_plain().unwrap().to_string(), "f(g(c), g(c))");
}

#[test]
fn elimination_respects_shadowing() {
    let e = eliminate(&eterm("x <- c; f((x <- g(x); x), x)"));
    assert_eq!(e.to_plain().unwrap().to_string(), "f(g(c), c)");
}

#[test]
fn unused_assignment_disappears() {
    let e = eliminate(&eterm("x <- g(c); y"));
    assert_eq!(e.to_plain().unwrap().to_string(), "y");
}

#[test]
fn elimination_is_identity_without_assignments() {
    let e = eterm("f(g(c), y)");
    assert!(Rc::ptr_eq(&e, &eliminate(&e)));
}

#[test]
fn flatten_produces_one_rule_per_procedure_clause() {
    let p = parse_program(
        "constructors cons/2, nil/0;
         rewrite app { app(cons(u, v), w) -> cons(u, app(v, w)); app(nil, w) -> w }
         flat s(n, x) { y <- x; for i = 1 step 1 until n do { y <- 2 * y; y <- y + 1 }; y }",
    )
    .unwrap();
    let rs = flatten_program(&p);
    assert_eq!(rs.rule_count(), 4);
    let text = print_program(&rs.to_program());
    assert!(text.contains("s(n, x) -> p_for_1(1, n, x)"), "{text}");
    assert!(
        text.contains("p_for_1(i, _end_1, y) -> if i <= _end_1 then p_for_1(i + 1, _end_1, 2 * y + 1) else y"),
        "{text}"
    );
    // the printed system reads back
    let again = parse_program(&text).unwrap();
    assert_eq!(again.procedures.len(), 3);
}

#[test]
fn parameter_named_like_a_constructor_prints_flat() {
    let p = parse_program("constructors A/*; flat f(A) { B <- A; B }").unwrap();
    let text = print_program(&flatten_program(&p).to_program());
    assert!(text.contains("flat f(A) {\n  A\n}"), "{text}");
}

#[test]
fn runtime_program_keeps_assignments() {
    let p = parse_program("flat f(c) { if c then { x <- 1 } else { x <- 2 }; <a, b> <- <x, x>; a }").unwrap();
    let l = runtime_program(&p);
    assert_eq!(
        body_of(&l.program, "f"),
        "(c) if c then (x <- 1; <a, b> <- <x, x>; a) else (x <- 2; <a, b> <- <x, x>; a)"
    );
}

/// Straight-line blocks over a few names, each assignment's rhs built
/// from earlier names, ending in a tuple of everything.
fn arb_block() -> impl Strategy<Value = ATerm> {
    let rhs = prop_oneof![(0usize..6).prop_map(|k| vec![k]), (0usize..6, 0usize..6).prop_map(|(a, b)| vec![a, b]),];
    proptest::collection::vec(rhs, 1..7).prop_map(|assigns| {
        let mut stmts = Vec::new();
        for (k, uses) in assigns.iter().enumerate() {
            let args: Vec<ATerm> = uses
                .iter()
                .map(|&u| if k == 0 || u % (k + 1) == k { ATerm::var("y") } else { ATerm::var(format!("v{}", u % k)) })
                .collect();
            let head = if args.len() == 1 { "g" } else { "f" };
            stmts.push(Stmt::Assign(AssignLhs::Var(format!("v{k}")), ATerm::app(head, args)));
        }
        let all = (0..assigns.len()).map(|k| ATerm::var(format!("v{k}"))).collect();
        ATerm::seq(stmts, ATerm::App(crate::term::Head::Tuple, all))
    })
}

proptest! {
    #[test]
    fn elimination_order_does_not_matter(a in arb_block(), seed in any::<u64>()) {
        let e = ETerm::from_aterm(&a);
        let inner = eliminate(&e);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random = eliminate_random(&e, &mut rng);
        prop_assert_eq!(ETerm::let_count(&inner), 0);
        prop_assert_eq!(canonical(&inner), canonical(&random));
        prop_assert_eq!(inner.to_plain(), random.to_plain());
    }

    #[test]
    fn each_step_removes_exactly_one_assignment(a in arb_block(), picks in proptest::collection::vec(any::<usize>(), 8)) {
        let mut e = ETerm::from_aterm(&a);
        let mut k = 0;
        while let Some(next) = eliminate_step(&e, picks[k % picks.len()]) {
            prop_assert_eq!(ETerm::let_count(&next) + 1, ETerm::let_count(&e));
            e = next;
            k += 1;
        }
        prop_assert_eq!(k, a.assignment_count());
        prop_assert_eq!(canonical(&e), canonical(&eliminate(&ETerm::from_aterm(&a))));
    }

    #[test]
    fn elimination_matches_naive_substitution(a in arb_block()) {
        let expanded = eliminate(&ETerm::from_aterm(&a)).to_plain().unwrap();
        prop_assert_eq!(expanded, naive(&a));
    }
}

/// Textbook substitution on trees, no sharing.
fn naive(a: &ATerm) -> PlainTerm {
    fn go(a: &ATerm, env: &HashMap<String, PlainTerm>) -> PlainTerm {
        match a {
            ATerm::Var(v) => env.get(v).cloned().unwrap_or_else(|| PlainTerm::var(v.clone())),
            ATerm::App(h, args) => PlainTerm::Node(h.clone(), args.iter().map(|x| go(x, env)).collect()),
            ATerm::If(..) => unreachable!(),
            ATerm::Seq(s, rest) => {
                let Stmt::Assign(AssignLhs::Var(x), rhs) = &**s else { unreachable!() };
                let mut inner = env.clone();
                inner.insert(x.clone(), go(rhs, env));
                go(rest, &inner)
            }
        }
    }
    go(a, &HashMap::new())
}
