//! The acceptance gate: one test per shipped guarantee, each printing a
//! PASS line (visible with `--nocapture`). These pin the worked examples
//! exactly and drive the property claims with seeded random instances, so
//! a red test here means a broken contract, not a flaky run.

mod common;

use std::collections::BTreeMap;

use guarded_proc::approx::{check_unique, eval, eval_all, restrict, ProcTree, TreeBody};
use guarded_proc::bisim::{bisim_levels, bisim_stable};
use guarded_proc::canon_set::FinSet;
use guarded_proc::ccs::{self, act, parse_process, CcsError, Label, Process};
use guarded_proc::functor_kit::{
    enumerate, project_left, project_right, rel_lift_bf, rel_lift_witness, witness_count, FValue,
    FunctorExpr, Relation,
};
use guarded_proc::glts::{ActionId, Glts, StateId};
use guarded_proc::hml::{distinguish, formula_space, sat, Formula};
use guarded_proc::limits::Limits;

use common::random_glts;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIG1: &str = include_str!("../fixtures/fig1.glts");
const HML: &str = include_str!("../fixtures/hml.ccs");

fn st(s: &str) -> StateId {
    StateId::new(s)
}

fn fig1() -> Glts {
    Glts::parse_text(FIG1).expect("fixture is well-formed")
}

fn hml_compiled() -> (Glts, StateId, StateId) {
    let file = ccs::parse_file(HML).expect("fixture parses");
    let compiled =
        ccs::compile(&file.defs, &file.names, 1000).expect("fixture compiles");
    let p = compiled.roots["p"].clone();
    let q = compiled.roots["q"].clone();
    (compiled.glts, p, q)
}

#[test]
fn criterion_01_mirrored_pairs_bisimilar_to_stabilization() {
    let g = fig1();
    let (stable, level) = bisim_stable(&g);
    let bound = g.states().len() * g.states().len() + 1;
    assert!(level <= bound, "stabilized at {level}, bound {bound}");
    let levels = bisim_levels(&g, level + 1);
    for (a, b) in [("x0", "y0"), ("x1", "y1"), ("x0", "y2"), ("x2", "y1")] {
        assert!(stable.holds(&st(a), &st(b)), "{a} ~ {b} at stabilization");
        for (n, rel) in levels.iter().enumerate() {
            assert!(rel.holds(&st(a), &st(b)), "{a} ~ {b} at level {n}");
        }
    }
    println!(
        "PASS: criterion 1 — mirrored pairs bisimilar at every level, stabilized at {level} (bound {bound})"
    );
}

#[test]
fn criterion_02_trace_equivalent_pair_splits_after_level_zero() {
    let (g, p, q) = hml_compiled();
    assert_eq!(eval(&g, &p, 0), eval(&g, &q, 0), "equal at budget 0");
    for n in 1..=5 {
        assert_ne!(eval(&g, &p, n), eval(&g, &q, n), "unequal at budget {n}");
    }
    let levels = bisim_levels(&g, 5);
    assert!(levels[0].holds(&p, &q), "B_0 holds");
    for (n, rel) in levels.iter().enumerate().skip(1) {
        assert!(!rel.holds(&p, &q), "B_{n} fails");
    }
    println!("PASS: criterion 2 — p/q agree exactly at level 0 (eval and B_n)");
}

#[test]
fn criterion_03_bisimilarity_coincides_with_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut pairs_checked = 0u64;
    for case in 0..1000 {
        let g = random_glts(&mut rng, 6, 3, 3);
        let levels = bisim_levels(&g, 5);
        for (n, rel) in levels.iter().enumerate() {
            let trees = eval_all(&g, n);
            for x in g.states() {
                for y in g.states() {
                    let by_transfer = rel.holds(x, y);
                    let by_eval = trees[x] == trees[y];
                    assert_eq!(
                        by_transfer, by_eval,
                        "case {case}: B_{n}({x}, {y}) vs eval equality"
                    );
                    pairs_checked += 1;
                }
            }
        }
    }
    println!(
        "PASS: criterion 3 — B_n ⟺ eval equality on 1000 random systems ({pairs_checked} level-pairs)"
    );
}

#[test]
fn criterion_04_witness_existence_matches_back_and_forth() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let atoms: FinSet<String> = ["a", "b", "c"].into_iter().map(String::from).collect();
    let expr = FunctorExpr::pfin(FunctorExpr::prod(
        FunctorExpr::ConstFin(atoms.clone()),
        FunctorExpr::Id,
    ));
    let limits = Limits::default();
    let atom_vec: Vec<String> = atoms.iter().cloned().collect();
    let mut agree = 0u64;
    for case in 0..500 {
        let carrier_size = rng.gen_range(1..=4usize);
        let carrier: FinSet<u32> = (0..carrier_size as u32).collect();
        let rel = Relation::from_fn(&carrier, &carrier, |_, _| rng.gen_bool(0.5));
        let random_value = |rng: &mut ChaCha8Rng| {
            let len = rng.gen_range(0..=4usize);
            FValue::Set(
                (0..len)
                    .map(|_| {
                        FValue::pair(
                            FValue::Atom(atom_vec[rng.gen_range(0..atom_vec.len())].clone()),
                            FValue::Carrier(rng.gen_range(0..carrier_size as u32)),
                        )
                    })
                    .collect(),
            )
        };
        let u = random_value(&mut rng);
        let v = random_value(&mut rng);
        let bf = rel_lift_bf(&expr, &rel, &u, &v).expect("shapes are well-formed");
        let witness = rel_lift_witness(&expr, &rel, &u, &v, &limits).expect("within budget");
        assert_eq!(bf, witness.is_some(), "case {case}: existence vs transfer");
        if let Some(w) = witness {
            assert_eq!(project_left(&expr, &w).unwrap(), u, "case {case}: left leg");
            assert_eq!(project_right(&expr, &w).unwrap(), v, "case {case}: right leg");
        }
        agree += 1;
    }
    println!(
        "PASS: criterion 4 — lifting witness existence ⟺ back-and-forth on {agree} random instances"
    );
}

#[test]
fn criterion_05_lifting_of_equality_is_equality() {
    let atoms: FinSet<String> = ["p", "q"].into_iter().map(String::from).collect();
    let c = || FunctorExpr::ConstFin(atoms.clone());
    let functors: Vec<(&str, FunctorExpr<String>)> = vec![
        ("Id", FunctorExpr::Id),
        ("Const", c()),
        ("Id×Id", FunctorExpr::prod(FunctorExpr::Id, FunctorExpr::Id)),
        ("Const×Id", FunctorExpr::prod(c(), FunctorExpr::Id)),
        ("Id+Const", FunctorExpr::sum(FunctorExpr::Id, c())),
        ("Pfin(Id)", FunctorExpr::pfin(FunctorExpr::Id)),
        (
            "Pfin(Const×Id)",
            FunctorExpr::pfin(FunctorExpr::prod(c(), FunctorExpr::Id)),
        ),
        (
            "Pfin(Id)×(Id+Const)",
            FunctorExpr::prod(
                FunctorExpr::pfin(FunctorExpr::Id),
                FunctorExpr::sum(FunctorExpr::Id, c()),
            ),
        ),
    ];
    let limits = Limits {
        pfin_card: 9,
        ..Limits::default()
    };
    let mut total = 0u64;
    for (name, expr) in &functors {
        for carrier_size in 0..=3u32 {
            let carrier: FinSet<u32> = (0..carrier_size).collect();
            let eq = Relation::identity(&carrier);
            let values = enumerate(expr, &carrier, 9, &limits).expect("within budget");
            for u in &values {
                for v in &values {
                    let lifted = rel_lift_bf(expr, &eq, u, v).expect("enumerated shapes fit");
                    assert_eq!(
                        lifted,
                        u == v,
                        "{name}, carrier {carrier_size}: lifted equality mismatch"
                    );
                    total += 1;
                }
            }
        }
    }
    println!(
        "PASS: criterion 5 — lifting of equality is equality, exhaustively ({total} pairs over {} functors)",
        functors.len()
    );
}

#[test]
fn criterion_06_seven_witnesses_over_the_total_relation() {
    let xy: FinSet<String> = ["x", "y"].into_iter().map(String::from).collect();
    let expr: FunctorExpr<String> = FunctorExpr::pfin(FunctorExpr::Id);
    let rel = Relation::total(&xy, &xy);
    let u: FValue<String, String> =
        FValue::Set(xy.iter().map(|c| FValue::Carrier(c.clone())).collect());
    let count = witness_count(&expr, &rel, &u, &u, &Limits::default()).expect("within budget");

    // brute force: a witness is a subset of the four graph pairs whose
    // two projections are both exactly {x, y}
    let graph: Vec<(String, String)> = rel.graph().iter().cloned().collect();
    assert_eq!(graph.len(), 4);
    let mut brute = 0u64;
    for mask in 0u32..16 {
        let chosen: Vec<&(String, String)> = graph
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, p)| p)
            .collect();
        let lefts: FinSet<String> = chosen.iter().map(|(l, _)| l.clone()).collect();
        let rights: FinSet<String> = chosen.iter().map(|(_, r)| r.clone()).collect();
        if lefts == xy && rights == xy {
            brute += 1;
        }
    }
    assert_eq!(brute, 7, "subset enumeration");
    assert_eq!(count, 7, "witness_count");
    assert!(count >= 2, "the lifted membership has distinct inhabitants");
    println!("PASS: criterion 6 — exactly 7 lifting witnesses (counted and enumerated), ≥ 2");
}

#[test]
fn criterion_07_map_membership_and_preimage_witnesses() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for case in 0..1000 {
        let table: Vec<u32> = (0..10).map(|_| rng.gen_range(0..6)).collect();
        let f = |a: &u32| table[*a as usize % 10];
        let x: FinSet<u32> = (0..rng.gen_range(0..=8))
            .map(|_| rng.gen_range(0..10u32))
            .collect();
        let image = x.map(f);
        for a in &x {
            assert!(image.member(&f(a)), "case {case}: forward membership");
        }
        let b = rng.gen_range(0..6u32);
        match x.preimage_witness(f, &b) {
            Some(a) => {
                assert!(x.member(a), "case {case}: witness drawn from the set");
                assert_eq!(f(a), b, "case {case}: witness maps to the target");
                assert!(image.member(&b), "case {case}: witnessed target in image");
            }
            None => {
                assert!(!image.member(&b), "case {case}: absence means b outside image");
            }
        }
    }
    println!("PASS: criterion 7 — map membership and preimage witnesses on 1000 random (f, x, b)");
}

#[test]
fn criterion_08_ccs_rules_guardedness_and_compilation() {
    // a.0 ∥ 'a.0 steps by interleaving twice and one synchronization
    let (par, table) = parse_process("a.0 | 'a.0").expect("parses");
    let nil = Process::Nil;
    let a0 = Process::prefix(Label::In(0), nil.clone());
    let abar0 = Process::prefix(Label::Out(0), nil.clone());
    let expected: FinSet<(Label, Process)> = [
        (Label::In(0), Process::par(nil.clone(), abar0.clone())),
        (Label::Out(0), Process::par(a0.clone(), nil.clone())),
        (Label::Tau, Process::par(nil.clone(), nil.clone())),
    ]
    .into_iter()
    .collect();
    assert_eq!(act(&par, table.len()), expected);

    // under ν a only the τ-step survives
    let (nu, table) = parse_process("nu a. (a.0 | 'a.0)").expect("parses");
    let expected_nu: FinSet<(Label, Process)> = FinSet::singleton((
        Label::Tau,
        Process::nu(Process::par(nil.clone(), nil.clone())),
    ));
    assert_eq!(act(&nu, table.len()), expected_nu);

    // unguarded recursion is rejected, naming the variable
    match parse_process("mu X. (P | X)") {
        Err(CcsError::Unguarded { name }) => assert_eq!(name, "X"),
        other => panic!("expected a guardedness error, got {other:?}"),
    }

    // μX. a.X folds back onto itself: one state, one self-loop
    let (looped, table) = parse_process("mu X. a.X").expect("parses");
    let (g, root) = ccs::to_glts(&looped, &table, 100).expect("compiles");
    assert_eq!(g.states().len(), 1);
    assert_eq!(
        g.successors(&root, &ActionId::new("a")).expect("known state"),
        FinSet::singleton(root.clone())
    );
    println!("PASS: criterion 8 — CCS act rules, guardedness rejection, one-state loop");
}

#[test]
fn criterion_09_hml_adequacy_and_distinguishing_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut adequacy_checks = 0u64;
    let mut distinguish_checks = 0u64;
    for case in 0..200 {
        let g = random_glts(&mut rng, 5, 2, 2);
        let levels = bisim_levels(&g, 3);
        let actions: Vec<ActionId> = g.actions().iter().cloned().collect();
        for (n, rel) in levels.iter().enumerate() {
            // semantic side: every definable level-n truth set respects B_n
            let space = formula_space(&g, n).expect("small closures");
            // syntactic side: modal towers to depth n+1 and their binary
            // boolean combinations, checked through sat itself
            let formulas = towers_and_combos(&actions, n + 1);
            for x in g.states() {
                for y in g.states() {
                    if rel.holds(x, y) {
                        for (set, phi) in &space {
                            assert_eq!(
                                set.member(x),
                                set.member(y),
                                "case {case}: {phi} splits B_{n}-related {x}, {y}"
                            );
                        }
                        for phi in &formulas {
                            assert_eq!(
                                sat(&g, x, phi, n).expect("alphabet-closed"),
                                sat(&g, y, phi, n).expect("alphabet-closed"),
                                "case {case}: {phi} splits B_{n}-related {x}, {y}"
                            );
                            adequacy_checks += 1;
                        }
                    }
                    let found = distinguish(&g, x, y, n).expect("small closures");
                    assert_eq!(
                        found.is_some(),
                        !rel.holds(x, y),
                        "case {case}: distinguish vs B_{n} on ({x}, {y})"
                    );
                    if let Some(d) = found {
                        let (w, l) = if d.holds_of_left { (x, y) } else { (y, x) };
                        assert!(
                            sat(&g, w, &d.formula, n).expect("alphabet-closed"),
                            "case {case}: formula holds of {w}"
                        );
                        assert!(
                            !sat(&g, l, &d.formula, n).expect("alphabet-closed"),
                            "case {case}: formula fails of {l}"
                        );
                    }
                    distinguish_checks += 1;
                }
            }
        }
    }
    println!(
        "PASS: criterion 9 — adequacy ({adequacy_checks} sat agreements) and distinguish ⟺ ¬B_n ({distinguish_checks} pairs) on 200 systems"
    );
}

/// All modal towers over `actions` to the given depth with tt/ff leaves,
/// plus binary ∧/∨ combinations of an initial segment.
fn towers_and_combos(actions: &[ActionId], depth: usize) -> Vec<Formula> {
    let mut towers = vec![Formula::TT, Formula::FF];
    let mut out = towers.clone();
    for _ in 0..depth {
        let mut next = Vec::new();
        for phi in &towers {
            for a in actions {
                next.push(Formula::must(a.clone(), phi.clone()));
                next.push(Formula::may(a.clone(), phi.clone()));
            }
        }
        out.extend(next.iter().cloned());
        towers = next;
    }
    let seg: Vec<Formula> = out.iter().take(12).cloned().collect();
    for l in &seg {
        for r in &seg {
            out.push(Formula::and(l.clone(), r.clone()));
            out.push(Formula::or(l.clone(), r.clone()));
        }
    }
    out
}

#[test]
fn criterion_10_restriction_coherence_and_uniqueness() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let top = 4usize;
    for case in 0..500 {
        let g = random_glts(&mut rng, 5, 2, 3);
        let mut family: BTreeMap<(StateId, usize), ProcTree> = BTreeMap::new();
        for n in 0..=top + 1 {
            for (x, t) in eval_all(&g, n) {
                family.insert((x, n), t);
            }
        }
        for x in g.states() {
            for n in 0..=top {
                let deeper = &family[&(x.clone(), n + 1)];
                assert_eq!(
                    restrict(deeper).expect("positive budget"),
                    family[&(x.clone(), n)],
                    "case {case}: restrict ∘ eval at ({x}, {n})"
                );
            }
        }

        // perturb one entry; the family must stop satisfying the recurrence
        let states: Vec<StateId> = g.states().iter().cloned().collect();
        let px = states[rng.gen_range(0..states.len())].clone();
        let pn = rng.gen_range(0..=top);
        let perturbed = perturb(&family[&(px.clone(), pn)]);
        assert_ne!(perturbed, family[&(px.clone(), pn)], "perturbation changed the tree");
        let mut broken = family.clone();
        broken.insert((px.clone(), pn), perturbed);
        let h = move |x: &StateId, k: usize| broken[&(x.clone(), k)].clone();
        assert!(
            !check_unique(&g, &h, top),
            "case {case}: perturbation at ({px}, {pn}) must be rejected"
        );
        let intact = move |x: &StateId, k: usize| family[&(x.clone(), k)].clone();
        assert!(check_unique(&g, &intact, top), "case {case}: eval satisfies the recurrence");
    }
    println!("PASS: criterion 10 — restrict ∘ eval coherence and perturbation rejection on 500 systems");
}

/// A minimal tree of the given budget (no transitions anywhere).
fn deadlock_tree(budget: usize) -> ProcTree {
    if budget == 0 {
        ProcTree::leaf(FinSet::empty())
    } else {
        ProcTree::node(budget, FinSet::empty()).expect("positive budget")
    }
}

/// Changes exactly one layer of `t`: toggles a fresh label at a leaf, or
/// adds/drops a branch at an inner node.
fn perturb(t: &ProcTree) -> ProcTree {
    match t.body() {
        TreeBody::Labels(ls) => ProcTree::leaf(ls.inserted(ActionId::new("zz"))),
        TreeBody::Branch(children) => {
            let budget = t.budget();
            if children.is_empty() {
                let child = deadlock_tree(budget - 1);
                ProcTree::node(
                    budget,
                    FinSet::singleton((ActionId::new("zz"), child)),
                )
                .expect("child budget fits")
            } else {
                let rest: FinSet<(ActionId, ProcTree)> = children
                    .iter()
                    .skip(1)
                    .cloned()
                    .collect();
                ProcTree::node(budget, rest).expect("children keep their budgets")
            }
        }
    }
}
