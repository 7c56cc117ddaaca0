//! Level-indexed bisimilarity and its coincidence theorems.
//!
//! The family `B_n` of relations is defined by recursion on the level:
//! `B_0` relates states with equal action sets (at level 0 the successor
//! comparison is vacuous), and `B_{k+1}` is the usual back-and-forth
//! condition with continuations judged by `B_k`. The chain is antitone
//! and stabilizes on finite systems.
//!
//! Two cross-checks tie this definition to the rest of the library, by
//! deliberately independent code paths:
//!
//! * [`coincidence`]: `B_n(x, y)` holds iff the budget-`n` approximants
//!   of `x` and `y` are structurally equal.
//! * [`coalgebraic_bisim_check`]: the back-and-forth clause at one level
//!   is equivalent to the existence of a relation-lifting witness between
//!   the coalgebra structures, computed by [`crate::functor_kit`].

use crate::approx::{eval_all, tree_system};
use crate::canon_set::FinSet;
use crate::functor_kit::{rel_lift_witness, KitError, Relation};
use crate::glts::{Glts, StateId};
use crate::limits::Limits;

/// A bisimilarity relation together with the level it was computed at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelRelation {
    pub level: usize,
    pub rel: Relation<StateId>,
}

/// The outcome of a coincidence check: either the equivalence holds at
/// every pair, or the least failing pair is reported.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoincidenceReport {
    pub holds: bool,
    pub counterexample: Option<(StateId, StateId)>,
}

/// One back-and-forth step: every move of `x` is matched by a move of `y`
/// with continuations related by `prev`, and vice versa.
fn transfer(g: &Glts, prev: &Relation<StateId>, x: &StateId, y: &StateId) -> bool {
    let xo = g.trans(x).expect("states are known");
    let yo = g.trans(y).expect("states are known");
    xo.iter()
        .all(|(a, x2)| yo.iter().any(|(b, y2)| a == b && prev.holds(x2, y2)))
        && yo
            .iter()
            .all(|(b, y2)| xo.iter().any(|(a, x2)| a == b && prev.holds(x2, y2)))
}

/// `B_0`: equality of action sets.
fn level_zero(g: &Glts) -> Relation<StateId> {
    let states = g.states();
    Relation::from_fn(states, states, |x, y| {
        g.action_set(x).expect("known") == g.action_set(y).expect("known")
    })
}

/// One refinement step: `B_{k+1}` from `B_k`.
fn refine(g: &Glts, prev: &Relation<StateId>) -> Relation<StateId> {
    let states = g.states();
    Relation::from_fn(states, states, |x, y| transfer(g, prev, x, y))
}

/// The level-`n` bisimilarity relation `B_n` on all state pairs.
pub fn bisim_level(g: &Glts, n: usize) -> LevelRelation {
    let mut rel = level_zero(g);
    for _ in 0..n {
        rel = refine(g, &rel);
    }
    LevelRelation { level: n, rel }
}

/// All levels `B_0 ..= B_n`, sharing the refinement work.
pub fn bisim_levels(g: &Glts, n: usize) -> Vec<Relation<StateId>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(level_zero(g));
    for _ in 0..n {
        let next = refine(g, out.last().expect("nonempty"));
        out.push(next);
    }
    out
}

/// Iterates to the stable relation: the first `k` with `B_{k+1} == B_k`,
/// returned with that relation. Finite systems stabilize within
/// `|states|² + 1` steps; exceeding the bound is a bug, not an input error.
pub fn bisim_stable(g: &Glts) -> (Relation<StateId>, usize) {
    let bound = g.states().len() * g.states().len() + 1;
    let mut rel = level_zero(g);
    for k in 0..=bound {
        let next = refine(g, &rel);
        if next == rel {
            return (rel, k);
        }
        rel = next;
    }
    unreachable!("antitone chain over a finite square must stabilize");
}

/// Is `r` a (stable) guarded bisimulation: does every related pair
/// satisfy back-and-forth with continuations again in `r`?
pub fn check_is_bisimulation(g: &Glts, r: &Relation<StateId>) -> bool {
    glts_bisim_check(g, r, r)
}

/// The concrete one-level check: every pair in `r` satisfies
/// back-and-forth with continuations judged by `prev`. This is the
/// direct (non-coalgebraic) reading of the lifting condition.
pub fn glts_bisim_check(g: &Glts, r: &Relation<StateId>, prev: &Relation<StateId>) -> bool {
    r.graph().iter().all(|(x, y)| transfer(g, prev, x, y))
}

/// The same one-level check routed through relation lifting: for each
/// pair in `r`, a lifting witness must exist between the coalgebra
/// structures of the two states, relative to `prev`.
pub fn coalgebraic_bisim_check(
    g: &Glts,
    r: &Relation<StateId>,
    prev: &Relation<StateId>,
    limits: &Limits,
) -> Result<bool, KitError> {
    let co = g.as_coalgebra();
    for (x, y) in r.graph() {
        let u = &co.structure[x];
        let v = &co.structure[y];
        if rel_lift_witness(&co.functor, prev, u, v, limits)?.is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks `B_n(x, y) ⟺ eval(x, n) == eval(y, n)` over all state pairs.
/// The two sides are computed by independent recursions.
pub fn coincidence(g: &Glts, n: usize) -> CoincidenceReport {
    let level = bisim_level(g, n);
    let trees = eval_all(g, n);
    for x in g.states() {
        for y in g.states() {
            let related = level.rel.holds(x, y);
            let equal = trees[x] == trees[y];
            if related != equal {
                return CoincidenceReport {
                    holds: false,
                    counterexample: Some((x.clone(), y.clone())),
                };
            }
        }
    }
    CoincidenceReport {
        holds: true,
        counterexample: None,
    }
}

/// On the image of `eval` at level `n`, bisimilarity of trees (computed
/// in the induced tree system) must coincide with structural equality.
/// This realizes, level by level, the statement that evaluation lands in
/// a final coalgebra: distinct points of the image are never bisimilar.
pub fn final_coalgebra_coincidence(g: &Glts, n: usize) -> bool {
    let trees = eval_all(g, n);
    let tops: Vec<_> = trees.values().cloned().collect();
    let (tg, ids) = tree_system(&tops);
    let level = bisim_level(&tg, n);
    for s in &tops {
        for t in &tops {
            let related = level.rel.holds(&ids[s], &ids[t]);
            if related != (s == t) {
                return false;
            }
        }
    }
    true
}

/// Equivalence-relation sanity for a relation over one carrier.
pub fn is_equivalence(rel: &Relation<StateId>) -> bool {
    let xs: &FinSet<StateId> = rel.domain();
    if rel.codomain() != xs {
        return false;
    }
    xs.iter().all(|x| rel.holds(x, x))
        && xs
            .iter()
            .all(|x| xs.iter().all(|y| !rel.holds(x, y) || rel.holds(y, x)))
        && xs.iter().all(|x| {
            xs.iter().all(|y| {
                xs.iter()
                    .all(|z| !(rel.holds(x, y) && rel.holds(y, z)) || rel.holds(x, z))
            })
        })
}
