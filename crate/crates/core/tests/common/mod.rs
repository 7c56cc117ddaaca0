//! Shared generators for the integration suites. Seeded ChaCha keeps
//! every run identical — a reported failure is reproducible from the
//! criterion's seed alone.

use guarded_proc::glts::{ActionId, Glts, StateId, Transition};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random system with `1..=max_states` states named `s0..`,
/// `1..=max_actions` actions named `a0..`, and out-degree at most
/// `max_out` per state (duplicates collapse, so it can come out lower).
pub fn random_glts(
    rng: &mut ChaCha8Rng,
    max_states: usize,
    max_actions: usize,
    max_out: usize,
) -> Glts {
    let n = rng.gen_range(1..=max_states);
    let k = rng.gen_range(1..=max_actions);
    let states: Vec<StateId> = (0..n).map(|i| StateId::new(format!("s{i}"))).collect();
    let actions: Vec<ActionId> = (0..k).map(|i| ActionId::new(format!("a{i}"))).collect();
    let mut transitions = Vec::new();
    for s in &states {
        for _ in 0..rng.gen_range(0..=max_out) {
            transitions.push(Transition {
                source: s.clone(),
                label: actions[rng.gen_range(0..k)].clone(),
                target: states[rng.gen_range(0..n)].clone(),
            });
        }
    }
    Glts::new(
        states.into_iter().collect(),
        actions.into_iter().collect(),
        transitions,
    )
    .expect("generated endpoints are declared")
}
