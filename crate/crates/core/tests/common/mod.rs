//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use tslab_core::prior::DEFAULT_GRID;
use tslab_core::{make_interval_actions, ActionSet, LossMatrix, Prior};

/// Two experts, one round, each the loser with probability 1/2.
pub fn ab_prior() -> Arc<Prior> {
    let a = LossMatrix::from_rows(2, 1, vec![0.0, 1.0]).unwrap();
    let b = LossMatrix::from_rows(2, 1, vec![1.0, 0.0]).unwrap();
    Arc::new(Prior::new(ActionSet::singletons(2).unwrap(), DEFAULT_GRID, vec![(0.5, a), (0.5, b)]).unwrap())
}

/// Loss entry on the tenths grid: zero with probability `sparsity`,
/// otherwise uniform.
pub fn loss_entry<R: Rng>(rng: &mut R, sparsity: f64) -> f64 {
    if rng.gen_bool(sparsity) {
        0.0
    } else {
        rng.gen_range(0..=10) as f64 / 10.0
    }
}

/// Random prior over `actions` with up to `max_scenarios` atoms.
pub fn random_prior<R: Rng>(rng: &mut R, actions: ActionSet, horizon: usize, max_scenarios: usize) -> Arc<Prior> {
    let d = actions.d();
    let n = rng.gen_range(1..=max_scenarios);
    let sparsity = rng.gen_range(0.0..0.7);
    let atoms = (0..n)
        .map(|_| {
            let w = rng.gen_range(0.05..1.0);
            let l = LossMatrix::from_fn(d, horizon, |_, _| loss_entry(rng, sparsity)).unwrap();
            (w, l)
        })
        .collect();
    Arc::new(Prior::normalized(actions, DEFAULT_GRID, atoms).unwrap())
}

/// Random prior over singletons with `d` arms.
pub fn random_expert_prior<R: Rng>(rng: &mut R, d: usize, horizon: usize, max_scenarios: usize) -> Arc<Prior> {
    random_prior(rng, ActionSet::singletons(d).unwrap(), horizon, max_scenarios)
}

/// Random prior over disjoint intervals of length `m`.
pub fn random_interval_prior<R: Rng>(rng: &mut R, d: usize, m: usize, horizon: usize, max_scenarios: usize) -> Arc<Prior> {
    random_prior(rng, make_interval_actions(d, m).unwrap(), horizon, max_scenarios)
}
