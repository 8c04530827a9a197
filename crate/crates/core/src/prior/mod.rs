//! Finitely supported priors over loss sequences and their exact posteriors.

mod belief;
mod format;

use std::sync::Arc;

use crate::actions::ActionSet;
use crate::error::{Error, Result};

pub use belief::{ActionDistribution, BeliefState, Conditioning, Posterior};
pub use format::{prior_from_toml, prior_to_toml, read_prior, write_prior};

/// Default loss grid: losses are stored as multiples of `1/K`.
pub const DEFAULT_GRID: u32 = 1000;

/// Tolerance for matching an observed value against a scenario's loss.
pub const MATCH_TOL: f64 = 1e-12;

/// Tolerance for ties between cumulative action losses.
pub const TIE_TOL: f64 = 1e-9;

/// Tolerance on prior weights summing to one.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Round `x` to the nearest multiple of `1/grid`.
pub fn snap(x: f64, grid: u32) -> f64 {
    let k = grid as f64;
    (x * k).round() / k
}

/// A `d x T` matrix of losses in `[0,1]`, stored row-major by coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    d: usize,
    horizon: usize,
    data: Vec<f64>,
}

impl LossMatrix {
    /// `data[i * horizon + t]` is the loss of coordinate `i` at round `t`.
    pub fn from_rows(d: usize, horizon: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || horizon == 0 {
            return Err(Error::config("loss matrix needs d >= 1 and T >= 1"));
        }
        if data.len() != d * horizon {
            return Err(Error::config(format!(
                "loss matrix has {} entries, expected d*T = {}",
                data.len(),
                d * horizon
            )));
        }
        if let Some(x) = data.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::config(format!("loss {x} outside [0,1]")));
        }
        Ok(LossMatrix { d, horizon, data })
    }

    pub fn from_fn(d: usize, horizon: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(d * horizon);
        for i in 0..d {
            for t in 0..horizon {
                data.push(f(i, t));
            }
        }
        Self::from_rows(d, horizon, data)
    }

    pub fn zeros(d: usize, horizon: usize) -> Result<Self> {
        Self::from_rows(d, horizon, vec![0.0; d * horizon])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.data[i * self.horizon + t]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.horizon..(i + 1) * self.horizon]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Total loss of coordinate `i` over all rounds.
    pub fn total(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn action_loss(&self, support: &[usize], t: usize) -> f64 {
        support.iter().map(|&i| self.get(i, t)).sum()
    }

    pub fn action_total(&self, support: &[usize]) -> f64 {
        support.iter().map(|&i| self.total(i)).sum()
    }

    /// Copy with every entry rounded to the `1/grid` lattice.
    pub fn snapped(&self, grid: u32) -> LossMatrix {
        LossMatrix { d: self.d, horizon: self.horizon, data: self.data.iter().map(|&x| snap(x, grid)).collect() }
    }
}

/// Action minimising cumulative loss; ties go to the earliest action in
/// canonical order.
pub fn optimal_action(losses: &LossMatrix, actions: &ActionSet) -> Result<usize> {
    if actions.is_empty() {
        return Err(Error::config("empty action set"));
    }
    if actions.d() != losses.d() {
        return Err(Error::config(format!(
            "loss matrix has d = {} but the action set has d = {}",
            losses.d(),
            actions.d()
        )));
    }
    let totals: Vec<f64> = (0..losses.d()).map(|i| losses.total(i)).collect();
    let mut best = 0;
    let mut best_total = f64::INFINITY;
    for a in 0..actions.len() {
        let total: f64 = actions.support(a).iter().map(|&i| totals[i]).sum();
        if total < best_total - TIE_TOL {
            best = a;
            best_total = total;
        }
    }
    Ok(best)
}

/// Coordinates of `support` ordered by descending total loss, ties by
/// ascending index. Position `r` holds the arm of rank `r + 1`.
pub fn rank_order(losses: &LossMatrix, support: &[usize]) -> Vec<usize> {
    let mut ranked = support.to_vec();
    ranked.sort_by(|&a, &b| {
        let (la, lb) = (losses.total(a), losses.total(b));
        if (la - lb).abs() <= TIE_TOL {
            a.cmp(&b)
        } else {
            lb.partial_cmp(&la).unwrap()
        }
    });
    ranked
}

/// One deterministic loss sequence with its prior mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    weight: f64,
    losses: LossMatrix,
    optimal: usize,
    ranked: Vec<usize>,
    lstar: f64,
}

impl Scenario {
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn losses(&self) -> &LossMatrix {
        &self.losses
    }

    /// Index of the optimal action.
    pub fn optimal(&self) -> usize {
        self.optimal
    }

    /// Arms of the optimal action in rank order (rank 1 first).
    pub fn ranked_optimal(&self) -> &[usize] {
        &self.ranked
    }

    /// Cumulative loss of the optimal action.
    pub fn lstar(&self) -> f64 {
        self.lstar
    }

    /// Whether arm `i` holds one of the given 1-based ranks in `a*`.
    pub fn in_block(&self, i: usize, ranks: &[usize]) -> bool {
        ranks.iter().any(|&r| r >= 1 && self.ranked.get(r - 1) == Some(&i))
    }
}

/// A finite mixture of deterministic scenarios over a shared action set.
#[derive(Debug, Clone)]
pub struct Prior {
    actions: Arc<ActionSet>,
    grid: u32,
    d: usize,
    horizon: usize,
    scenarios: Vec<Scenario>,
}

impl Prior {
    /// Build from `(weight, losses)` atoms. Losses are snapped to the
    /// `1/grid` lattice; weights must sum to one.
    pub fn new(actions: impl Into<Arc<ActionSet>>, grid: u32, atoms: Vec<(f64, LossMatrix)>) -> Result<Self> {
        let actions = actions.into();
        if grid == 0 {
            return Err(Error::config("grid K must be positive"));
        }
        if atoms.is_empty() {
            return Err(Error::config("prior has no scenarios"));
        }
        let d = actions.d();
        let horizon = atoms[0].1.horizon();
        let mut total = 0.0;
        let mut scenarios = Vec::with_capacity(atoms.len());
        for (k, (weight, losses)) in atoms.into_iter().enumerate() {
            if !(weight >= 0.0 && weight.is_finite()) {
                return Err(Error::config(format!("scenario {k} has invalid weight {weight}")));
            }
            if losses.d() != d || losses.horizon() != horizon {
                return Err(Error::config(format!(
                    "scenario {k} has shape {}x{}, expected {d}x{horizon}",
                    losses.d(),
                    losses.horizon()
                )));
            }
            total += weight;
            let losses = losses.snapped(grid);
            let optimal = optimal_action(&losses, &actions)?;
            let ranked = rank_order(&losses, actions.support(optimal));
            let lstar = losses.action_total(actions.support(optimal));
            scenarios.push(Scenario { weight, losses, optimal, ranked, lstar });
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::config(format!("scenario weights sum to {total}, not 1")));
        }
        Ok(Prior { actions, grid, d, horizon, scenarios })
    }

    /// Like [`Prior::new`] but rescales nonnegative weights to sum to one.
    pub fn normalized(actions: impl Into<Arc<ActionSet>>, grid: u32, mut atoms: Vec<(f64, LossMatrix)>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|(w, _)| *w).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::config("prior weights must have a positive finite sum"));
        }
        for (w, _) in atoms.iter_mut() {
            *w /= total;
        }
        Self::new(actions, grid, atoms)
    }

    /// Every scenario equally likely.
    pub fn uniform(actions: impl Into<Arc<ActionSet>>, grid: u32, losses: Vec<LossMatrix>) -> Result<Self> {
        let w = 1.0 / losses.len().max(1) as f64;
        Self::normalized(actions, grid, losses.into_iter().map(|l| (w, l)).collect())
    }

    pub fn actions(&self) -> &ActionSet {
        &self.actions
    }

    pub fn actions_arc(&self) -> Arc<ActionSet> {
        Arc::clone(&self.actions)
    }

    pub fn grid(&self) -> u32 {
        self.grid
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.actions.m()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.weight).collect()
    }

    /// Largest optimal loss among scenarios with positive weight.
    pub fn lstar_max(&self) -> f64 {
        self.scenarios.iter().filter(|s| s.weight > 0.0).map(|s| s.lstar).fold(0.0, f64::max)
    }

    pub fn expected_lstar(&self) -> f64 {
        self.scenarios.iter().map(|s| s.weight * s.lstar).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::make_interval_actions;

    fn single_round(values: &[f64]) -> LossMatrix {
        LossMatrix::from_rows(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn optimal_action_examples() {
        let experts = ActionSet::singletons(2).unwrap();
        assert_eq!(optimal_action(&single_round(&[0.0, 1.0]), &experts).unwrap(), 0);
        let tie = LossMatrix::from_rows(2, 2, vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        assert_eq!(optimal_action(&tie, &experts).unwrap(), 0);
        let intervals = make_interval_actions(4, 2).unwrap();
        let a = optimal_action(&single_round(&[1.0, 1.0, 0.0, 0.0]), &intervals).unwrap();
        assert_eq!(intervals.label(a), "0011");
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let experts = ActionSet::singletons(3).unwrap();
        assert!(optimal_action(&single_round(&[0.0, 1.0]), &experts).is_err());
    }

    #[test]
    fn rank_order_is_descending_in_total_loss() {
        let l = LossMatrix::from_rows(4, 2, vec![0.1, 0.1, 0.5, 0.5, 0.3, 0.0, 0.5, 0.5]).unwrap();
        assert_eq!(rank_order(&l, &[0, 1, 2, 3]), vec![1, 3, 2, 0]);
    }

    #[test]
    fn prior_validation() {
        let experts = ActionSet::singletons(2).unwrap();
        let a = single_round(&[0.0, 1.0]);
        assert!(Prior::new(experts.clone(), DEFAULT_GRID, vec![(0.5, a.clone()), (0.4, a.clone())]).is_err());
        assert!(Prior::new(experts.clone(), DEFAULT_GRID, vec![(1.0, single_round(&[0.0, 1.0, 0.0]))]).is_err());
        assert!(Prior::new(experts.clone(), DEFAULT_GRID, vec![(-0.5, a.clone()), (1.5, a.clone())]).is_err());
        assert!(LossMatrix::from_rows(2, 1, vec![0.0, 1.5]).is_err());
        let p = Prior::new(experts, DEFAULT_GRID, vec![(1.0, single_round(&[0.12345, 1.0]))]).unwrap();
        assert_eq!(p.scenarios()[0].losses().get(0, 0), 0.123);
    }

    #[test]
    fn lstar_summaries() {
        let experts = ActionSet::singletons(2).unwrap();
        let p = Prior::new(
            experts,
            DEFAULT_GRID,
            vec![(0.25, single_round(&[0.2, 0.7])), (0.75, single_round(&[0.9, 0.6]))],
        )
        .unwrap();
        assert!((p.lstar_max() - 0.6).abs() < 1e-12);
        assert!((p.expected_lstar() - (0.25 * 0.2 + 0.75 * 0.6)).abs() < 1e-12);
    }
}
