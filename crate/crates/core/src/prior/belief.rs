use std::sync::Arc;

use super::{Prior, MATCH_TOL};
use crate::actions::ActionSet;
use crate::error::{Error, Result};
use crate::feedback::Observation;

/// A probability distribution over the actions of an [`ActionSet`], indexed
/// in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    probs: Vec<f64>,
}

impl ActionDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::config("empty action distribution"));
        }
        if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::config("action probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("action probabilities sum to {total}")));
        }
        Ok(ActionDistribution { probs })
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        ActionDistribution { probs }
    }

    pub fn point_mass(n: usize, a: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[a] = 1.0;
        ActionDistribution { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, a: usize) -> f64 {
        self.probs[a]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Per-coordinate probability that the drawn action contains it.
    ///
    /// Mass inside and outside each coordinate is accumulated separately, so
    /// a coordinate contained in every charged action gets exactly 1.
    pub fn marginals(&self, actions: &ActionSet) -> Vec<f64> {
        let d = actions.d();
        let (mut inside, mut outside) = (vec![0.0; d], vec![0.0; d]);
        for (a, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                outside.iter_mut().for_each(|x| *x += p);
                for &i in actions.support(a) {
                    inside[i] += p;
                    outside[i] -= p;
                }
            }
        }
        split_ratio(&inside, &outside)
    }
}

fn split_ratio(inside: &[f64], outside: &[f64]) -> Vec<f64> {
    inside
        .iter()
        .zip(outside)
        .map(|(&a, &b)| if b <= 0.0 { f64::from(a > 0.0) } else { a / (a + b) })
        .collect()
}

/// Conditioning event for posterior loss means.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Conditioning {
    /// Unconditional means.
    None,
    /// Condition on the optimal action being action `j`.
    OptimalIs(usize),
    /// For each coordinate `i`, condition on `i` belonging to `a*`.
    InOptimal,
    /// For each coordinate `i`, condition on `i` holding one of these
    /// 1-based ranks inside `a*`.
    InOptimalBlock(Vec<usize>),
}

/// Posterior over the scenarios of a prior after some rounds of feedback.
#[derive(Debug, Clone)]
pub struct BeliefState {
    prior: Arc<Prior>,
    round: usize,
    weights: Vec<f64>,
    history: Vec<(usize, Observation)>,
}

impl BeliefState {
    /// Belief before any feedback: the prior weights at round 0.
    pub fn initial(prior: Arc<Prior>) -> Self {
        let weights = prior.weights();
        BeliefState { prior, round: 0, weights, history: Vec::new() }
    }

    /// Belief with explicit weights and no recorded history.
    pub fn from_weights(prior: Arc<Prior>, round: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != prior.len() {
            return Err(Error::config("weight vector length differs from scenario count"));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("posterior weights must be nonnegative and sum to 1 (sum {total})")));
        }
        Ok(BeliefState { prior, round, weights, history: Vec::new() })
    }

    pub fn prior(&self) -> &Arc<Prior> {
        &self.prior
    }

    /// Number of rounds of feedback absorbed so far (0-based index of the
    /// next round to be played).
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn history(&self) -> &[(usize, Observation)] {
        &self.history
    }

    /// Whether scenario `s` agrees with every entry of `obs`.
    pub fn consistent(&self, s: usize, obs: &Observation) -> bool {
        let losses = self.prior.scenarios()[s].losses();
        obs.entries.iter().all(|&(i, t, v)| (losses.get(i, t) - v).abs() <= MATCH_TOL)
    }

    /// Renormalised weights after filtering out scenarios inconsistent
    /// with `obs`.
    pub fn filtered_weights(&self, obs: &Observation) -> Result<Vec<f64>> {
        let mut weights: Vec<f64> = self
            .weights
            .iter()
            .enumerate()
            .map(|(s, &w)| if w > 0.0 && self.consistent(s, obs) { w } else { 0.0 })
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ImpossibleObservation(format!(
                "no scenario with positive weight matches the feedback at round {}",
                self.round
            )));
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        Ok(weights)
    }

    /// Condition on the feedback from playing `action` this round.
    pub fn posterior_update(&self, action: usize, obs: &Observation) -> Result<Self> {
        let weights = self.filtered_weights(obs)?;
        let mut history = self.history.clone();
        history.push((action, obs.clone()));
        Ok(BeliefState { prior: Arc::clone(&self.prior), round: self.round + 1, weights, history })
    }

    /// Posterior distribution of the optimal action.
    pub fn action_posterior(&self) -> ActionDistribution {
        let mut probs = vec![0.0; self.prior.actions().len()];
        for (s, &w) in self.prior.scenarios().iter().zip(&self.weights) {
            probs[s.optimal()] += w;
        }
        ActionDistribution::from_raw(probs)
    }

    /// `P[i in a*]` for every coordinate.
    pub fn arm_marginals(&self) -> Vec<f64> {
        self.action_posterior().marginals(self.prior.actions())
    }

    /// `P[i in a*_S]` where `S` is a set of 1-based ranks.
    pub fn block_marginals(&self, ranks: &[usize]) -> Vec<f64> {
        let d = self.prior.d();
        let (mut inside, mut outside) = (vec![0.0; d], vec![0.0; d]);
        let mut member = vec![false; d];
        for (s, &w) in self.prior.scenarios().iter().zip(&self.weights) {
            if w > 0.0 {
                member.iter_mut().for_each(|x| *x = false);
                for &r in ranks {
                    if let Some(&i) = s.ranked_optimal().get(r.wrapping_sub(1)) {
                        member[i] = true;
                    }
                }
                for i in 0..d {
                    if member[i] {
                        inside[i] += w;
                    } else {
                        outside[i] += w;
                    }
                }
            }
        }
        split_ratio(&inside, &outside)
    }

    /// Posterior means of round-`t` losses under `conditioning`. Entries
    /// whose conditioning event has zero posterior mass are `None`.
    pub fn conditional_loss_means(&self, t: usize, conditioning: &Conditioning) -> Result<Vec<Option<f64>>> {
        let prior = &self.prior;
        if t >= prior.horizon() {
            return Err(Error::config(format!("round {t} out of range (horizon {})", prior.horizon())));
        }
        let d = prior.d();
        let mut mass = vec![0.0; d];
        let mut sum = vec![0.0; d];
        for (s, &w) in prior.scenarios().iter().zip(&self.weights) {
            if w <= 0.0 {
                continue;
            }
            for i in 0..d {
                let include = match conditioning {
                    Conditioning::None => true,
                    Conditioning::OptimalIs(j) => s.optimal() == *j,
                    Conditioning::InOptimal => prior.actions().contains(s.optimal(), i),
                    Conditioning::InOptimalBlock(ranks) => s.in_block(i, ranks),
                };
                if include {
                    mass[i] += w;
                    sum[i] += w * s.losses().get(i, t);
                }
            }
        }
        Ok(mass.iter().zip(&sum).map(|(&m, &x)| if m > 0.0 { Some(x / m) } else { None }).collect())
    }
}

/// Any posterior that can report the distribution of `a*` and absorb one
/// round of feedback. Implemented by exact beliefs and by the closed-form
/// posteriors of lazily sampled priors.
pub trait Posterior: Sized + Send + Sync {
    fn action_posterior(&self) -> ActionDistribution;
    fn update(&self, action: usize, obs: &Observation) -> Result<Self>;
}

impl Posterior for BeliefState {
    fn action_posterior(&self) -> ActionDistribution {
        BeliefState::action_posterior(self)
    }

    fn update(&self, action: usize, obs: &Observation) -> Result<Self> {
        self.posterior_update(action, obs)
    }
}
