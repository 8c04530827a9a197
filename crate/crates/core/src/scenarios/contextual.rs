//! Contextual prior with zero optimal loss on which Thompson Sampling pays
//! order `sqrt(T)`.
//!
//! With `S = ceil(sqrt(T))`, `S` disjoint cliques of `q = d / (2S)` arms are
//! drawn once from the seed. Round `t <= T - 2` belongs to block `t / S`;
//! during block `j` clique `C_j` carries loss `b_j` (a fair bit) and every
//! other arm loss 0, and the feedback graph is `C_j` plus its complement.
//! In the final round one arm that is still lossless gets loss 0, all
//! others loss 1, under bandit feedback.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ln_binomial_pmf, SCENARIO_CAP};
use crate::actions::ActionSet;
use crate::error::{Error, Result};
use crate::feedback::{FeedbackModel, Observation};
use crate::graph::Graph;
use crate::prior::{ActionDistribution, LossMatrix, Posterior, Prior, DEFAULT_GRID};

#[derive(Debug, Clone)]
pub struct ContextualLbModel {
    d: usize,
    horizon: usize,
    block_len: usize,
    cliques: Vec<Vec<usize>>,
    clique_of: Vec<Option<usize>>,
    /// Number of cliques whose block contains at least one round.
    active: usize,
    feedback: FeedbackModel,
    actions: Arc<ActionSet>,
}

impl ContextualLbModel {
    pub fn new(horizon: usize, d: usize, seed: u64) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::config("the contextual prior needs T >= 2"));
        }
        let s = (horizon as f64).sqrt().ceil() as usize;
        let s = if (s - 1) * (s - 1) >= horizon { s - 1 } else { s };
        if d < 2 * s || !d.is_multiple_of(2 * s) {
            return Err(Error::config(format!("the contextual prior needs 2S | d with S = {s} (d = {d})")));
        }
        let q = d / (2 * s);
        let mut arms: Vec<usize> = (0..d).collect();
        arms.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cliques: Vec<Vec<usize>> = (0..s)
            .map(|j| {
                let mut c = arms[j * q..(j + 1) * q].to_vec();
                c.sort_unstable();
                c
            })
            .collect();
        let mut clique_of = vec![None; d];
        for (j, c) in cliques.iter().enumerate() {
            for &i in c {
                clique_of[i] = Some(j);
            }
        }
        let active = (horizon - 1).div_ceil(s).min(s);
        let mut graphs = Vec::with_capacity(horizon);
        for t in 0..horizon {
            if t + 1 < horizon {
                let c = &cliques[t / s];
                let rest: Vec<usize> = (0..d).filter(|i| clique_of[*i] != Some(t / s)).collect();
                graphs.push(Graph::cliques(d, &[c.clone(), rest])?);
            } else {
                graphs.push(Graph::empty(d));
            }
        }
        Ok(ContextualLbModel {
            d,
            horizon,
            block_len: s,
            cliques,
            clique_of,
            active,
            feedback: FeedbackModel::contextual(graphs)?,
            actions: Arc::new(ActionSet::singletons(d)?),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn feedback(&self) -> &FeedbackModel {
        &self.feedback
    }

    pub fn actions(&self) -> Arc<ActionSet> {
        Arc::clone(&self.actions)
    }

    /// Active block of round `t`, or `None` for the final round.
    pub fn block_of(&self, t: usize) -> Option<usize> {
        (t + 1 < self.horizon).then(|| t / self.block_len)
    }

    fn losses_for(&self, bits: &[bool], distinguished: usize) -> LossMatrix {
        LossMatrix::from_fn(self.d, self.horizon, |i, t| match self.block_of(t) {
            Some(j) => {
                if self.clique_of[i] == Some(j) && bits[j] {
                    1.0
                } else {
                    0.0
                }
            }
            None => {
                if i == distinguished {
                    0.0
                } else {
                    1.0
                }
            }
        })
        .expect("losses are 0/1")
    }

    fn lossless(&self, bits: &[bool]) -> Vec<usize> {
        (0..self.d)
            .filter(|&i| match self.clique_of[i] {
                Some(j) => j >= self.active || !bits[j],
                None => true,
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LossMatrix {
        let bits: Vec<bool> = (0..self.cliques.len()).map(|_| rng.gen()).collect();
        let lossless = self.lossless(&bits);
        let k = lossless[rng.gen_range(0..lossless.len())];
        self.losses_for(&bits, k)
    }

    /// Exact expansion over all bit vectors and distinguished arms.
    pub fn expand(&self, cap: usize) -> Result<Prior> {
        let s = self.cliques.len();
        if s >= 31 || (1usize << self.active) * self.d > cap {
            return Err(Error::size(format!("contextual expansion exceeds {cap} scenarios")));
        }
        let mut atoms = Vec::new();
        for mask in 0..(1usize << self.active) {
            let bits: Vec<bool> = (0..s).map(|j| j < self.active && mask >> j & 1 == 1).collect();
            let lossless = self.lossless(&bits);
            let w = 1.0 / ((1usize << self.active) as f64 * lossless.len() as f64);
            for &k in &lossless {
                atoms.push((w, self.losses_for(&bits, k)));
            }
        }
        Prior::normalized(self.actions(), DEFAULT_GRID, atoms)
    }

    pub fn expand_default(&self) -> Result<Prior> {
        self.expand(SCENARIO_CAP)
    }

    pub fn initial_belief(self: &Arc<Self>) -> ContextualLbBelief {
        ContextualLbBelief { model: Arc::clone(self), round: 0, bits: vec![None; self.cliques.len()] }
    }
}

/// Closed-form posterior for [`ContextualLbModel`]: the revealed bits.
///
/// Feedback from the final round is not absorbed; no later decision
/// depends on it.
#[derive(Debug, Clone)]
pub struct ContextualLbBelief {
    model: Arc<ContextualLbModel>,
    round: usize,
    bits: Vec<Option<bool>>,
}

impl ContextualLbBelief {
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn bits(&self) -> &[Option<bool>] {
        &self.bits
    }

    /// `E[1 / (base + q B)]` with `B ~ Bin(n, 1/2)`.
    fn inverse_mean(base: usize, q: usize, n: usize) -> f64 {
        (0..=n).map(|k| ln_binomial_pmf(n, k).exp() / (base + q * k) as f64).sum()
    }
}

impl Posterior for ContextualLbBelief {
    fn action_posterior(&self) -> ActionDistribution {
        let m = &self.model;
        let q = m.cliques.first().map_or(0, |c| c.len());
        let unknown = (0..m.active).filter(|&j| self.bits[j].is_none()).count();
        let known_one = (0..m.active).filter(|&j| self.bits[j] == Some(true)).count();
        let base = m.d - q * (unknown + known_one);
        let sure = Self::inverse_mean(base, q, unknown);
        let maybe = if unknown > 0 { 0.5 * Self::inverse_mean(base + q, q, unknown - 1) } else { 0.0 };
        let probs = (0..m.d)
            .map(|i| match m.clique_of[i] {
                Some(j) if j < m.active => match self.bits[j] {
                    Some(true) => 0.0,
                    Some(false) => sure,
                    None => maybe,
                },
                _ => sure,
            })
            .collect();
        ActionDistribution::from_raw(probs)
    }

    fn update(&self, _action: usize, obs: &Observation) -> Result<Self> {
        let t = self.round;
        let m = &self.model;
        if t >= m.horizon {
            return Err(Error::config("update past the horizon"));
        }
        let mut next = self.clone();
        next.round = t + 1;
        let Some(j) = m.block_of(t) else {
            return Ok(next);
        };
        for &(i, round, v) in &obs.entries {
            if round != t {
                return Err(Error::Internal(format!("observation for round {round} at round {t}")));
            }
            if m.clique_of[i] == Some(j) {
                let bit = v > 0.5;
                if next.bits[j].is_some_and(|b| b != bit) {
                    return Err(Error::ImpossibleObservation(format!("clique {j} changed its loss")));
                }
                next.bits[j] = Some(bit);
            } else if v != 0.0 {
                return Err(Error::ImpossibleObservation(format!("arm {i} outside the active clique had loss {v}")));
            }
        }
        Ok(next)
    }
}
