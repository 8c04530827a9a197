//! The good/bad/terrible arms prior: a uniformly random good arm, the rest
//! independently bad or terrible. Round 0 gives the good arm loss 0 and
//! every other arm loss 1; afterwards losses are fair coins, stopped once
//! the total reaches `L` (good) or `L + 1` (bad), never stopped (terrible).

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;

use super::{binomial_tail, ln_binomial_pmf, SCENARIO_CAP};
use crate::actions::ActionSet;
use crate::error::{Error, Result};
use crate::feedback::Observation;
use crate::prior::{ActionDistribution, LossMatrix, Posterior, Prior, DEFAULT_GRID};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmType {
    Good,
    Bad,
    Terrible,
}

const TYPES: [ArmType; 3] = [ArmType::Good, ArmType::Bad, ArmType::Terrible];

#[derive(Debug, Clone)]
pub struct TDependentModel {
    d: usize,
    lstar: u32,
    horizon: usize,
    actions: Arc<ActionSet>,
}

impl TDependentModel {
    pub fn new(d: usize, lstar: u32, horizon: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::config("the T-dependent prior needs d >= 3"));
        }
        if lstar == 0 {
            return Err(Error::config("the T-dependent prior needs L >= 1"));
        }
        if horizon < 4 * lstar as usize {
            return Err(Error::config(format!("the T-dependent prior needs T >= 4L (T = {horizon}, L = {lstar})")));
        }
        Ok(TDependentModel { d, lstar, horizon, actions: Arc::new(ActionSet::singletons(d)?) })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn lstar(&self) -> u32 {
        self.lstar
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn actions(&self) -> Arc<ActionSet> {
        Arc::clone(&self.actions)
    }

    /// Cap on an arm's total, or `None` for terrible arms.
    fn cap(&self, ty: ArmType) -> Option<u32> {
        match ty {
            ArmType::Good => Some(self.lstar),
            ArmType::Bad => Some(self.lstar + 1),
            ArmType::Terrible => None,
        }
    }

    /// Draw one loss sequence together with the arm types.
    pub fn sample_with_types<R: Rng + ?Sized>(&self, rng: &mut R) -> (LossMatrix, Vec<ArmType>) {
        let good = rng.gen_range(0..self.d);
        let types: Vec<ArmType> = (0..self.d)
            .map(|i| {
                if i == good {
                    ArmType::Good
                } else if rng.gen::<bool>() {
                    ArmType::Bad
                } else {
                    ArmType::Terrible
                }
            })
            .collect();
        let mut data = vec![0.0; self.d * self.horizon];
        for (i, &ty) in types.iter().enumerate() {
            let row = &mut data[i * self.horizon..(i + 1) * self.horizon];
            let mut total = if ty == ArmType::Good { 0 } else { 1 };
            row[0] = total as f64;
            for x in row.iter_mut().skip(1) {
                if self.cap(ty).is_none_or(|k| total < k) && rng.gen::<bool>() {
                    total += 1;
                    *x = 1.0;
                }
            }
        }
        let losses = LossMatrix::from_rows(self.d, self.horizon, data).expect("coin-flip losses are in [0,1]");
        (losses, types)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LossMatrix {
        self.sample_with_types(rng).0
    }

    /// Every possible coin-flip sequence of one arm of type `ty`, with
    /// its probability.
    fn arm_sequences(&self, ty: ArmType) -> Vec<(f64, Vec<u8>)> {
        let mut out = Vec::new();
        let start = if ty == ArmType::Good { 0 } else { 1 };
        let mut seq = vec![start as u8];
        self.extend_sequences(ty, start, 1.0, &mut seq, &mut out);
        out
    }

    fn extend_sequences(&self, ty: ArmType, total: u32, prob: f64, seq: &mut Vec<u8>, out: &mut Vec<(f64, Vec<u8>)>) {
        if seq.len() == self.horizon {
            out.push((prob, seq.clone()));
            return;
        }
        let options: &[(u8, f64)] =
            if self.cap(ty).is_some_and(|k| total >= k) { &[(0, 1.0)] } else { &[(0, 0.5), (1, 0.5)] };
        for &(x, p) in options {
            seq.push(x);
            self.extend_sequences(ty, total + x as u32, prob * p, seq, out);
            seq.pop();
        }
    }

    /// Exact expansion into a finite prior; only for `d <= 3` and `T <= 8`.
    pub fn expand(&self, cap: usize) -> Result<Prior> {
        if self.d > 3 || self.horizon > 8 {
            return Err(Error::size(format!(
                "exact expansion of the T-dependent prior needs d <= 3 and T <= 8 (d = {}, T = {})",
                self.d, self.horizon
            )));
        }
        let seqs: Vec<Vec<(f64, Vec<u8>)>> = TYPES.iter().map(|&ty| self.arm_sequences(ty)).collect();
        let config_weight = 1.0 / (self.d as f64 * (1u64 << (self.d - 1)) as f64);
        let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut atoms: Vec<(f64, Vec<u8>)> = Vec::new();
        for good in 0..self.d {
            for mask in 0..(1usize << (self.d - 1)) {
                let types = config_types(self.d, good, mask);
                let lists: Vec<&Vec<(f64, Vec<u8>)>> = types.iter().map(|&ty| &seqs[type_index(ty)]).collect();
                let mut pick = vec![0usize; self.d];
                loop {
                    let mut w = config_weight;
                    let mut key = Vec::with_capacity(self.d * self.horizon);
                    for (i, list) in lists.iter().enumerate() {
                        let (p, s) = &list[pick[i]];
                        w *= p;
                        key.extend_from_slice(s);
                    }
                    match index.get(&key) {
                        Some(&k) => atoms[k].0 += w,
                        None => {
                            if atoms.len() >= cap {
                                return Err(Error::size(format!("T-dependent expansion exceeds {cap} scenarios")));
                            }
                            index.insert(key.clone(), atoms.len());
                            atoms.push((w, key));
                        }
                    }
                    // odometer over the per-arm sequence choices
                    let mut i = 0;
                    while i < self.d {
                        pick[i] += 1;
                        if pick[i] < lists[i].len() {
                            break;
                        }
                        pick[i] = 0;
                        i += 1;
                    }
                    if i == self.d {
                        break;
                    }
                }
            }
        }
        let atoms = atoms
            .into_iter()
            .map(|(w, key)| {
                let data = key.iter().map(|&x| x as f64).collect();
                Ok((w, LossMatrix::from_rows(self.d, self.horizon, data)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Prior::normalized(self.actions(), DEFAULT_GRID, atoms)
    }

    pub fn expand_default(&self) -> Result<Prior> {
        self.expand(SCENARIO_CAP)
    }

    pub fn initial_belief(self: &Arc<Self>) -> TDependentBelief {
        let states = self.lstar as usize + 2;
        let mut start = vec![0.0; states];
        start[0] = 1.0;
        let arm = ArmFilter { log_lik: [0.0; 3], alpha: [start.clone(), start.clone(), start] };
        TDependentBelief { model: Arc::clone(self), round: 0, arms: vec![arm; self.d] }
    }
}

fn type_index(ty: ArmType) -> usize {
    match ty {
        ArmType::Good => 0,
        ArmType::Bad => 1,
        ArmType::Terrible => 2,
    }
}

/// Types for good arm `good`; bit `k` of `mask` marks the `k`-th other arm
/// as terrible.
fn config_types(d: usize, good: usize, mask: usize) -> Vec<ArmType> {
    let mut k = 0;
    (0..d)
        .map(|i| {
            if i == good {
                ArmType::Good
            } else {
                let ty = if mask >> k & 1 == 1 { ArmType::Terrible } else { ArmType::Bad };
                k += 1;
                ty
            }
        })
        .collect()
}

/// Forward filter of one arm's running total under each type. States are
/// totals `0..=L+1`; the last state absorbs every total above `L`.
#[derive(Debug, Clone)]
struct ArmFilter {
    log_lik: [f64; 3],
    alpha: [Vec<f64>; 3],
}

/// Closed-form posterior for [`TDependentModel`]: per-arm forward filters
/// combined over the `d 2^(d-1)` type configurations.
#[derive(Debug, Clone)]
pub struct TDependentBelief {
    model: Arc<TDependentModel>,
    round: usize,
    arms: Vec<ArmFilter>,
}

impl TDependentBelief {
    pub fn round(&self) -> usize {
        self.round
    }

    /// Push one arm-type filter through round `t`, optionally conditioning
    /// on the observed loss. Returns the new state vector and the
    /// probability of the observation.
    fn advance(&self, ty: ArmType, alpha: &[f64], t: usize, obs: Option<f64>) -> (Vec<f64>, f64) {
        let lstar = self.model.lstar as usize;
        let top = lstar + 1;
        let mut next = vec![0.0; alpha.len()];
        let mut emit = |c_next: usize, x: u8, p: f64| {
            if obs.is_none_or(|v| (v - x as f64).abs() < 0.5) {
                next[c_next] += p;
            }
        };
        if t == 0 {
            match ty {
                ArmType::Good => emit(0, 0, alpha[0]),
                _ => emit(1, 1, alpha[0]),
            }
        } else {
            for (c, &p) in alpha.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let stopped = match ty {
                    ArmType::Good => c >= lstar,
                    ArmType::Bad => c >= top,
                    ArmType::Terrible => false,
                };
                if stopped {
                    emit(c, 0, p);
                } else {
                    emit(c, 0, 0.5 * p);
                    emit((c + 1).min(top), 1, 0.5 * p);
                }
            }
        }
        let total: f64 = next.iter().sum();
        if total > 0.0 {
            for x in next.iter_mut() {
                *x /= total;
            }
        }
        (next, total)
    }

    /// Distribution of an arm's final total, bucketed at `L + 1`.
    fn final_distribution(&self, ty: ArmType, alpha: &[f64]) -> Vec<f64> {
        let lstar = self.model.lstar as usize;
        let top = lstar + 1;
        let cap = if ty == ArmType::Good { lstar } else { top };
        let remaining = self.model.horizon - self.round;
        let mut out = vec![0.0; top + 1];
        for (c, &p) in alpha.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            if c >= cap {
                out[c.min(top)] += p;
                continue;
            }
            for b in 0..(cap - c) {
                out[c + b] += p * ln_binomial_pmf(remaining, b).exp();
            }
            out[cap] += p * binomial_tail(remaining, cap - c);
        }
        out
    }

    /// Filters as they would stand after round 0 with no observation.
    fn effective(&self) -> TDependentBelief {
        if self.round > 0 {
            return self.clone();
        }
        let mut b = self.clone();
        for i in 0..self.model.d {
            for (k, &ty) in TYPES.iter().enumerate() {
                let (alpha, _) = self.advance(ty, &self.arms[i].alpha[k], 0, None);
                b.arms[i].alpha[k] = alpha;
            }
        }
        b.round = 1;
        b
    }

    fn config_log_weights(&self) -> Vec<(Vec<ArmType>, f64)> {
        let d = self.model.d;
        let mut out = Vec::with_capacity(d << (d - 1));
        for good in 0..d {
            for mask in 0..(1usize << (d - 1)) {
                let types = config_types(d, good, mask);
                let lw: f64 = types.iter().enumerate().map(|(i, &ty)| self.arms[i].log_lik[type_index(ty)]).sum();
                out.push((types, lw));
            }
        }
        out
    }
}

impl Posterior for TDependentBelief {
    fn action_posterior(&self) -> ActionDistribution {
        let eff = self.effective();
        let d = self.model.d;
        let lstar = self.model.lstar as usize;
        let finals: Vec<[Vec<f64>; 3]> = eff
            .arms
            .iter()
            .map(|arm| TYPES.map(|ty| eff.final_distribution(ty, &arm.alpha[type_index(ty)])))
            .collect();
        let configs = self.config_log_weights();
        let max = configs.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        let mut probs = vec![0.0; d];
        let mut norm = 0.0;
        for (types, lw) in &configs {
            let w = (lw - max).exp();
            if w == 0.0 {
                continue;
            }
            norm += w;
            let dists: Vec<&Vec<f64>> = types.iter().enumerate().map(|(i, &ty)| &finals[i][type_index(ty)]).collect();
            for i in 0..d {
                let mut p = 0.0;
                for c in 0..=lstar {
                    let mut term = dists[i][c];
                    if term == 0.0 {
                        continue;
                    }
                    for (j, dj) in dists.iter().enumerate() {
                        if j == i {
                            continue;
                        }
                        // earlier arms must be strictly worse, later ones no better
                        let from = if j < i { c + 1 } else { c };
                        term *= dj[from..].iter().sum::<f64>();
                    }
                    p += term;
                }
                probs[i] += w * p;
            }
        }
        ActionDistribution::from_raw(probs.iter().map(|p| p / norm).collect())
    }

    fn update(&self, _action: usize, obs: &Observation) -> Result<Self> {
        let t = self.round;
        if t >= self.model.horizon {
            return Err(Error::config("update past the horizon"));
        }
        let mut observed = vec![None; self.model.d];
        for &(i, round, v) in &obs.entries {
            if round != t {
                return Err(Error::Internal(format!("observation for round {round} at round {t}")));
            }
            observed[i] = Some(v);
        }
        let mut next = self.clone();
        for (i, &obs) in observed.iter().enumerate() {
            for (k, &ty) in TYPES.iter().enumerate() {
                let (alpha, lik) = self.advance(ty, &self.arms[i].alpha[k], t, obs);
                next.arms[i].alpha[k] = alpha;
                next.arms[i].log_lik[k] += lik.ln();
            }
        }
        next.round = t + 1;
        if next.config_log_weights().iter().all(|c| c.1 == f64::NEG_INFINITY) {
            return Err(Error::ImpossibleObservation(format!("feedback at round {t} has zero probability")));
        }
        Ok(next)
    }
}
