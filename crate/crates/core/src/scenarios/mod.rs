//! Generators for the named prior constructions.

mod contextual;
mod tdependent;

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{make_all_msubsets, make_interval_actions, ActionSet, DEFAULT_SUBSET_CAP};
use crate::error::{Error, Result};
use crate::feedback::FeedbackModel;
use crate::prior::{snap, LossMatrix, Prior, DEFAULT_GRID};

pub use contextual::{ContextualLbBelief, ContextualLbModel};
pub use tdependent::{ArmType, TDependentBelief, TDependentModel};

/// Default cap on the number of scenarios of an exact expansion.
pub const SCENARIO_CAP: usize = 1 << 16;

pub(crate) fn ln_binomial_pmf(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    let mut ln_c = 0.0;
    for j in 0..k {
        ln_c += ((n - j) as f64).ln() - ((j + 1) as f64).ln();
    }
    ln_c - n as f64 * std::f64::consts::LN_2
}

/// `P[Bin(n, 1/2) >= k]`.
pub(crate) fn binomial_tail(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    // sum the shorter side to limit cancellation
    if k > n / 2 {
        (k..=n).map(|j| ln_binomial_pmf(n, j).exp()).sum()
    } else {
        1.0 - (0..k).map(|j| ln_binomial_pmf(n, j).exp()).sum::<f64>()
    }
}

/// Interval actions with losses constant on every interval, so the game
/// reduces to an expert problem over `d/m` intervals. Losses are drawn on
/// the tenths grid; `n_scenarios` atoms with random weights.
pub fn gen_interval_expert(d: usize, m: usize, horizon: usize, n_scenarios: usize, seed: u64) -> Result<Prior> {
    let actions = make_interval_actions(d, m)?;
    if n_scenarios == 0 || horizon == 0 {
        return Err(Error::config("need at least one scenario and one round"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = d / m;
    let mut atoms = Vec::with_capacity(n_scenarios);
    for _ in 0..n_scenarios {
        let weight = rng.gen_range(0.1..1.0);
        let values: Vec<f64> = (0..blocks * horizon).map(|_| rng.gen_range(0..=10) as f64 / 10.0).collect();
        let losses = LossMatrix::from_fn(d, horizon, |i, t| values[(i / m) * horizon + t])?;
        atoms.push((weight, losses));
    }
    Prior::normalized(actions, DEFAULT_GRID, atoms)
}

/// Two arms, two equally likely scenarios. Arm 0 has loss 1 for the first
/// `T/3` rounds and arm 1 loss 0; afterwards scenario 0 is all zero and
/// scenario 1 gives arm 1 loss 1.
pub fn gen_nohighprob(horizon: usize) -> Result<Prior> {
    if horizon == 0 || !horizon.is_multiple_of(3) {
        return Err(Error::config(format!("nohighprob needs 3 | T (T = {horizon})")));
    }
    let third = horizon / 3;
    let first = LossMatrix::from_fn(2, horizon, |i, t| if i == 0 && t < third { 1.0 } else { 0.0 })?;
    let second =
        LossMatrix::from_fn(2, horizon, |i, t| if (i == 0 && t < third) || (i == 1 && t >= third) { 1.0 } else { 0.0 })?;
    Prior::new(ActionSet::singletons(2)?, DEFAULT_GRID, vec![(0.5, first), (0.5, second)])
}

/// Whether to enumerate every loss matrix or sample a fixed number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    Enumerate,
    Sample(usize),
}

/// Latent mean vectors are the distinct permutations of `profile`, equally
/// likely; given the latent means, losses are independent Bernoulli draws.
/// Actions are all `m`-subsets.
pub fn gen_iid_bernoulli(
    d: usize,
    m: usize,
    horizon: usize,
    profile: &[f64],
    expansion: Expansion,
    seed: u64,
    cap: usize,
) -> Result<Prior> {
    if profile.len() != d {
        return Err(Error::config(format!("mean profile has {} entries, expected d = {d}", profile.len())));
    }
    if profile.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::config("Bernoulli means must lie in [0,1]"));
    }
    let actions = make_all_msubsets(d, m, DEFAULT_SUBSET_CAP)?;
    let latents = distinct_permutations(profile);
    let cells = d * horizon;
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut atoms: Vec<(f64, Vec<u8>)> = Vec::new();
    let mut add = |key: Vec<u8>, w: f64, atoms: &mut Vec<(f64, Vec<u8>)>| -> Result<()> {
        match index.get(&key) {
            Some(&k) => atoms[k].0 += w,
            None => {
                if atoms.len() >= cap {
                    return Err(Error::size(format!("i.i.d. prior exceeds {cap} scenarios")));
                }
                index.insert(key.clone(), atoms.len());
                atoms.push((w, key));
            }
        }
        Ok(())
    };
    match expansion {
        Expansion::Enumerate => {
            if cells >= 63 || latents.len().saturating_mul(1usize << cells) > cap.saturating_mul(64) {
                return Err(Error::size(format!("enumerating 2^{cells} loss matrices exceeds the cap")));
            }
            for theta in &latents {
                for bits in 0..(1u64 << cells) {
                    let key: Vec<u8> = (0..cells).map(|c| (bits >> c & 1) as u8).collect();
                    let w: f64 = key
                        .iter()
                        .enumerate()
                        .map(|(c, &x)| {
                            let p = theta[c / horizon];
                            if x == 1 {
                                p
                            } else {
                                1.0 - p
                            }
                        })
                        .product();
                    if w > 0.0 {
                        add(key, w / latents.len() as f64, &mut atoms)?;
                    }
                }
            }
        }
        Expansion::Sample(per_latent) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = 1.0 / (latents.len() * per_latent.max(1)) as f64;
            for theta in &latents {
                for _ in 0..per_latent.max(1) {
                    let key: Vec<u8> = (0..cells).map(|c| rng.gen_bool(theta[c / horizon]) as u8).collect();
                    add(key, w, &mut atoms)?;
                }
            }
        }
    }
    let atoms = atoms
        .into_iter()
        .map(|(w, key)| Ok((w, LossMatrix::from_rows(d, horizon, key.iter().map(|&x| x as f64).collect())?)))
        .collect::<Result<Vec<_>>>()?;
    Prior::normalized(actions, DEFAULT_GRID, atoms)
}

/// Distinct permutations of `v` in lexicographic order of positions.
fn distinct_permutations(v: &[f64]) -> Vec<Vec<f64>> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = vec![sorted.clone()];
    // next lexicographic permutation
    loop {
        let n = sorted.len();
        let Some(i) = (1..n).rev().find(|&i| sorted[i - 1] < sorted[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| sorted[j] > sorted[i - 1]).unwrap();
        sorted.swap(i - 1, j);
        sorted[i..].reverse();
        out.push(sorted.clone());
    }
}

pub fn gen_tdependent(d: usize, lstar: u32, horizon: usize) -> Result<TDependentModel> {
    TDependentModel::new(d, lstar, horizon)
}

pub fn gen_contextual_lb(horizon: usize, d: usize, seed: u64) -> Result<ContextualLbModel> {
    ContextualLbModel::new(horizon, d, seed)
}

/// A prior that can be sampled per trial: either an explicit finite prior
/// or one of the lazily sampled constructions.
#[derive(Debug, Clone)]
pub enum PriorModel {
    Finite(Arc<Prior>),
    TDependent(Arc<TDependentModel>),
    ContextualLb(Arc<ContextualLbModel>),
}

/// One draw from a [`PriorModel`].
#[derive(Debug, Clone)]
pub struct Draw {
    /// Index of the drawn scenario for finite priors.
    pub scenario: Option<usize>,
    pub losses: LossMatrix,
}

impl PriorModel {
    pub fn d(&self) -> usize {
        match self {
            PriorModel::Finite(p) => p.d(),
            PriorModel::TDependent(m) => m.d(),
            PriorModel::ContextualLb(m) => m.d(),
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            PriorModel::Finite(p) => p.horizon(),
            PriorModel::TDependent(m) => m.horizon(),
            PriorModel::ContextualLb(m) => m.horizon(),
        }
    }

    pub fn actions(&self) -> Arc<ActionSet> {
        match self {
            PriorModel::Finite(p) => p.actions_arc(),
            PriorModel::TDependent(m) => m.actions(),
            PriorModel::ContextualLb(m) => m.actions(),
        }
    }

    pub fn finite(&self) -> Option<&Arc<Prior>> {
        match self {
            PriorModel::Finite(p) => Some(p),
            _ => None,
        }
    }

    /// Explicit finite form, expanding lazy constructions when small enough.
    pub fn exact_prior(&self) -> Result<Arc<Prior>> {
        match self {
            PriorModel::Finite(p) => Ok(Arc::clone(p)),
            PriorModel::TDependent(m) => Ok(Arc::new(m.expand_default()?)),
            PriorModel::ContextualLb(m) => Ok(Arc::new(m.expand_default()?)),
        }
    }

    /// Largest optimal loss the construction allows, when known.
    pub fn lstar_max(&self) -> f64 {
        match self {
            PriorModel::Finite(p) => p.lstar_max(),
            PriorModel::TDependent(m) => m.lstar() as f64,
            PriorModel::ContextualLb(_) => 0.0,
        }
    }

    /// Feedback rule the construction prescribes, if any.
    pub fn native_feedback(&self) -> Option<FeedbackModel> {
        match self {
            PriorModel::ContextualLb(m) => Some(m.feedback().clone()),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        match self {
            PriorModel::Finite(p) => {
                let u: f64 = rng.gen();
                let mut cum = 0.0;
                let mut pick = p.len() - 1;
                for (k, s) in p.scenarios().iter().enumerate() {
                    cum += s.weight();
                    if s.weight() > 0.0 && u < cum {
                        pick = k;
                        break;
                    }
                }
                Draw { scenario: Some(pick), losses: p.scenarios()[pick].losses().clone() }
            }
            PriorModel::TDependent(m) => Draw { scenario: None, losses: m.sample(rng) },
            PriorModel::ContextualLb(m) => Draw { scenario: None, losses: m.sample(rng) },
        }
    }
}

/// Expansion mode for generators that support both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionMode {
    #[default]
    Exact,
    Lazy,
}

/// Named generator with its parameters, as written in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default, rename = "T")]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub lstar: Option<u32>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub scenarios: Option<usize>,
    #[serde(default)]
    pub means: Option<Vec<f64>>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub mode: ExpansionMode,
}

/// Known generator names.
pub const GENERATORS: [&str; 5] = ["interval-expert", "nohighprob", "tdependent", "contextual-lb", "iid-bernoulli"];

impl ScenarioSpec {
    fn need<T: Copy>(&self, v: Option<T>, field: &str) -> Result<T> {
        v.ok_or_else(|| Error::config(format!("generator '{}' needs '{field}'", self.name)))
    }

    pub fn build(&self) -> Result<PriorModel> {
        let seed = self.seed.unwrap_or(0);
        let exact = self.mode == ExpansionMode::Exact;
        match self.name.as_str() {
            "interval-expert" => {
                let d = self.need(self.d, "d")?;
                let prior = gen_interval_expert(
                    d,
                    self.m.unwrap_or(1),
                    self.need(self.horizon, "T")?,
                    self.scenarios.unwrap_or(4),
                    seed,
                )?;
                Ok(PriorModel::Finite(Arc::new(prior)))
            }
            "nohighprob" => Ok(PriorModel::Finite(Arc::new(gen_nohighprob(self.need(self.horizon, "T")?)?))),
            "tdependent" => {
                let model = gen_tdependent(self.need(self.d, "d")?, self.need(self.lstar, "lstar")?, self.need(self.horizon, "T")?)?;
                if exact {
                    Ok(PriorModel::Finite(Arc::new(model.expand_default()?)))
                } else {
                    Ok(PriorModel::TDependent(Arc::new(model)))
                }
            }
            "contextual-lb" => {
                let model = gen_contextual_lb(self.need(self.horizon, "T")?, self.need(self.d, "d")?, seed)?;
                if exact {
                    Ok(PriorModel::Finite(Arc::new(model.expand_default()?)))
                } else {
                    Ok(PriorModel::ContextualLb(Arc::new(model)))
                }
            }
            "iid-bernoulli" => {
                let d = self.need(self.d, "d")?;
                let means = self.means.clone().ok_or_else(|| Error::config("iid-bernoulli needs 'means'"))?;
                let expansion = match (self.mode, self.samples) {
                    (ExpansionMode::Exact, None) => Expansion::Enumerate,
                    (_, Some(n)) => Expansion::Sample(n),
                    (ExpansionMode::Lazy, None) => Expansion::Sample(64),
                };
                let prior = gen_iid_bernoulli(
                    d,
                    self.m.unwrap_or(1),
                    self.need(self.horizon, "T")?,
                    &means,
                    expansion,
                    seed,
                    SCENARIO_CAP,
                )?;
                Ok(PriorModel::Finite(Arc::new(prior)))
            }
            other => Err(Error::config(format!("unknown generator '{other}' (known: {})", GENERATORS.join(", ")))),
        }
    }

    /// Feedback prescribed by the generator, if any.
    pub fn native_feedback(&self) -> Result<Option<FeedbackModel>> {
        if self.name == "contextual-lb" {
            let model = gen_contextual_lb(self.need(self.horizon, "T")?, self.need(self.d, "d")?, self.seed.unwrap_or(0))?;
            return Ok(Some(model.feedback().clone()));
        }
        Ok(None)
    }
}

/// Snap a value onto the default grid; used by generators that take real
/// parameters.
pub fn on_grid(x: f64) -> f64 {
    snap(x, DEFAULT_GRID)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::FeedbackModel;
    use crate::prior::BeliefState;

    #[test]
    fn binomial_helpers() {
        let total: f64 = (0..=10).map(|k| ln_binomial_pmf(10, k).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((ln_binomial_pmf(4, 2).exp() - 6.0 / 16.0).abs() < 1e-15);
        assert!((binomial_tail(4, 3) - 5.0 / 16.0).abs() < 1e-15);
        assert!((binomial_tail(4, 1) - 15.0 / 16.0).abs() < 1e-15);
        assert_eq!(binomial_tail(4, 5), 0.0);
        assert_eq!(binomial_tail(4, 0), 1.0);
    }

    #[test]
    fn interval_expert_is_clique_constant() {
        let prior = gen_interval_expert(4, 2, 5, 4, 1).unwrap();
        assert_eq!(prior.actions().len(), 2);
        for s in prior.scenarios() {
            for t in 0..5 {
                assert_eq!(s.losses().get(0, t), s.losses().get(1, t));
                assert_eq!(s.losses().get(2, t), s.losses().get(3, t));
            }
        }
        let single = gen_interval_expert(3, 3, 4, 3, 2).unwrap();
        assert_eq!(single.actions().len(), 1);
        let six = gen_interval_expert(6, 3, 1, 5, 3).unwrap();
        for s in six.scenarios() {
            let mut values: Vec<u64> = (0..6).map(|i| s.losses().get(i, 0).to_bits()).collect();
            values.sort_unstable();
            values.dedup();
            assert!(values.len() <= 2);
        }
        assert!(gen_interval_expert(5, 2, 3, 2, 0).is_err());
        let again = gen_interval_expert(4, 2, 5, 4, 1).unwrap();
        assert_eq!(again.scenarios(), prior.scenarios());
    }

    #[test]
    fn nohighprob_construction() {
        let prior = gen_nohighprob(6).unwrap();
        assert_eq!(prior.scenarios()[1].losses().row(1), &[0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(prior.scenarios()[0].lstar(), 0.0);
        assert_eq!(prior.scenarios()[0].optimal(), 1);
        assert_eq!(prior.scenarios()[1].lstar(), 2.0);
        assert_eq!(prior.scenarios()[1].optimal(), 0);
        assert!(gen_nohighprob(7).is_err());
    }

    #[test]
    fn nohighprob_posterior_is_flat_in_the_first_third() {
        let prior = Arc::new(gen_nohighprob(9).unwrap());
        for model in [FeedbackModel::full(), FeedbackModel::semi_bandit()] {
            for s in 0..2 {
                for arm in 0..2 {
                    let mut belief = BeliefState::initial(Arc::clone(&prior));
                    for t in 0..3 {
                        assert_eq!(belief.action_posterior().probs(), &[0.5, 0.5]);
                        let obs = model.observe(t, &[arm], prior.scenarios()[s].losses()).unwrap();
                        belief = belief.posterior_update(arm, &obs).unwrap();
                    }
                    assert_eq!(belief.action_posterior().probs(), &[0.5, 0.5]);
                }
            }
        }
    }

    #[test]
    fn iid_bernoulli_latent_states() {
        assert_eq!(distinct_permutations(&[0.1, 0.9]).len(), 2);
        assert_eq!(distinct_permutations(&[0.5, 0.5, 0.2]).len(), 3);
        let single = gen_iid_bernoulli(2, 1, 2, &[0.5, 0.5], Expansion::Enumerate, 0, SCENARIO_CAP).unwrap();
        assert_eq!(single.len(), 16);
        assert!(single.weights().iter().all(|&w| (w - 1.0 / 16.0).abs() < 1e-15));
        let two = gen_iid_bernoulli(2, 1, 2, &[0.1, 0.9], Expansion::Enumerate, 0, SCENARIO_CAP).unwrap();
        // P[all zeros] = 0.5 (0.9 0.1)^2 + 0.5 (0.1 0.9)^2
        let zero = two.scenarios().iter().find(|s| s.losses().data().iter().all(|&x| x == 0.0)).unwrap();
        assert!((zero.weight() - 0.0081).abs() < 1e-12);
        let sampled = gen_iid_bernoulli(3, 1, 10, &[0.1, 0.5, 0.9], Expansion::Sample(20), 4, SCENARIO_CAP).unwrap();
        assert!(sampled.len() <= 120);
        assert!(matches!(
            gen_iid_bernoulli(4, 1, 10, &[0.1, 0.5, 0.9, 0.2], Expansion::Enumerate, 0, SCENARIO_CAP),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn spec_builds_every_generator() {
        let spec = |name: &str| ScenarioSpec { name: name.into(), d: Some(4), m: Some(2), horizon: Some(6), ..Default::default() };
        assert!(matches!(spec("interval-expert").build().unwrap(), PriorModel::Finite(_)));
        assert!(matches!(spec("nohighprob").build().unwrap(), PriorModel::Finite(_)));
        let lazy = ScenarioSpec { name: "tdependent".into(), d: Some(4), lstar: Some(2), horizon: Some(16), mode: ExpansionMode::Lazy, ..Default::default() };
        assert!(matches!(lazy.build().unwrap(), PriorModel::TDependent(_)));
        let ctx = ScenarioSpec { name: "contextual-lb".into(), d: Some(8), horizon: Some(16), mode: ExpansionMode::Lazy, ..Default::default() };
        assert!(matches!(ctx.build().unwrap(), PriorModel::ContextualLb(_)));
        assert!(ctx.native_feedback().unwrap().is_some());
        let iid = ScenarioSpec { name: "iid-bernoulli".into(), d: Some(2), horizon: Some(3), means: Some(vec![0.2, 0.8]), ..Default::default() };
        assert!(matches!(iid.build().unwrap(), PriorModel::Finite(_)));
        assert!(spec("nonsense").build().is_err());
        assert!(ScenarioSpec { name: "tdependent".into(), ..Default::default() }.build().is_err());
    }

    #[test]
    fn finite_sampling_follows_weights() {
        let prior = Arc::new(gen_interval_expert(2, 1, 2, 3, 8).unwrap());
        let model = PriorModel::Finite(Arc::clone(&prior));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut counts = [0usize; 3];
        let n = 30_000;
        for _ in 0..n {
            counts[model.sample(&mut rng).scenario.unwrap()] += 1;
        }
        for (c, s) in counts.iter().zip(prior.scenarios()) {
            let sd = (n as f64 * s.weight() * (1.0 - s.weight())).sqrt();
            assert!((*c as f64 - n as f64 * s.weight()).abs() < 4.0 * sd);
        }
    }
}
