//! Thompson Sampling, its thresholded variant, and the partitions used by
//! the semi-bandit analysis.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actions::ActionSet;
use crate::error::{Error, Result};
use crate::prior::{ActionDistribution, BeliefState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    #[serde(rename = "ts")]
    Ts,
    #[serde(rename = "thresholded-ts")]
    ThresholdedTs,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ts => "ts",
            PolicyKind::ThresholdedTs => "thresholded-ts",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Threshold for the thresholded variant; ignored by plain TS.
    pub gamma: f64,
}

impl PolicyConfig {
    pub fn ts() -> Self {
        PolicyConfig { kind: PolicyKind::Ts, gamma: 0.0 }
    }

    /// Thresholded TS; requires `0 < gamma` and `gamma * d < 1`.
    pub fn thresholded(gamma: f64, d: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma * (d as f64) < 1.0) {
            return Err(Error::config(format!("gamma = {gamma} must satisfy 0 < gamma < 1/d with d = {d}")));
        }
        Ok(PolicyConfig { kind: PolicyKind::ThresholdedTs, gamma })
    }

    /// Distribution of the played action given the posterior of `a*`,
    /// together with the rare/common partition when thresholding.
    pub fn play(&self, posterior: &ActionDistribution, actions: &ActionSet) -> Result<(ActionDistribution, Option<Partition>)> {
        match self.kind {
            PolicyKind::Ts => Ok((posterior.clone(), None)),
            PolicyKind::ThresholdedTs => {
                let partition = rare_common_partition(posterior, actions, self.gamma);
                let dist = thresholded_distribution(posterior, actions, &partition)?;
                Ok((dist, Some(partition)))
            }
        }
    }
}

/// Default threshold `m log^2(L) / L` for a lower bound `L` on the optimal
/// loss, clamped to `(0, 1/(2d)]`.
pub fn default_gamma(d: usize, m: usize, lstar_lower: f64) -> f64 {
    let cap = 1.0 / (2.0 * d as f64);
    let raw = m as f64 * lstar_lower.ln().powi(2) / lstar_lower;
    if raw.is_finite() && raw > 0.0 {
        raw.min(cap)
    } else {
        cap
    }
}

/// Split of the coordinates into rare and common arms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    rare: Vec<bool>,
}

impl Partition {
    pub fn from_rare(d: usize, rare: &[usize]) -> Self {
        let mut mask = vec![false; d];
        for &i in rare {
            mask[i] = true;
        }
        Partition { rare: mask }
    }

    pub fn is_rare(&self, i: usize) -> bool {
        self.rare[i]
    }

    pub fn rare(&self) -> Vec<usize> {
        (0..self.rare.len()).filter(|&i| self.rare[i]).collect()
    }

    pub fn common(&self) -> Vec<usize> {
        (0..self.rare.len()).filter(|&i| !self.rare[i]).collect()
    }

    pub fn d(&self) -> usize {
        self.rare.len()
    }
}

/// `P[(i in a*) and (R n a* = {})]` under `posterior`.
pub fn rare_free_mass(posterior: &ActionDistribution, actions: &ActionSet, partition: &Partition, i: usize) -> f64 {
    (0..actions.len())
        .filter(|&a| actions.contains(a, i) && actions.support(a).iter().all(|&j| !partition.is_rare(j)))
        .map(|a| posterior.prob(a))
        .sum()
}

/// Grow the rare set from empty: scanning coordinates in ascending order,
/// add the first arm whose rare-free optimal mass is at most `gamma`, then
/// restart the scan. Stops when no arm qualifies.
pub fn rare_common_partition(posterior: &ActionDistribution, actions: &ActionSet, gamma: f64) -> Partition {
    refine_partition(posterior, actions, gamma, Partition::from_rare(actions.d(), &[]))
}

/// Continue the growth procedure from an existing rare set.
pub fn refine_partition(posterior: &ActionDistribution, actions: &ActionSet, gamma: f64, mut partition: Partition) -> Partition {
    loop {
        let next = (0..actions.d())
            .find(|&i| !partition.is_rare(i) && rare_free_mass(posterior, actions, &partition, i) <= gamma);
        match next {
            Some(i) => partition.rare[i] = true,
            None => return partition,
        }
    }
}

/// Zero out every action touching a rare arm and renormalise.
pub fn thresholded_distribution(
    posterior: &ActionDistribution,
    actions: &ActionSet,
    partition: &Partition,
) -> Result<ActionDistribution> {
    let mut probs: Vec<f64> = (0..actions.len())
        .map(|a| {
            if actions.support(a).iter().any(|&i| partition.is_rare(i)) {
                0.0
            } else {
                posterior.prob(a)
            }
        })
        .collect();
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::ThresholdTooAggressive);
    }
    for p in probs.iter_mut() {
        *p /= total;
    }
    Ok(ActionDistribution::from_raw(probs))
}

/// TS plays the posterior of the optimal action.
pub fn ts_action_distribution(belief: &BeliefState) -> ActionDistribution {
    belief.action_posterior()
}

/// Dyadic blocks `{2^(k-1), ..., 2^k - 1}` of the ranks `1..=m`.
pub fn rank_dyadic_partition(m: usize) -> Vec<Vec<usize>> {
    let mut blocks = Vec::new();
    let mut lo = 1;
    while lo <= m {
        let hi = (2 * lo - 1).min(m);
        blocks.push((lo..=hi).collect());
        lo *= 2;
    }
    blocks
}

/// Inverse-CDF draw over the canonical action order.
pub fn sample_action<R: Rng + ?Sized>(dist: &ActionDistribution, rng: &mut R) -> usize {
    sample_with_uniform(dist, rng.gen::<f64>())
}

/// Inverse-CDF lookup for a given uniform `u` in `[0,1)`.
pub fn sample_with_uniform(dist: &ActionDistribution, u: f64) -> usize {
    let mut cum = 0.0;
    let mut last = 0;
    for (a, &p) in dist.probs().iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = a;
            if u < cum {
                return a;
            }
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::make_interval_actions;
    use rand::SeedableRng;

    fn dist(p: &[f64]) -> ActionDistribution {
        ActionDistribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn partition_examples() {
        let experts = ActionSet::singletons(3).unwrap();
        let p = dist(&[0.05, 0.5, 0.45]);
        let part = rare_common_partition(&p, &experts, 0.1);
        assert_eq!(part.rare(), vec![0]);
        assert_eq!(part.common(), vec![1, 2]);
        assert!(rare_common_partition(&p, &experts, 0.01).rare().is_empty());
        let point = ActionDistribution::point_mass(3, 1);
        assert_eq!(rare_common_partition(&point, &experts, 0.1).rare(), vec![0, 2]);
    }

    #[test]
    fn thresholded_examples() {
        let experts = ActionSet::singletons(3).unwrap();
        let p = dist(&[0.05, 0.5, 0.45]);
        let part = rare_common_partition(&p, &experts, 0.1);
        let q = thresholded_distribution(&p, &experts, &part).unwrap();
        let expected = [0.0, 0.5 / 0.95, 0.45 / 0.95];
        for (x, y) in q.probs().iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
        let none = Partition::from_rare(3, &[]);
        assert_eq!(thresholded_distribution(&p, &experts, &none).unwrap(), p);

        let intervals = make_interval_actions(4, 2).unwrap();
        let p = dist(&[0.96, 0.04]);
        let part = rare_common_partition(&p, &intervals, 0.05);
        assert_eq!(part.rare(), vec![2, 3]);
        let q = thresholded_distribution(&p, &intervals, &part).unwrap();
        assert_eq!(q.probs(), &[1.0, 0.0]);

        let all = Partition::from_rare(4, &[0, 2]);
        assert!(matches!(thresholded_distribution(&p, &intervals, &all), Err(Error::ThresholdTooAggressive)));
    }

    #[test]
    fn gamma_validation_and_defaults() {
        assert!(PolicyConfig::thresholded(0.25, 4).is_err());
        assert!(PolicyConfig::thresholded(0.0, 4).is_err());
        assert!(PolicyConfig::thresholded(0.2, 4).is_ok());
        // nonpositive raw value falls back to the cap
        assert_eq!(default_gamma(4, 1, 1.0), 0.125);
        let g = default_gamma(4, 1, 1000.0);
        assert!((g - 1000f64.ln().powi(2) / 1000.0).abs() < 1e-15);
        assert_eq!(default_gamma(4, 2, 20.0), 0.125);
    }

    #[test]
    fn dyadic_blocks() {
        assert_eq!(rank_dyadic_partition(1), vec![vec![1]]);
        assert_eq!(rank_dyadic_partition(5), vec![vec![1], vec![2, 3], vec![4, 5]]);
        assert_eq!(rank_dyadic_partition(8), vec![vec![1], vec![2, 3], vec![4, 5, 6, 7], vec![8]]);
    }

    #[test]
    fn inverse_cdf_sampling() {
        assert_eq!(sample_with_uniform(&dist(&[0.5, 0.5]), 0.3), 0);
        assert_eq!(sample_with_uniform(&dist(&[0.5, 0.5]), 0.7), 1);
        let point = ActionDistribution::point_mass(4, 2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| sample_action(&point, &mut rng) == 2));
        // rounding slack in the cumulative sum never selects a zero-mass action
        assert_eq!(sample_with_uniform(&dist(&[0.3, 0.7, 0.0]), 0.999_999_999_999_999_9), 1);
    }

    #[test]
    fn empirical_frequencies() {
        let p = dist(&[0.1, 0.2, 0.3, 0.4]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_action(&p, &mut rng)] += 1;
        }
        for (c, &q) in counts.iter().zip(p.probs()) {
            let sd = (n as f64 * q * (1.0 - q)).sqrt();
            assert!((*c as f64 - n as f64 * q).abs() <= 3.0 * sd);
        }
    }
}
