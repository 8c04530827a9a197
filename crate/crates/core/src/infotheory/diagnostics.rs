//! Exact per-round information quantities for a belief and a play
//! distribution, computed by enumerating every (action, feedback) branch.

use std::collections::HashMap;

use serde::Serialize;

use super::entropy::{coordinate_entropy, kl_bernoulli, relative_entropy_ext, shannon_entropy};
use super::potential::PotentialFn;
use crate::error::{Error, Result};
use crate::feedback::FeedbackModel;
use crate::policy::Partition;
use crate::prior::{ActionDistribution, BeliefState, Conditioning};

/// Denominators at or below this are treated as zero and the ratio is
/// reported as undefined.
pub const RATIO_EPS: f64 = 1e-13;

/// Default cap on `(action, scenario)` pairs enumerated per round.
pub const DEFAULT_BRANCH_CAP: usize = 10_000_000;

/// One feedback outcome of the round.
#[derive(Debug, Clone)]
pub struct Branch {
    pub action: usize,
    /// Probability of playing `action` and then seeing this feedback.
    pub prob: f64,
    /// Posterior scenario weights after this feedback.
    pub weights: Vec<f64>,
    /// `P[branch] * E[l_t | branch]`, per coordinate.
    pub loss_mass: Vec<f64>,
}

/// Enumerate the distinct outcomes of the round at `belief.round()`.
pub fn branches(belief: &BeliefState, play: &ActionDistribution, model: &FeedbackModel, cap: usize) -> Result<Vec<Branch>> {
    let prior = belief.prior();
    let t = belief.round();
    let d = prior.d();
    let support: Vec<usize> = (0..belief.weights().len()).filter(|&s| belief.weights()[s] > 0.0).collect();
    let active = play.probs().iter().filter(|&&q| q > 0.0).count();
    if active.saturating_mul(support.len()) > cap {
        return Err(Error::size(format!(
            "round {t} would enumerate {} action-scenario pairs (cap {cap})",
            active * support.len()
        )));
    }
    let mut out = Vec::new();
    for (a, &q) in play.probs().iter().enumerate() {
        if q <= 0.0 {
            continue;
        }
        let coords = model.observed_coords(t, prior.actions().support(a), d)?;
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let first = out.len();
        for &s in &support {
            let losses = prior.scenarios()[s].losses();
            let key: Vec<u64> = coords.iter().map(|&i| losses.get(i, t).to_bits()).collect();
            let slot = *index.entry(key).or_insert_with(|| {
                out.push(Branch { action: a, prob: 0.0, weights: vec![0.0; prior.len()], loss_mass: vec![0.0; d] });
                out.len() - 1
            });
            let w = belief.weights()[s];
            let b = &mut out[slot];
            b.weights[s] = w;
            b.prob += w;
            for i in 0..d {
                b.loss_mass[i] += q * w * losses.get(i, t);
            }
        }
        for b in &mut out[first..] {
            let mass = b.prob;
            for w in b.weights.iter_mut() {
                *w /= mass;
            }
            b.prob = q * mass;
        }
    }
    Ok(out)
}

/// Settings shared by every round of a run.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticOptions {
    pub potentials: Vec<PotentialFn>,
    /// Rank blocks (1-based ranks) for the per-block quantities.
    pub blocks: Vec<Vec<usize>>,
    /// Enumeration cap; 0 means [`DEFAULT_BRANCH_CAP`].
    pub branch_cap: usize,
}

impl DiagnosticOptions {
    pub fn cap(&self) -> usize {
        if self.branch_cap == 0 {
            DEFAULT_BRANCH_CAP
        } else {
            self.branch_cap
        }
    }
}

/// Left-hand sides of the two partial-observation inequalities for one
/// rank block, next to the block's coordinate information gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockCheck {
    pub info_gain_c: f64,
    /// `sum_i p_hat(i) p(i,S) kl(l(i,S), l(i))`, bounded by `info_gain_c`.
    pub kl_sum: f64,
    /// `sum_i p_hat(i) p(i,S) (l(i) - l(i,S))_+^2 / l(i)`, bounded by
    /// `2 info_gain_c`.
    pub chi_sum: f64,
}

/// All per-round quantities. Ratios are `None` when undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundDiagnostics {
    pub t: usize,
    pub r: f64,
    pub r_plus: f64,
    pub info_gain: f64,
    /// `H(p_t) - E H(p_{t+1})`, equal to `info_gain` in exact arithmetic.
    pub info_gain_entropy_diff: f64,
    pub info_gain_c: f64,
    pub blocks: Vec<BlockCheck>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda_c: Option<f64>,
    /// `E[F(p_{t+1}) - F(p_t)]` per registered potential.
    pub potential_drops: Vec<f64>,
    /// Lower bound on each drop implied by the admissibility conditions.
    pub potential_rhs: Vec<f64>,
    pub expected_play_loss: f64,
    /// `sum_s w_s <l_t^s, a*_s>`.
    pub expected_optimal_loss: f64,
    /// `sum_i (p_hat(i) - p(i)) l(i,i)`.
    pub rare_term: f64,
    /// `sum_{i common} p_hat(i) (l(i) - l(i,i))`.
    pub common_term: f64,
    pub entropy: f64,
    pub coord_entropy: f64,
    /// `max_i |E p_{t+1}(i) - p_t(i)|`.
    pub martingale_gap: f64,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > RATIO_EPS).then(|| num / den)
}

/// Diagnostics for the round at `belief.round()` when the player draws its
/// action from `play`.
pub fn round_diagnostics(
    belief: &BeliefState,
    play: &ActionDistribution,
    model: &FeedbackModel,
    partition: Option<&Partition>,
    opts: &DiagnosticOptions,
) -> Result<RoundDiagnostics> {
    let br = branches(belief, play, model, opts.cap())?;
    diagnostics_from_branches(belief, play, partition, opts, &br)
}

/// `(I_t, I_t^c, per-block I_t^c)` for the round at `belief.round()`.
pub fn info_gain(
    belief: &BeliefState,
    play: &ActionDistribution,
    model: &FeedbackModel,
    blocks: &[Vec<usize>],
) -> Result<(f64, f64, Vec<f64>)> {
    let opts = DiagnosticOptions { blocks: blocks.to_vec(), ..Default::default() };
    let diag = round_diagnostics(belief, play, model, None, &opts)?;
    Ok((diag.info_gain, diag.info_gain_c, diag.blocks.iter().map(|b| b.info_gain_c).collect()))
}

/// Same as [`round_diagnostics`] with the branches already enumerated.
pub fn diagnostics_from_branches(
    belief: &BeliefState,
    play: &ActionDistribution,
    partition: Option<&Partition>,
    opts: &DiagnosticOptions,
    branches: &[Branch],
) -> Result<RoundDiagnostics> {
    let prior = belief.prior();
    let actions = prior.actions();
    let t = belief.round();
    let d = prior.d();

    let p_act = belief.action_posterior();
    let p = p_act.marginals(actions);
    let p_hat = play.marginals(actions);
    let block_p: Vec<Vec<f64>> = opts.blocks.iter().map(|s| belief.block_marginals(s)).collect();

    let mean = belief.conditional_loss_means(t, &Conditioning::None)?;
    let mean: Vec<f64> = mean.into_iter().map(|x| x.unwrap_or(0.0)).collect();
    let own = belief.conditional_loss_means(t, &Conditioning::InOptimal)?;

    let expected_play_loss: f64 = (0..d).map(|i| p_hat[i] * mean[i]).sum();
    let expected_optimal_loss: f64 = prior
        .scenarios()
        .iter()
        .zip(belief.weights())
        .map(|(s, &w)| w * s.losses().action_loss(actions.support(s.optimal()), t))
        .sum();
    let r = expected_play_loss - expected_optimal_loss;

    let mut rare_term = 0.0;
    let mut common_term = 0.0;
    for i in 0..d {
        if let Some(li) = own[i] {
            rare_term += (p_hat[i] - p[i]) * li;
            if !partition.is_some_and(|part| part.is_rare(i)) {
                common_term += p_hat[i] * (mean[i] - li);
            }
        }
    }

    let entropy = shannon_entropy(p_act.probs());
    let coord_entropy = coordinate_entropy(&p);
    let base_potential: Vec<f64> = opts.potentials.iter().map(|f| f.value(&p)).collect();

    let mut info = 0.0;
    let mut next_entropy = 0.0;
    let mut info_c = 0.0;
    let mut block_info = vec![0.0; opts.blocks.len()];
    let mut r_plus = 0.0;
    let mut drops = vec![0.0; opts.potentials.len()];
    let mut mean_next = vec![0.0; d];
    for b in branches {
        let next = BeliefState::from_weights(std::sync::Arc::clone(prior), t + 1, b.weights.clone())?;
        let q_act = next.action_posterior();
        let q = q_act.marginals(actions);
        info += b.prob * relative_entropy_ext(q_act.probs(), p_act.probs());
        next_entropy += b.prob * shannon_entropy(q_act.probs());
        info_c += b.prob * (0..d).map(|i| kl_bernoulli(q[i], p[i])).sum::<f64>();
        for (k, s) in opts.blocks.iter().enumerate() {
            let qs = next.block_marginals(s);
            block_info[k] += b.prob * (0..d).map(|i| kl_bernoulli(qs[i], block_p[k][i])).sum::<f64>();
        }
        r_plus += (0..d).map(|i| b.loss_mass[i] * (p[i] - q[i]).max(0.0)).sum::<f64>();
        for (k, f) in opts.potentials.iter().enumerate() {
            drops[k] += b.prob * (f.value(&q) - base_potential[k]);
        }
        for i in 0..d {
            mean_next[i] += b.prob * q[i];
        }
    }
    let martingale_gap = (0..d).map(|i| (mean_next[i] - p[i]).abs()).fold(0.0, f64::max);

    let potential_rhs = opts
        .potentials
        .iter()
        .map(|f| {
            (0..d)
                .filter_map(|i| {
                    let li = own[i]?;
                    (p[i] > 0.0 && mean[i] > 0.0).then(|| {
                        let gap = (mean[i] - li).max(0.0);
                        p_hat[i] * p[i] * p[i] * f.d2f(p[i]) * gap * gap / (2.0 * mean[i])
                    })
                })
                .sum()
        })
        .collect();

    let mut blocks = Vec::with_capacity(opts.blocks.len());
    for (k, s) in opts.blocks.iter().enumerate() {
        let cond = belief.conditional_loss_means(t, &Conditioning::InOptimalBlock(s.clone()))?;
        let mut kl_sum = 0.0;
        let mut chi_sum = 0.0;
        for i in 0..d {
            let Some(ls) = cond[i] else { continue };
            let weight = p_hat[i] * block_p[k][i];
            if weight <= 0.0 {
                continue;
            }
            kl_sum += weight * kl_bernoulli(ls, mean[i]);
            if mean[i] > 0.0 {
                let gap = (mean[i] - ls).max(0.0);
                chi_sum += weight * gap * gap / mean[i];
            }
        }
        blocks.push(BlockCheck { info_gain_c: block_info[k], kl_sum, chi_sum });
    }

    let gamma = ratio(r * r, info);
    let (lambda, lambda_c) = if expected_play_loss > RATIO_EPS {
        (ratio(r_plus * r_plus, info * expected_play_loss), ratio(r_plus * r_plus, info_c * expected_play_loss))
    } else {
        (None, None)
    };

    Ok(RoundDiagnostics {
        t,
        r,
        r_plus,
        info_gain: info,
        info_gain_entropy_diff: entropy - next_entropy,
        info_gain_c: info_c,
        blocks,
        gamma,
        lambda,
        lambda_c,
        potential_drops: drops,
        potential_rhs,
        expected_play_loss,
        expected_optimal_loss,
        rare_term,
        common_term,
        entropy,
        coord_entropy,
        martingale_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::ActionSet;
    use crate::graph::Graph;
    use crate::prior::{LossMatrix, Prior, DEFAULT_GRID};
    use std::sync::Arc;

    const LN2: f64 = std::f64::consts::LN_2;

    fn ab_belief() -> BeliefState {
        let a = LossMatrix::from_rows(2, 1, vec![0.0, 1.0]).unwrap();
        let b = LossMatrix::from_rows(2, 1, vec![1.0, 0.0]).unwrap();
        let prior = Prior::new(ActionSet::singletons(2).unwrap(), DEFAULT_GRID, vec![(0.5, a), (0.5, b)]).unwrap();
        BeliefState::initial(Arc::new(prior))
    }

    #[test]
    fn ab_prior_full_feedback() {
        let belief = ab_belief();
        let play = belief.action_posterior();
        let diag = round_diagnostics(&belief, &play, &FeedbackModel::full(), None, &DiagnosticOptions::default()).unwrap();
        assert!((diag.r - 0.5).abs() < 1e-15);
        assert!((diag.info_gain - LN2).abs() < 1e-15);
        let gamma = diag.gamma.unwrap();
        assert!((gamma - 0.25 / LN2).abs() < 1e-12);
        assert!((gamma - 0.3607).abs() < 1e-4);
        assert!(gamma <= 0.5);
        assert!(diag.lambda.unwrap() <= 2.0);
    }

    #[test]
    fn ab_prior_bandit_feedback() {
        let belief = ab_belief();
        let play = belief.action_posterior();
        for model in [FeedbackModel::semi_bandit(), FeedbackModel::graph(vec![Graph::empty(2)]).unwrap()] {
            let (info, info_c, _) = info_gain(&belief, &play, &model, &[]).unwrap();
            assert!((info - LN2).abs() < 1e-15);
            assert!((info_c - 2.0 * LN2).abs() < 1e-15);
            // each arm played alone is fully revealing
            for arm in 0..2 {
                let point = ActionDistribution::point_mass(2, arm);
                assert!((info_gain(&belief, &point, &model, &[]).unwrap().0 - LN2).abs() < 1e-15);
            }
            let diag = round_diagnostics(&belief, &play, &model, None, &DiagnosticOptions::default()).unwrap();
            assert!(diag.gamma.unwrap() <= 2.0);
        }
    }

    #[test]
    fn point_mass_posterior_is_silent() {
        let a = LossMatrix::from_rows(2, 2, vec![0.0, 0.5, 1.0, 0.5]).unwrap();
        let prior = Prior::new(ActionSet::singletons(2).unwrap(), DEFAULT_GRID, vec![(1.0, a)]).unwrap();
        let belief = BeliefState::initial(Arc::new(prior));
        let play = belief.action_posterior();
        let diag = round_diagnostics(&belief, &play, &FeedbackModel::full(), None, &DiagnosticOptions::default()).unwrap();
        assert_eq!(diag.r, 0.0);
        assert_eq!(diag.info_gain, 0.0);
        assert_eq!(diag.gamma, None);
        assert_eq!(diag.lambda, None);
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        let belief = ab_belief();
        let play = ActionDistribution::new(vec![0.3, 0.7]).unwrap();
        let br = branches(&belief, &play, &FeedbackModel::semi_bandit(), DEFAULT_BRANCH_CAP).unwrap();
        assert_eq!(br.len(), 4);
        assert!((br.iter().map(|b| b.prob).sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(branches(&belief, &play, &FeedbackModel::full(), 3), Err(Error::Size(_))));
    }
}
