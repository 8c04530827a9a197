//! Monte Carlo evaluation: independent trials, each with its own random
//! stream derived from the master seed, run in parallel and aggregated in
//! trial order.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::exact::default_blocks;
use super::report::{RoundSummary, TrialRecord};
use crate::actions::ActionSet;
use crate::error::{Error, Result};
use crate::feedback::FeedbackModel;
use crate::infotheory::{round_diagnostics, DiagnosticOptions, PotentialFn, RoundDiagnostics};
use crate::policy::{sample_action, PolicyConfig};
use crate::prior::{optimal_action, BeliefState, LossMatrix, Posterior, Prior};
use crate::scenarios::PriorModel;

/// Normal quantile for a two-sided 95% interval.
const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone)]
pub struct MonteCarloSettings {
    pub feedback: FeedbackModel,
    pub policy: PolicyConfig,
    pub trials: usize,
    pub seed: u64,
    /// Record exact per-round diagnostics along each trajectory. Only
    /// available for explicit finite priors.
    pub diagnostics: bool,
    pub potentials: Vec<PotentialFn>,
}

impl MonteCarloSettings {
    pub fn new(feedback: FeedbackModel, policy: PolicyConfig, trials: usize, seed: u64) -> Self {
        MonteCarloSettings { feedback, policy, trials, seed, diagnostics: false, potentials: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOutcome {
    pub records: Vec<TrialRecord>,
    pub mean_regret: f64,
    pub standard_error: f64,
    pub ci95: (f64, f64),
    pub mean_loss: f64,
    pub mean_lstar: f64,
    pub rounds: Vec<RoundSummary>,
}

struct Trial {
    record: TrialRecord,
    round_losses: Vec<f64>,
    diagnostics: Option<Vec<RoundDiagnostics>>,
}

/// Random stream of trial `i`; independent of scheduling.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ trial as u64)
}

pub fn monte_carlo(model: &PriorModel, settings: &MonteCarloSettings) -> Result<MonteCarloOutcome> {
    if settings.trials == 0 {
        return Err(Error::config("monte-carlo mode needs at least one trial"));
    }
    let horizon = model.horizon();
    settings.feedback.validate(model.d(), horizon)?;
    if settings.diagnostics && model.finite().is_none() {
        return Err(Error::config("per-round diagnostics need an explicit finite prior"));
    }
    let opts = DiagnosticOptions {
        potentials: settings.potentials.clone(),
        blocks: default_blocks(model.actions().m()),
        branch_cap: 0,
    };
    let trials: Vec<Trial> = (0..settings.trials)
        .into_par_iter()
        .map(|i| run_trial(model, settings, &opts, i))
        .collect::<Result<Vec<_>>>()?;

    let n = trials.len() as f64;
    let mean_regret = trials.iter().map(|t| t.record.regret).sum::<f64>() / n;
    let mean_loss = trials.iter().map(|t| t.record.loss).sum::<f64>() / n;
    let mean_lstar = trials.iter().map(|t| t.record.lstar).sum::<f64>() / n;
    let var = if trials.len() > 1 {
        trials.iter().map(|t| (t.record.regret - mean_regret).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let standard_error = (var / n).sqrt();
    let rounds = summarize_rounds(&trials, horizon, settings.potentials.len());
    Ok(MonteCarloOutcome {
        records: trials.into_iter().map(|t| t.record).collect(),
        mean_regret,
        standard_error,
        ci95: (mean_regret - Z95 * standard_error, mean_regret + Z95 * standard_error),
        mean_loss,
        mean_lstar,
        rounds,
    })
}

fn run_trial(model: &PriorModel, settings: &MonteCarloSettings, opts: &DiagnosticOptions, i: usize) -> Result<Trial> {
    let mut rng = trial_rng(settings.seed, i);
    let draw = model.sample(&mut rng);
    let actions = model.actions();
    let lstar = draw.losses.action_total(actions.support(optimal_action(&draw.losses, &actions)?));
    let (round_losses, diagnostics) = match model {
        PriorModel::Finite(prior) => {
            let start = BeliefState::initial(Arc::clone(prior));
            if settings.diagnostics {
                let (l, d) = simulate_with_diagnostics(prior, start, &draw.losses, settings, opts, &mut rng)?;
                (l, Some(d))
            } else {
                (simulate(start, &draw.losses, &actions, settings, &mut rng)?, None)
            }
        }
        PriorModel::TDependent(m) => (simulate(m.initial_belief(), &draw.losses, &actions, settings, &mut rng)?, None),
        PriorModel::ContextualLb(m) => (simulate(m.initial_belief(), &draw.losses, &actions, settings, &mut rng)?, None),
    };
    let loss: f64 = round_losses.iter().sum();
    Ok(Trial {
        record: TrialRecord { trial: i, scenario: draw.scenario, loss, lstar, regret: loss - lstar },
        round_losses,
        diagnostics,
    })
}

/// Play one trajectory; returns the loss paid in each round.
pub fn simulate<P: Posterior, R: rand::Rng + ?Sized>(
    start: P,
    losses: &LossMatrix,
    actions: &ActionSet,
    settings: &MonteCarloSettings,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let horizon = losses.horizon();
    let mut belief = start;
    let mut paid = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let (play, _) = settings.policy.play(&belief.action_posterior(), actions)?;
        let a = sample_action(&play, rng);
        paid.push(losses.action_loss(actions.support(a), t));
        if t + 1 < horizon {
            let obs = settings.feedback.observe(t, actions.support(a), losses)?;
            belief = belief.update(a, &obs)?;
        }
    }
    Ok(paid)
}

fn simulate_with_diagnostics<R: rand::Rng + ?Sized>(
    prior: &Prior,
    start: BeliefState,
    losses: &LossMatrix,
    settings: &MonteCarloSettings,
    opts: &DiagnosticOptions,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<RoundDiagnostics>)> {
    let actions = prior.actions();
    let horizon = losses.horizon();
    let mut belief = start;
    let mut paid = Vec::with_capacity(horizon);
    let mut diags = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let (play, partition) = settings.policy.play(&belief.action_posterior(), actions)?;
        diags.push(round_diagnostics(&belief, &play, &settings.feedback, partition.as_ref(), opts)?);
        let a = sample_action(&play, rng);
        paid.push(losses.action_loss(actions.support(a), t));
        if t + 1 < horizon {
            let obs = settings.feedback.observe(t, actions.support(a), losses)?;
            belief = belief.posterior_update(a, &obs)?;
        }
    }
    Ok((paid, diags))
}

fn summarize_rounds(trials: &[Trial], horizon: usize, n_potentials: usize) -> Vec<RoundSummary> {
    let n = trials.len() as f64;
    let with_diag = trials.first().is_some_and(|t| t.diagnostics.is_some());
    (0..horizon)
        .map(|t| {
            let mut row = RoundSummary {
                t,
                expected_play_loss: trials.iter().map(|tr| tr.round_losses[t]).sum::<f64>() / n,
                potential_drops: vec![None; n_potentials],
                potential_rhs: vec![None; n_potentials],
                support: trials.len(),
                ..Default::default()
            };
            if with_diag {
                let ds: Vec<&RoundDiagnostics> =
                    trials.iter().filter_map(|tr| tr.diagnostics.as_ref().map(|d| &d[t])).collect();
                let mean = |f: &dyn Fn(&RoundDiagnostics) -> f64| Some(ds.iter().map(|d| f(d)).sum::<f64>() / n);
                let max = |f: &dyn Fn(&RoundDiagnostics) -> Option<f64>| {
                    ds.iter().filter_map(|d| f(d)).fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))))
                };
                row.r = mean(&|d| d.r);
                row.r_plus = mean(&|d| d.r_plus);
                row.info_gain = mean(&|d| d.info_gain);
                row.info_gain_c = mean(&|d| d.info_gain_c);
                row.gamma = max(&|d| d.gamma);
                row.lambda = max(&|d| d.lambda);
                row.lambda_c = max(&|d| d.lambda_c);
                for k in 0..n_potentials {
                    row.potential_drops[k] = mean(&|d| d.potential_drops[k]);
                    row.potential_rhs[k] = mean(&|d| d.potential_rhs[k]);
                }
                row.expected_optimal_loss = mean(&|d| d.expected_optimal_loss);
                row.rare_term = mean(&|d| d.rare_term);
                row.common_term = mean(&|d| d.common_term);
                row.entropy = mean(&|d| d.entropy);
                row.coord_entropy = mean(&|d| d.coord_entropy);
            }
            row
        })
        .collect()
}
