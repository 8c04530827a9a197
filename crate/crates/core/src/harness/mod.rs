//! Evaluators and reporting: the exact evaluator, the Monte Carlo runner,
//! the bound table and run configuration.

pub mod bounds;
pub mod config;
pub mod exact;
pub mod monte_carlo;
pub mod report;

pub use bounds::{bound_report, BoundInputs, BoundRow, BoundStatus, BOUND_TOL};
pub use config::{parse_potential, ResolvedRun, RunConfig, DEFAULT_OUT_DIR, OUT_DIR_ENV};
pub use exact::{default_blocks, exact_evaluate, ExactOutcome, ExactSettings, DEFAULT_NODE_CAP, INVARIANT_TOL};
pub use monte_carlo::{monte_carlo, simulate, trial_rng, MonteCarloOutcome, MonteCarloSettings};
pub use report::{InvariantViolation, Mode, RoundSummary, RunReport, TrialRecord};

use std::sync::Arc;

use crate::error::Result;
use crate::infotheory::{coordinate_entropy, shannon_entropy, tsallis_entropy};
use crate::policy::PolicyKind;
use crate::prior::{ActionDistribution, BeliefState, Posterior};
use crate::scenarios::PriorModel;

/// Run a configuration end to end.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let resolved = config.resolve()?;
    match config.mode {
        Mode::Exact => {
            let mut settings = ExactSettings::new(resolved.feedback.clone(), resolved.policy);
            settings.potentials = resolved.potentials.clone();
            settings.regret_distribution = config.regret_distribution;
            run_exact(&resolved, &settings)
        }
        Mode::MonteCarlo => {
            let mut settings =
                MonteCarloSettings::new(resolved.feedback.clone(), resolved.policy, config.trials(), config.seed);
            settings.diagnostics = config.diagnostics;
            settings.potentials = resolved.potentials.clone();
            run_monte_carlo(&resolved, &settings)
        }
    }
}

fn base_report(run: &ResolvedRun, mode: Mode) -> RunReport {
    let actions = run.model.actions();
    RunReport {
        mode,
        prior: run.description.clone(),
        d: run.model.d(),
        m: actions.m(),
        horizon: run.model.horizon(),
        actions: actions.len(),
        scenarios: run.model.finite().map(|p| p.len()),
        feedback: run.feedback.kind().name().to_string(),
        policy: run.policy.kind.name().to_string(),
        gamma: (run.policy.kind == PolicyKind::ThresholdedTs).then_some(run.policy.gamma),
        seed: None,
        trials: None,
        expected_regret: 0.0,
        standard_error: None,
        ci95: None,
        expected_loss: 0.0,
        expected_lstar: 0.0,
        lstar_max: run.model.lstar_max(),
        entropy: None,
        coord_entropy: None,
        tsallis_half: None,
        potentials: run.potentials.iter().map(|p| p.name().to_string()).collect(),
        rounds: Vec::new(),
        bounds: Vec::new(),
        violations: Vec::new(),
        violation_count: 0,
        regret_distribution: None,
        trial_records: Vec::new(),
    }
}

fn bound_inputs(r: &RunReport, run: &ResolvedRun, alpha_sum: Option<f64>, common_sum: Option<f64>) -> BoundInputs {
    BoundInputs {
        exact: r.mode == Mode::Exact,
        feedback: run.feedback.kind(),
        policy: run.policy.kind,
        gamma: r.gamma,
        d: r.d,
        m: r.m,
        horizon: r.horizon,
        expected_regret: r.expected_regret,
        expected_lstar: r.expected_lstar,
        lstar_max: r.lstar_max,
        entropy: r.entropy,
        coord_entropy: r.coord_entropy,
        tsallis_half: r.tsallis_half,
        alpha_sum,
        common_sum,
    }
}

/// Exact evaluation of a resolved run; lazy constructions are expanded.
pub fn run_exact(run: &ResolvedRun, settings: &ExactSettings) -> Result<RunReport> {
    let prior = run.model.exact_prior()?;
    let out = exact_evaluate(&prior, settings)?;
    let mut report = base_report(run, Mode::Exact);
    report.scenarios = Some(prior.len());
    report.lstar_max = prior.lstar_max();
    report.expected_regret = out.expected_regret;
    report.expected_loss = out.expected_loss;
    report.expected_lstar = out.expected_lstar;
    report.entropy = Some(out.entropy);
    report.coord_entropy = Some(out.coord_entropy);
    report.tsallis_half = Some(out.tsallis_half);
    report.rounds = out.rounds;
    report.violations = out.violations;
    report.violation_count = out.violation_count;
    report.regret_distribution = out.regret_distribution;
    let inputs = bound_inputs(&report, run, out.alpha_sum, Some(out.common_sum));
    report.bounds = bound_report(&inputs);
    Ok(report)
}

/// Monte Carlo evaluation of a resolved run.
pub fn run_monte_carlo(run: &ResolvedRun, settings: &MonteCarloSettings) -> Result<RunReport> {
    let out = monte_carlo(&run.model, settings)?;
    let mut report = base_report(run, Mode::MonteCarlo);
    report.seed = Some(settings.seed);
    report.trials = Some(settings.trials);
    report.expected_regret = out.mean_regret;
    report.standard_error = Some(out.standard_error);
    report.ci95 = Some(out.ci95);
    report.expected_loss = out.mean_loss;
    report.expected_lstar = out.mean_lstar;
    let p1 = initial_posterior(&run.model);
    report.entropy = Some(shannon_entropy(p1.probs()));
    report.coord_entropy = Some(coordinate_entropy(&p1.marginals(&run.model.actions())));
    report.tsallis_half = tsallis_entropy(p1.probs(), 0.5).ok();
    report.rounds = out.rounds;
    report.trial_records = out.records;
    let inputs = bound_inputs(&report, run, None, None);
    report.bounds = bound_report(&inputs);
    Ok(report)
}

fn initial_posterior(model: &PriorModel) -> ActionDistribution {
    match model {
        PriorModel::Finite(p) => BeliefState::initial(Arc::clone(p)).action_posterior(),
        PriorModel::TDependent(m) => m.initial_belief().action_posterior(),
        PriorModel::ContextualLb(m) => m.initial_belief().action_posterior(),
    }
}
