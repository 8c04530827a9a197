//! Exact expectation of the Bayesian game: breadth-first enumeration of every
//! reachable posterior, with beliefs that coincide merged, and every
//! per-round inequality checked at every reachable belief.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;

use super::report::{InvariantViolation, RoundSummary, MAX_STORED_VIOLATIONS};
use crate::error::{Error, Result};
use crate::feedback::{FeedbackKind, FeedbackModel};
use crate::infotheory::{
    branches, diagnostics_from_branches, tsallis_entropy, DiagnosticOptions, PotentialFn, RoundDiagnostics,
    DEFAULT_BRANCH_CAP,
};
use crate::policy::{rank_dyadic_partition, Partition, PolicyConfig, PolicyKind};
use crate::prior::{ActionDistribution, BeliefState, Prior};

/// Slack for per-round inequalities.
pub const INVARIANT_TOL: f64 = 1e-9;
/// Default cap on the number of beliefs expanded over the whole run.
pub const DEFAULT_NODE_CAP: usize = 10_000_000;
/// Quantization used to recognise equal beliefs.
const FINGERPRINT_SCALE: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct ExactSettings {
    pub feedback: FeedbackModel,
    pub policy: PolicyConfig,
    pub potentials: Vec<PotentialFn>,
    /// Cap on beliefs expanded; 0 means [`DEFAULT_NODE_CAP`].
    pub node_cap: usize,
    /// Cap on `(action, scenario)` pairs per belief; 0 means the default.
    pub branch_cap: usize,
    /// Also compute the exact law of the realized regret. Beliefs reached
    /// with different loss histories are then kept apart.
    pub regret_distribution: bool,
}

impl ExactSettings {
    pub fn new(feedback: FeedbackModel, policy: PolicyConfig) -> Self {
        ExactSettings { feedback, policy, potentials: Vec::new(), node_cap: 0, branch_cap: 0, regret_distribution: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactOutcome {
    pub expected_regret: f64,
    pub expected_loss: f64,
    pub expected_lstar: f64,
    pub rounds: Vec<RoundSummary>,
    pub entropy: f64,
    pub coord_entropy: f64,
    pub tsallis_half: f64,
    /// `sum_t alpha(G_t)` when every graph is undirected and small enough.
    pub alpha_sum: Option<f64>,
    /// `E[sum_t common_term_t]`.
    pub common_sum: f64,
    pub regret_distribution: Option<Vec<(f64, f64)>>,
    pub violations: Vec<InvariantViolation>,
    pub violation_count: usize,
    /// Beliefs expanded over the run.
    pub nodes: usize,
}

struct Node {
    weights: Vec<f64>,
    reach: f64,
    /// Player's accumulated loss per scenario, when tracking the regret law.
    acc: Option<Vec<f64>>,
}

struct Expanded {
    diag: RoundDiagnostics,
    play: ActionDistribution,
    partition: Option<Partition>,
    posterior_marginals: Vec<f64>,
    play_marginals: Vec<f64>,
    /// Play probability on actions meeting the rare set.
    rare_action_mass: f64,
    children: Vec<(usize, f64, Vec<f64>)>,
}

#[derive(Default)]
struct Checker {
    stored: Vec<InvariantViolation>,
    count: usize,
}

impl Checker {
    /// Record a violation unless `lhs <= rhs + tol`.
    fn le(&mut self, t: Option<usize>, check: &str, lhs: f64, rhs: f64, tol: f64) {
        if lhs <= rhs + tol {
            return;
        }
        self.count += 1;
        if self.stored.len() < MAX_STORED_VIOLATIONS {
            self.stored.push(InvariantViolation { t, check: check.to_string(), lhs, rhs });
        }
    }
}

/// Which per-belief inequalities the setting is entitled to.
struct Applicable {
    expert: bool,
    full: bool,
    bandit: bool,
    graph_alpha: Vec<Option<f64>>,
    potentials: Vec<bool>,
    thresholded: Option<f64>,
}

fn fingerprint(weights: &[f64], acc: Option<&[f64]>, grid: f64) -> Vec<i64> {
    let mut key: Vec<i64> = weights.iter().map(|w| (w * FINGERPRINT_SCALE).round() as i64).collect();
    if let Some(acc) = acc {
        key.extend(acc.iter().map(|x| (x * grid).round() as i64));
    }
    key
}

/// Rank blocks the per-block checks are evaluated on: the dyadic blocks,
/// plus the whole optimal action when it has several arms.
pub fn default_blocks(m: usize) -> Vec<Vec<usize>> {
    let mut blocks = rank_dyadic_partition(m);
    if m > 1 {
        blocks.push((1..=m).collect());
    }
    blocks
}

pub fn exact_evaluate(prior: &Arc<Prior>, settings: &ExactSettings) -> Result<ExactOutcome> {
    let horizon = prior.horizon();
    let d = prior.d();
    let m = prior.m();
    let actions = prior.actions();
    settings.feedback.validate(d, horizon)?;
    let node_cap = if settings.node_cap == 0 { DEFAULT_NODE_CAP } else { settings.node_cap };
    let opts = DiagnosticOptions {
        potentials: settings.potentials.clone(),
        blocks: default_blocks(m),
        branch_cap: if settings.branch_cap == 0 { DEFAULT_BRANCH_CAP } else { settings.branch_cap },
    };
    let ts = settings.policy.kind == PolicyKind::Ts;
    let kind = settings.feedback.kind();
    let undirected_graphs = matches!(kind, FeedbackKind::Graph | FeedbackKind::Contextual);
    let graph_alpha: Vec<Option<f64>> = (0..horizon)
        .map(|t| {
            let g = settings.feedback.graph_at(t).filter(|_| undirected_graphs)?;
            if g.is_directed() {
                return None;
            }
            g.independence_number().ok().map(|a| a as f64)
        })
        .collect();
    let alpha_sum = (undirected_graphs && graph_alpha.iter().all(Option::is_some))
        .then(|| graph_alpha.iter().map(|a| a.unwrap_or(0.0)).sum());
    let app = Applicable {
        expert: ts && kind == FeedbackKind::Full && m == 1,
        full: ts && kind == FeedbackKind::Full,
        bandit: ts && kind == FeedbackKind::SemiBandit && m == 1,
        graph_alpha: if ts { graph_alpha } else { vec![None; horizon] },
        potentials: settings.potentials.iter().map(|f| f.admissible() && m == 1).collect(),
        thresholded: (settings.policy.kind == PolicyKind::ThresholdedTs).then_some(settings.policy.gamma),
    };

    let grid = prior.grid() as f64;
    let root = BeliefState::initial(Arc::clone(prior));
    let p1 = root.action_posterior();
    let tsallis_half = tsallis_entropy(p1.probs(), 0.5)?;
    let mut frontier = vec![Node {
        weights: root.weights().to_vec(),
        reach: 1.0,
        acc: settings.regret_distribution.then(|| vec![0.0; prior.len()]),
    }];
    let mut checker = Checker::default();
    let mut rounds = Vec::with_capacity(horizon);
    let mut nodes = 0usize;
    let mut law: BTreeMap<i64, f64> = BTreeMap::new();

    for t in 0..horizon {
        nodes += frontier.len();
        if nodes > node_cap {
            return Err(Error::size(format!(
                "exact evaluation exceeds {node_cap} beliefs by round {}; use monte-carlo mode",
                t + 1
            )));
        }
        let expanded: Vec<Expanded> = frontier
            .par_iter()
            .map(|node| expand(prior, t, node, settings, &opts))
            .collect::<Result<Vec<_>>>()?;

        let mut summary = RoundSummary {
            t,
            r: Some(0.0),
            r_plus: Some(0.0),
            info_gain: Some(0.0),
            info_gain_c: Some(0.0),
            potential_drops: vec![Some(0.0); opts.potentials.len()],
            potential_rhs: vec![Some(0.0); opts.potentials.len()],
            expected_optimal_loss: Some(0.0),
            rare_term: Some(0.0),
            common_term: Some(0.0),
            entropy: Some(0.0),
            coord_entropy: Some(0.0),
            support: frontier.len(),
            ..Default::default()
        };
        let mut next: Vec<Node> = Vec::new();
        let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
        for (node, ex) in frontier.iter().zip(&expanded) {
            accumulate(&mut summary, node.reach, &ex.diag);
            check_node(&mut checker, &app, t, d, ex);
            if t + 1 == horizon {
                if let Some(acc) = &node.acc {
                    add_final_losses(&mut law, prior, t, node, acc, &ex.play);
                }
                continue;
            }
            for (action, prob, weights) in &ex.children {
                let acc = node.acc.as_ref().map(|acc| {
                    let support = actions.support(*action);
                    acc.iter()
                        .enumerate()
                        .map(|(s, &a)| {
                            if weights[s] > 0.0 {
                                a + prior.scenarios()[s].losses().action_loss(support, t)
                            } else {
                                0.0
                            }
                        })
                        .collect::<Vec<f64>>()
                });
                let key = fingerprint(weights, acc.as_deref(), grid);
                let reach = node.reach * prob;
                match index.get(&key) {
                    Some(&k) => next[k].reach += reach,
                    None => {
                        index.insert(key, next.len());
                        next.push(Node { weights: weights.clone(), reach, acc });
                    }
                }
            }
        }
        rounds.push(summary);
        if t + 1 == horizon {
            break;
        }
        frontier = next;
    }

    let regret_distribution =
        settings.regret_distribution.then(|| law.into_iter().map(|(k, p)| (k as f64 / grid, p)).collect());

    let expected_loss: f64 = rounds.iter().map(|r| r.expected_play_loss).sum();
    let expected_lstar = prior.expected_lstar();
    let expected_regret = expected_loss - expected_lstar;
    let sum_r: f64 = rounds.iter().filter_map(|r| r.r).sum();
    let sum_i: f64 = rounds.iter().filter_map(|r| r.info_gain).sum();
    let sum_ic: f64 = rounds.iter().filter_map(|r| r.info_gain_c).sum();
    let common_sum: f64 = rounds.iter().filter_map(|r| r.common_term).sum();
    let entropy = rounds.first().and_then(|r| r.entropy).unwrap_or(0.0);
    let coord_entropy = rounds.first().and_then(|r| r.coord_entropy).unwrap_or(0.0);
    checker.le(None, "regret-identity", (expected_regret - sum_r).abs(), 0.0, INVARIANT_TOL);
    checker.le(None, "information-budget", sum_i, entropy, INVARIANT_TOL);
    checker.le(None, "coordinate-information-budget", sum_ic, coord_entropy, INVARIANT_TOL);

    Ok(ExactOutcome {
        expected_regret,
        expected_loss,
        expected_lstar,
        rounds,
        entropy,
        coord_entropy,
        tsallis_half,
        alpha_sum,
        common_sum,
        regret_distribution,
        violations: checker.stored,
        violation_count: checker.count,
        nodes,
    })
}

fn expand(prior: &Arc<Prior>, t: usize, node: &Node, settings: &ExactSettings, opts: &DiagnosticOptions) -> Result<Expanded> {
    let belief = BeliefState::from_weights(Arc::clone(prior), t, node.weights.clone())?;
    let posterior = belief.action_posterior();
    let (play, partition) = settings.policy.play(&posterior, prior.actions())?;
    let br = branches(&belief, &play, &settings.feedback, opts.cap())?;
    let diag = diagnostics_from_branches(&belief, &play, partition.as_ref(), opts, &br)?;
    let children = br.into_iter().filter(|b| b.prob > 0.0).map(|b| (b.action, b.prob, b.weights)).collect();
    let actions = prior.actions();
    let rare_action_mass = partition.as_ref().map_or(0.0, |part| {
        (0..actions.len())
            .filter(|&a| actions.support(a).iter().any(|&i| part.is_rare(i)))
            .map(|a| play.prob(a))
            .sum()
    });
    Ok(Expanded {
        diag,
        posterior_marginals: posterior.marginals(actions),
        play_marginals: play.marginals(actions),
        rare_action_mass,
        play,
        partition,
        children,
    })
}

/// Final-round contribution to the regret law: every (action, scenario)
/// pair of a leaf belief.
fn add_final_losses(law: &mut BTreeMap<i64, f64>, prior: &Prior, t: usize, node: &Node, acc: &[f64], play: &ActionDistribution) {
    let grid = prior.grid() as f64;
    for (a, &q) in play.probs().iter().enumerate() {
        if q <= 0.0 {
            continue;
        }
        let support = prior.actions().support(a);
        for (s, &w) in node.weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let sc = &prior.scenarios()[s];
            let regret = acc[s] + sc.losses().action_loss(support, t) - sc.lstar();
            *law.entry((regret * grid).round() as i64).or_insert(0.0) += node.reach * w * q;
        }
    }
}

fn add(slot: &mut Option<f64>, x: f64) {
    if let Some(v) = slot {
        *v += x;
    }
}

fn max_opt(slot: &mut Option<f64>, x: Option<f64>) {
    if let Some(x) = x {
        *slot = Some(slot.map_or(x, |v| v.max(x)));
    }
}

fn accumulate(s: &mut RoundSummary, w: f64, diag: &RoundDiagnostics) {
    add(&mut s.r, w * diag.r);
    add(&mut s.r_plus, w * diag.r_plus);
    add(&mut s.info_gain, w * diag.info_gain);
    add(&mut s.info_gain_c, w * diag.info_gain_c);
    max_opt(&mut s.gamma, diag.gamma);
    max_opt(&mut s.lambda, diag.lambda);
    max_opt(&mut s.lambda_c, diag.lambda_c);
    for (k, &x) in diag.potential_drops.iter().enumerate() {
        add(&mut s.potential_drops[k], w * x);
    }
    for (k, &x) in diag.potential_rhs.iter().enumerate() {
        add(&mut s.potential_rhs[k], w * x);
    }
    s.expected_play_loss += w * diag.expected_play_loss;
    add(&mut s.expected_optimal_loss, w * diag.expected_optimal_loss);
    add(&mut s.rare_term, w * diag.rare_term);
    add(&mut s.common_term, w * diag.common_term);
    add(&mut s.entropy, w * diag.entropy);
    add(&mut s.coord_entropy, w * diag.coord_entropy);
}

fn check_node(c: &mut Checker, app: &Applicable, t: usize, d: usize, ex: &Expanded) {
    let diag = &ex.diag;
    let at = Some(t);
    let tol = INVARIANT_TOL;
    c.le(at, "info-gain-entropy-identity", (diag.info_gain - diag.info_gain_entropy_diff).abs(), 0.0, tol);
    c.le(at, "posterior-martingale", diag.martingale_gap, 0.0, tol);
    c.le(at, "decomposition-identity", (diag.rare_term + diag.common_term - diag.r).abs(), 0.0, tol);
    if app.expert {
        c.le(at, "info-ratio-expert", diag.gamma.unwrap_or(0.0), 0.5, tol);
        c.le(at, "scale-sensitive-ratio-expert", diag.lambda.unwrap_or(0.0), 2.0, tol);
    }
    if app.full {
        c.le(at, "coordinate-ratio-full", diag.lambda_c.unwrap_or(0.0), 2.0, tol);
    }
    if app.bandit {
        c.le(at, "info-ratio-bandit", diag.gamma.unwrap_or(0.0), d as f64, tol);
    }
    if let Some(alpha) = app.graph_alpha[t] {
        c.le(at, "graph-info-ratio", diag.r * diag.r, alpha * diag.info_gain_c, tol);
    }
    for b in &diag.blocks {
        c.le(at, "partial-observation-kl", b.kl_sum, b.info_gain_c, tol);
        c.le(at, "partial-observation-chi", b.chi_sum, 2.0 * b.info_gain_c, tol);
    }
    for (k, &on) in app.potentials.iter().enumerate() {
        if on {
            c.le(at, "potential-drop", diag.potential_rhs[k], diag.potential_drops[k], tol);
        }
    }
    if let (Some(gamma), Some(_)) = (app.thresholded, ex.partition.as_ref()) {
        let probs = ex.play.probs();
        c.le(at, "play-normalized", (probs.iter().sum::<f64>() - 1.0).abs(), 0.0, tol);
        c.le(at, "rare-free-play", ex.rare_action_mass, 0.0, 0.0);
        for (i, &ph) in ex.play_marginals.iter().enumerate() {
            c.le(at, "play-marginal-cap", ph, ex.posterior_marginals[i] / (1.0 - gamma * d as f64), tol);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::ActionSet;
    use crate::prior::{LossMatrix, DEFAULT_GRID};
    use crate::scenarios::gen_nohighprob;

    fn ab_prior() -> Arc<Prior> {
        let a = LossMatrix::from_rows(2, 1, vec![0.0, 1.0]).unwrap();
        let b = LossMatrix::from_rows(2, 1, vec![1.0, 0.0]).unwrap();
        Arc::new(Prior::new(ActionSet::singletons(2).unwrap(), DEFAULT_GRID, vec![(0.5, a), (0.5, b)]).unwrap())
    }

    #[test]
    fn two_experts_one_round() {
        let out = exact_evaluate(&ab_prior(), &ExactSettings::new(FeedbackModel::full(), PolicyConfig::ts())).unwrap();
        assert!((out.expected_regret - 0.5).abs() < 1e-12);
        assert!((out.entropy - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(out.violation_count, 0);
    }

    #[test]
    fn point_mass_has_no_regret() {
        let l = LossMatrix::from_rows(3, 3, vec![0.2, 0.5, 0.1, 0.9, 0.0, 0.3, 0.4, 0.4, 0.4]).unwrap();
        let prior = Arc::new(Prior::new(ActionSet::singletons(3).unwrap(), DEFAULT_GRID, vec![(1.0, l)]).unwrap());
        for fb in [FeedbackModel::full(), FeedbackModel::semi_bandit()] {
            let out = exact_evaluate(&prior, &ExactSettings::new(fb, PolicyConfig::ts())).unwrap();
            assert!(out.expected_regret.abs() < 1e-12);
        }
    }

    #[test]
    fn nohighprob_regret_law() {
        let prior = Arc::new(gen_nohighprob(6).unwrap());
        let mut settings = ExactSettings::new(FeedbackModel::full(), PolicyConfig::ts());
        settings.regret_distribution = true;
        let out = exact_evaluate(&prior, &settings).unwrap();
        let law = out.regret_distribution.unwrap();
        let total: f64 = law.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mean: f64 = law.iter().map(|(v, p)| v * p).sum();
        assert!((mean - out.expected_regret).abs() < 1e-12);
        // rounds 1-2 cost 1/2 each in both scenarios; round 3 costs 1/2 in
        // the second one, whose optimal arm has loss 2
        assert!((out.expected_regret - 0.25).abs() < 1e-12);
        // regret >= 1: 3/4 of the first scenario, 1/8 of the second
        let tail: f64 = law.iter().filter(|(v, _)| *v >= 1.0).map(|(_, p)| p).sum();
        assert!((tail - 0.4375).abs() < 1e-12);
        assert_eq!(out.violation_count, 0);
        let plain = exact_evaluate(&prior, &ExactSettings::new(FeedbackModel::full(), PolicyConfig::ts())).unwrap();
        assert!((plain.expected_regret - out.expected_regret).abs() < 1e-12);
        assert!(plain.nodes <= out.nodes);
    }

    #[test]
    fn node_cap_is_a_size_error() {
        let prior = Arc::new(gen_nohighprob(6).unwrap());
        let mut settings = ExactSettings::new(FeedbackModel::semi_bandit(), PolicyConfig::ts());
        settings.node_cap = 2;
        assert!(matches!(exact_evaluate(&prior, &settings), Err(Error::Size(_))));
    }
}
