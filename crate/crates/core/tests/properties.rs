mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_expert_prior, random_prior};
use tslab_core::harness::{exact_evaluate, ExactSettings};
use tslab_core::policy::{rare_common_partition, refine_partition, thresholded_distribution};
use tslab_core::scenarios::{gen_contextual_lb, gen_interval_expert, gen_nohighprob};
use tslab_core::{make_all_msubsets, BeliefState, FeedbackModel, Graph, PolicyConfig, Prior};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_feedback<R: Rng>(rng: &mut R, d: usize, horizon: usize) -> FeedbackModel {
    match rng.gen_range(0..3) {
        0 => FeedbackModel::full(),
        1 => FeedbackModel::semi_bandit(),
        _ => {
            let graphs = (0..horizon)
                .map(|_| {
                    let edges: Vec<(usize, usize)> =
                        (0..d).flat_map(|u| (u + 1..d).map(move |v| (u, v))).filter(|_| rng.gen_bool(0.4)).collect();
                    Graph::with_self_loops(d, &edges, false).unwrap()
                })
                .collect();
            FeedbackModel::graph(graphs).unwrap()
        }
    }
}

fn random_combinatorial<R: Rng>(rng: &mut R) -> Arc<Prior> {
    let d = rng.gen_range(2..=5);
    let m = rng.gen_range(1..d);
    let horizon = rng.gen_range(1..=3);
    random_prior(rng, make_all_msubsets(d, m, 100).unwrap(), horizon, 8)
}

/// `sum_{a,s} P[a] w_s marginals(update(a, obs(a, s)))`.
fn expected_next_marginals(belief: &BeliefState, feedback: &FeedbackModel) -> Vec<f64> {
    let prior = belief.prior();
    let actions = prior.actions();
    let play = belief.action_posterior();
    let mut acc = vec![0.0; prior.d()];
    for (s, &w) in belief.weights().iter().enumerate() {
        for a in 0..actions.len() {
            let pa = play.prob(a);
            if w == 0.0 || pa == 0.0 {
                continue;
            }
            let obs = feedback.observe(belief.round(), actions.support(a), prior.scenarios()[s].losses()).unwrap();
            let next = belief.posterior_update(a, &obs).unwrap();
            for (x, y) in acc.iter_mut().zip(next.arm_marginals()) {
                *x += w * pa * y;
            }
        }
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn arm_marginals_are_a_martingale(seed in any::<u64>()) {
        let mut r = rng(seed);
        let prior = random_combinatorial(&mut r);
        let feedback = random_feedback(&mut r, prior.d(), prior.horizon());
        let mut belief = BeliefState::initial(Arc::clone(&prior));
        loop {
            let now = belief.arm_marginals();
            let next = expected_next_marginals(&belief, &feedback);
            for (a, b) in now.iter().zip(&next) {
                prop_assert!((a - b).abs() <= 1e-9, "{now:?} vs {next:?}");
            }
            if belief.round() + 1 >= prior.horizon() {
                break;
            }
            // follow one random path
            let actions = prior.actions();
            let play = belief.action_posterior();
            let a = (0..actions.len()).find(|&a| play.prob(a) > 0.0).unwrap();
            let s = (0..prior.len()).find(|&s| belief.weights()[s] > 0.0).unwrap();
            let obs = feedback.observe(belief.round(), actions.support(a), prior.scenarios()[s].losses()).unwrap();
            belief = belief.posterior_update(a, &obs).unwrap();
        }
    }

    #[test]
    fn arm_marginals_sum_to_m(seed in any::<u64>()) {
        let prior = random_combinatorial(&mut rng(seed));
        let total: f64 = BeliefState::initial(Arc::clone(&prior)).arm_marginals().iter().sum();
        prop_assert!((total - prior.m() as f64).abs() <= 1e-9);
    }

    #[test]
    fn initial_action_posterior_is_induced_by_weights(seed in any::<u64>()) {
        let prior = random_combinatorial(&mut rng(seed));
        let post = BeliefState::initial(Arc::clone(&prior)).action_posterior();
        let mut want = vec![0.0; prior.actions().len()];
        for s in prior.scenarios() {
            want[s.optimal()] += s.weight();
        }
        for (a, b) in post.probs().iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn neighborhood_ratio_sum_is_at_most_independence_number(
        seed in any::<u64>(), d in 1usize..=10, density in 0.0f64..1.0,
    ) {
        let mut r = rng(seed);
        let edges: Vec<(usize, usize)> =
            (0..d).flat_map(|u| (u + 1..d).map(move |v| (u, v))).filter(|_| r.gen_bool(density)).collect();
        let g = Graph::with_self_loops(d, &edges, false).unwrap();
        let raw: Vec<f64> = (0..d).map(|_| r.gen::<f64>() + 1e-6).collect();
        let total: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|x| x / total).collect();
        prop_assert!(g.neighborhood_ratio_sum(&pi) <= g.independence_number().unwrap() as f64 + 1e-9);
    }

    #[test]
    fn thresholding_removes_rare_actions(seed in any::<u64>(), frac in 0.01f64..0.99) {
        let prior = random_combinatorial(&mut rng(seed));
        let actions = prior.actions();
        let gamma = frac / prior.d() as f64;
        let post = BeliefState::initial(Arc::clone(&prior)).action_posterior();
        let part = rare_common_partition(&post, actions, gamma);
        prop_assert_eq!(&refine_partition(&post, actions, gamma, part.clone()), &part);
        let play = thresholded_distribution(&post, actions, &part).unwrap();
        prop_assert!((play.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for a in 0..actions.len() {
            if actions.support(a).iter().any(|&i| part.is_rare(i)) {
                prop_assert_eq!(play.prob(a), 0.0);
            }
        }
        let (p, ph) = (post.marginals(actions), play.marginals(actions));
        let cap = 1.0 / (1.0 - gamma * prior.d() as f64);
        for i in 0..prior.d() {
            prop_assert!(ph[i] <= p[i] * cap + 1e-9);
        }
    }

    #[test]
    fn tiny_gamma_recovers_ts(seed in any::<u64>()) {
        let prior = random_combinatorial(&mut rng(seed));
        let post = BeliefState::initial(Arc::clone(&prior)).action_posterior();
        let policy = PolicyConfig::thresholded(1e-300, prior.d()).unwrap();
        let (play, _) = policy.play(&post, prior.actions()).unwrap();
        // marginals below gamma are only possible for arms that are never optimal
        for (a, b) in play.probs().iter().zip(post.probs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_regret_identities(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = r.gen_range(2..=4);
        let horizon = r.gen_range(1..=3);
        let prior = random_expert_prior(&mut r, d, horizon, 6);
        let feedback = random_feedback(&mut r, d, horizon);
        let out = exact_evaluate(&prior, &ExactSettings::new(feedback, PolicyConfig::ts())).unwrap();
        let sum_r: f64 = out.rounds.iter().map(|x| x.r.unwrap_or(0.0)).sum();
        prop_assert!((out.expected_regret - sum_r).abs() <= 1e-9);
        prop_assert!((out.expected_regret - (out.expected_loss - out.expected_lstar)).abs() <= 1e-9);
    }

    #[test]
    fn generators_are_deterministic(seed in any::<u64>()) {
        let a = gen_interval_expert(4, 2, 3, 5, seed).unwrap();
        let b = gen_interval_expert(4, 2, 3, 5, seed).unwrap();
        prop_assert_eq!(a.weights(), b.weights());
        for (x, y) in a.scenarios().iter().zip(b.scenarios()) {
            prop_assert_eq!(x.losses(), y.losses());
        }
        prop_assert!((a.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let c = gen_contextual_lb(9, 6, seed).unwrap();
        let c2 = gen_contextual_lb(9, 6, seed).unwrap();
        prop_assert_eq!(c.cliques(), c2.cliques());
    }
}

#[test]
fn nohighprob_marginals_stay_flat_early() {
    let horizon = 9;
    let prior = Arc::new(gen_nohighprob(horizon).unwrap());
    for feedback in [FeedbackModel::full(), FeedbackModel::semi_bandit()] {
        let mut beliefs = vec![BeliefState::initial(Arc::clone(&prior))];
        for t in 0..horizon / 3 {
            let mut next = Vec::new();
            for b in &beliefs {
                let m = b.arm_marginals();
                assert!((m[0] - 0.5).abs() <= 1e-12 && (m[1] - 0.5).abs() <= 1e-12, "round {t}: {m:?}");
                for a in 0..prior.actions().len() {
                    let obs = feedback.observe(t, prior.actions().support(a), prior.scenarios()[0].losses()).unwrap();
                    next.push(b.posterior_update(a, &obs).unwrap());
                }
            }
            beliefs = next;
        }
    }
}

#[test]
fn contextual_losses_are_clique_constant() {
    let model = gen_contextual_lb(16, 8, 5).unwrap();
    let prior = model.expand_default().unwrap();
    for s in prior.scenarios() {
        for t in 0..15 {
            for c in model.cliques() {
                let first = s.losses().get(c[0], t);
                assert!(c.iter().all(|&i| s.losses().get(i, t) == first));
            }
        }
    }
}
