//! Exact and Monte Carlo laboratory for Thompson Sampling over finitely
//! supported priors on loss sequences.
//!
//! The crate is organised bottom-up:
//!
//! - [`actions`], [`graph`] and [`feedback`]: combinatorial action sets,
//!   feedback graphs and the observation rules (full, semi-bandit, graph,
//!   contextual).
//! - [`prior`]: scenarios, priors and exact Bayesian posterior updates.
//! - [`policy`]: Thompson Sampling, thresholded Thompson Sampling, the
//!   rare/common arm partition and the dyadic rank blocks.
//! - [`infotheory`]: entropies, divergences, mirror-map potentials, exact
//!   per-round information gains and ratios, estimator monitors.
//! - [`scenarios`]: generators for the named prior constructions, including
//!   lazily sampled priors with closed-form posteriors.
//! - [`harness`]: the exact evaluator, the Monte Carlo runner, bound
//!   reporting and run configuration.
//!
//! Indices are 0-based throughout the API (coordinates, rounds, actions).
//! Natural logarithms are used everywhere.

pub mod actions;
pub mod error;
pub mod feedback;
pub mod graph;
pub mod harness;
pub mod infotheory;
pub mod policy;
pub mod prior;
pub mod scenarios;

pub use actions::{make_all_msubsets, make_interval_actions, ActionSet};
pub use error::{Error, Result};
pub use feedback::{FeedbackKind, FeedbackModel, Observation};
pub use graph::Graph;
pub use policy::{PolicyConfig, PolicyKind};
pub use prior::{ActionDistribution, BeliefState, LossMatrix, Prior, Scenario};
