//! Entropies, divergences, potentials, exact per-round diagnostics and
//! estimator monitors.

pub mod diagnostics;
pub mod entropy;
pub mod estimator;
pub mod potential;

pub use diagnostics::{
    branches, diagnostics_from_branches, info_gain, round_diagnostics, BlockCheck, Branch, DiagnosticOptions,
    RoundDiagnostics, DEFAULT_BRANCH_CAP, RATIO_EPS,
};
pub use entropy::{
    binary_entropy, chi_sq_plus, coordinate_entropy, kl_bernoulli, relative_entropy_ext, shannon_entropy,
    tsallis_entropy,
};
pub use estimator::{freedman_tail, self_bounding_solve, self_bounding_tight, EstimatorTracker};
pub use potential::{check_admissible, potential_stats, AdmissibilityReport, PotentialFn, PotentialStats, Violation};
