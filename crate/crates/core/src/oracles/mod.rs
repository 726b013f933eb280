//! Slow, independent reference implementations used by tests, the acceptance
//! suite and the `pg-selftest` command.

pub mod lemmas;
pub mod linalg;
pub mod selftest;
pub mod stats;
pub mod tiny;

pub use lemmas::{verify_proof_inequalities, ProofReport};
pub use selftest::{pg_selftest, SelfTestReport};
pub use tiny::{
    exact_posterior_draws, log_unnormalized_posterior, log_unnormalized_posterior_augmented,
    quadrature_posterior_mean, ExactDraws, QuadratureMoments, TinyModel,
};
