//! Pólya-Gamma block Gibbs sampling for Bayesian binomial logistic linear
//! mixed models under normal and truncated-Gamma priors.
//!
//! The crate provides
//! - exact PG(b, c) sampling and series density evaluation ([`pg`]),
//! - model assembly ([`model`]) and the two-block sampler ([`gibbs`]),
//! - the explicit minorization constant and total-variation planner ([`ergodicity`]),
//! - batch-means output analysis ([`diagnostics`]),
//! - slow reference implementations used for verification ([`oracles`]),
//! - configuration, CSV ingestion and the command-line front end ([`io`], [`cli`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(feature = "cli")]
pub mod cli;
pub mod diagnostics;
pub mod ergodicity;
pub mod error;
pub mod gibbs;
#[cfg(feature = "cli")]
pub mod io;
pub mod model;
pub mod oracles;
pub mod pg;
pub mod quad;
pub mod rng;
pub mod tgamma;

pub use error::{Error, Result};
