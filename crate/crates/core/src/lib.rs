//! Overfitting analysis and bias removal for Cox proportional-hazards
//! regression with right-censored data, in the regime where the number of
//! covariates `p` grows proportionally with the sample size `n`.
//!
//! The crate is organised bottom-up:
//!
//! - [`special`]: Lambert W, Gaussian quadrature rules and the frailty
//!   integrals `phi_delta`.
//! - [`survival`]: step functions, hazard/censoring specifications, synthetic
//!   data generation and the dataset file format.
//! - [`cox`]: partial likelihood, Newton fitting, the Breslow estimator and
//!   the observable overfitting markers.
//! - [`rs`]: the replica-symmetric order-parameter equations, solved either
//!   by a Monte-Carlo population or by quadrature over hazard atoms.
//! - [`debias`]: data-only estimation of the signal strength and the
//!   de-biased association vector and cumulative hazard.
//! - [`experiment`]: replicate-level orchestration and plot-data emission.
//!
//! Runnable examples covering each capability live in `examples/`.

// Argument checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cox;
pub mod debias;
pub mod error;
pub mod experiment;
pub mod rs;
pub mod special;
pub mod survival;

pub use error::{Error, Result};

/// Deterministic random stream used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Random stream for `seed`, optionally split into independent substreams
/// (one per replicate).
pub fn rng_stream(seed: u64, substream: u64) -> Rng {
    use rand::SeedableRng;
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(substream);
    rng
}
