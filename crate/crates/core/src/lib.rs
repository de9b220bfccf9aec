//! Localized spectral estimation of integrated covolatility from noisy,
//! synchronously observed bivariate high-frequency prices.
//!
//! The pipeline is: [`model`] describes the data-generating process,
//! [`simulate`] draws observations, [`spectral`] turns them into blockwise
//! sine coefficients, and [`estimators`] combines those with variance-optimal
//! weights. [`asymptotics`] supplies the limiting variance, [`baselines`] the
//! realized and multi-scale realized covariance, and [`harness`] the Monte
//! Carlo runner and CLI plumbing.

pub mod asymptotics;
pub mod baselines;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod model;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
