//! Config-driven Monte Carlo experiments, asymptotic variance curves and identity probes.

pub mod checks;
pub mod cli;
pub mod config;
pub mod curves;
pub mod experiment;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, McReport};
