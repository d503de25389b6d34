//! Experiment harness for the spde-core solvers: run configuration, CSV
//! outputs, manifests, and a thread-pool path executor.

pub mod config;
pub mod csvio;
pub mod error;
pub mod parallel;
pub mod runner;

pub use config::RunConfig;
pub use error::CliError;
