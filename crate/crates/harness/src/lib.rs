//! Experiment harness for `robust-oco`: configuration, simulation, sweeps,
//! CSV output and the named verification checks behind the `robust-oco` CLI.

pub mod checks;
pub mod config;
pub mod error;
pub mod experiments;
pub mod sim;
pub mod sweep;
pub mod trace;

pub use config::{Algorithm, ExperimentConfig};
pub use error::{HarnessError, Result};
