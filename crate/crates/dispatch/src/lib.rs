//! Experiment harness for isolated-microgrid dispatch: data ingestion,
//! configuration, training and evaluation across the four cases, artifact
//! export and the `mg-dispatch` command line.

pub mod calibration;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
mod error;
pub mod experiment;
pub mod series;
pub mod sweep;
pub mod trace;

pub use config::{Algorithm, Case, RunConfig};
pub use error::{Error, Result};
pub use experiment::{run_experiment, AlgoSummary, MetricsReport};
