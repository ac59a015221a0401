//! Experiment harness for the `oscerr` estimates: problem parsing, CSV
//! output, plots and the concurrent experiment runner.

pub mod config;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod output;
pub mod plot;
pub mod problem;

pub use error::{CliError, Result};
