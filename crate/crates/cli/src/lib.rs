//! Batch front end: experiment configs, runs, spectral reports and the lemma
//! verification suite.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_run, cmd_scaling, cmd_spectra, cmd_verify, CorpusChoice};
pub use config::ExperimentConfig;
pub use error::CliError;
