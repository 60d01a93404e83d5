//! Experiment harness for the `rom_dwr` toolkit: configuration, artifact
//! formats, the offline/online Burgers pipeline, and the subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
