use std::path::PathBuf;

use thiserror::Error;

/// Failures of the experiment harness, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver failure: {0}")]
    Solver(rom_dwr::Error),

    #[error("missing artifact {}: run the producing command first", .0.display())]
    MissingArtifact(PathBuf),

    #[error("malformed artifact {}: {reason}", path.display())]
    Malformed { path: PathBuf, reason: String },

    #[error("{0}")]
    Core(rom_dwr::Error),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::MissingArtifact(_) => 4,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<rom_dwr::Error> for CliError {
    fn from(e: rom_dwr::Error) -> Self {
        match e.root() {
            rom_dwr::Error::NewtonDiverged { .. } | rom_dwr::Error::SingularSystem(_) => {
                CliError::Solver(e)
            }
            _ => CliError::Core(e),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
