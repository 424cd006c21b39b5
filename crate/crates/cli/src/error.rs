use std::path::PathBuf;

use salamander_core::env::EnvError;
use salamander_core::transition::TransitionError;
use salamander_ppo::PpoError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read config file {}: {source}", path.display())]
    ConfigFile { path: PathBuf, source: std::io::Error },
    #[error("runtime divergence: {0}")]
    Divergence(String),
    #[error("incompatible checkpoint: {0}")]
    IncompatibleCheckpoint(String),
    #[error("output directory {} is owned by another process (remove the lock file if it is stale)", .0.display())]
    Locked(PathBuf),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status: 2 config, 3 divergence, 4 incompatible
    /// checkpoint, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::ConfigFile { .. } => 2,
            CliError::Divergence(_) => 3,
            CliError::IncompatibleCheckpoint(_) => 4,
            CliError::Locked(_) | CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<EnvError> for CliError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::Config(_) | EnvError::PhaseOutOfRange(_) | EnvError::Model(_) | EnvError::Terrain(_) => {
                CliError::Config(e.to_string())
            }
            EnvError::Sim(_) => CliError::Divergence(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<PpoError> for CliError {
    fn from(e: PpoError) -> Self {
        match e {
            PpoError::Config(m) => CliError::Config(m),
            PpoError::Diverged { .. } => CliError::Divergence(e.to_string()),
            PpoError::Checkpoint(_) | PpoError::IncompatiblePolicy { .. } => {
                CliError::IncompatibleCheckpoint(e.to_string())
            }
            PpoError::Env(e) => e.into(),
            PpoError::Io(e) => CliError::Io(e),
            PpoError::Csv(e) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<TransitionError> for CliError {
    fn from(e: TransitionError) -> Self {
        match e {
            TransitionError::InvalidArena(_) => CliError::Config(e.to_string()),
            TransitionError::Env(e) => e.into(),
            TransitionError::Io(e) => CliError::Io(e),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
