//! Command-line front end: presets, run manifests and the train / eval /
//! rollout / transition commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use commands::{
    cmd_eval, cmd_rollout, cmd_train, cmd_transition, CommandSpec, CommonArgs, EvalArgs, RolloutArgs, TrainArgs,
    TransitionArgs,
};
pub use config::{RunConfig, PRESETS};
pub use error::CliError;
pub use manifest::RunManifest;
