//! Proximal policy optimization for the salamander locomotion tasks.

pub mod adam;
pub mod checkpoint;
pub mod envs;
pub mod gae;
pub mod mlp;
pub mod normalizer;
pub mod policy;
pub mod train;

use nalgebra::DMatrix;
use salamander_core::env::{EnvError, Policy};
use thiserror::Error;

pub use checkpoint::{Checkpoint, CheckpointMeta};
pub use envs::{EnvStep, PointMassEnv, TrainEnv};
pub use mlp::{Activation, Mlp};
pub use normalizer::RunningNormalizer;
pub use policy::ActorCritic;
pub use train::{train, MetricsRow, TrainConfig, TrainOutput};

#[derive(Debug, Error)]
pub enum PpoError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training diverged at iteration {iteration}: {what}")]
    Diverged { iteration: u64, what: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("policy expects {expected} inputs, environment provides {got}")]
    IncompatiblePolicy { expected: usize, got: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Network + input normalization: everything needed to act.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPolicy {
    pub ac: ActorCritic,
    pub normalizer: RunningNormalizer,
}

impl TrainedPolicy {
    pub fn input_dim(&self) -> usize {
        self.ac.input_dim()
    }

    /// Deterministic (mean) actions for a batch of raw inputs (columns).
    pub fn act_batch(&self, inputs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = inputs.clone();
        for mut col in x.column_iter_mut() {
            let raw: Vec<f64> = col.iter().copied().collect();
            self.normalizer.normalize_into(&raw, col.as_mut_slice());
        }
        let mut m = self.ac.means(&x);
        let b = self.ac.action_bound;
        m.apply(|v| *v = v.clamp(-b, b));
        m
    }
}

impl Policy for TrainedPolicy {
    fn act(&mut self, input: &[f64]) -> Vec<f64> {
        let x = self.normalizer.normalize(input);
        let mean = self.ac.means(&DMatrix::from_column_slice(x.len(), 1, &x));
        self.ac.clip_action(mean.as_slice())
    }
}
