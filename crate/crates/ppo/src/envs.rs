//! Environments the trainer can drive.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salamander_core::env::{policy_input, Env, EnvError};

/// Outcome of one control step, from the trainer's point of view.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    /// Next policy input (un-normalized).
    pub input: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Episode ended by the time limit only (bootstrap the value).
    pub truncated: bool,
    /// Raw reward terms (r_v, r_ω, r_energy, r_phase).
    pub terms: [f64; 4],
    pub diverged: bool,
}

pub trait TrainEnv {
    fn input_dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>, EnvError>;
    fn step(&mut self, action: &[f64]) -> Result<EnvStep, EnvError>;
}

impl TrainEnv for Env {
    fn input_dim(&self) -> usize {
        Env::input_dim(self)
    }

    fn num_actions(&self) -> usize {
        Env::num_actions(self)
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>, EnvError> {
        let obs = Env::reset(self, seed)?;
        Ok(policy_input(&self.state().expect("reset").command, &obs))
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep, EnvError> {
        let r = Env::step(self, action)?;
        let t = &r.info.terms;
        Ok(EnvStep {
            input: policy_input(&self.state().expect("reset").command, &r.observation),
            reward: r.reward,
            done: r.done,
            truncated: r.info.truncated,
            terms: [t.r_v, t.r_omega, t.r_energy, t.r_phase],
            diverged: r.info.diverged,
        })
    }
}

/// 1-D velocity tracking: a damped point mass driven by the action, rewarded
/// with the same Gaussian kernel as the locomotion task.
#[derive(Debug, Clone)]
pub struct PointMassEnv {
    pub dt: f64,
    pub episode_length: usize,
    pub command_range: f64,
    pub sigma_v: f64,
    v: f64,
    v_cmd: f64,
    t: usize,
}

impl Default for PointMassEnv {
    fn default() -> Self {
        PointMassEnv {
            dt: 0.05,
            episode_length: 100,
            command_range: 2.0,
            sigma_v: 0.25,
            v: 0.0,
            v_cmd: 0.0,
            t: 0,
        }
    }
}

impl PointMassEnv {
    fn input(&self) -> Vec<f64> {
        vec![self.v_cmd, self.v]
    }
}

impl TrainEnv for PointMassEnv {
    fn input_dim(&self) -> usize {
        2
    }

    fn num_actions(&self) -> usize {
        1
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>, EnvError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.v_cmd = rng.random_range(-self.command_range..=self.command_range);
        self.v = 0.0;
        self.t = 0;
        Ok(self.input())
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep, EnvError> {
        let a = action[0].clamp(-1.0, 1.0);
        self.v += self.dt * 4.0 * (3.0 * a - self.v);
        self.t += 1;
        let r_v = (-(self.v_cmd - self.v).powi(2) / self.sigma_v).exp();
        let done = self.t >= self.episode_length;
        Ok(EnvStep {
            input: self.input(),
            reward: r_v * self.dt,
            done,
            truncated: done,
            terms: [r_v, 0.0, 0.0, 0.0],
            diverged: false,
        })
    }
}
