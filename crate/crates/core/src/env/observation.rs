//! Proprioceptive observation assembly.

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{JointChannel, NoiseConfig, ObservationConfig};
use super::phase::PhaseState;
use crate::morphology::RobotModel;
use crate::rigidbody::SimState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Joint velocities (or positions, per config), actuated order.
    pub qdot: Vec<f64>,
    /// `q − q_nominal`.
    pub dq: Vec<f64>,
    pub omega_body: [f64; 3],
    pub gravity_body: [f64; 3],
    pub phase: [f64; 8],
    pub sigma: Option<f64>,
    /// `a_{t−1}, a_{t−2}, a_{t−3}`, concatenated.
    pub action_history: Vec<f64>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.qdot.len() + self.dq.len() + 3 + 3 + 8 + usize::from(self.sigma.is_some()) + self.action_history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        self.write_into(&mut v);
        v
    }

    pub fn write_into(&self, out: &mut Vec<f64>) {
        out.extend(&self.qdot);
        out.extend(&self.dq);
        out.extend(self.omega_body);
        out.extend(self.gravity_body);
        out.extend(self.phase);
        if let Some(s) = self.sigma {
            out.push(s);
        }
        out.extend(&self.action_history);
    }
}

pub fn observation_dim(n_q: usize, include_sigma: bool) -> usize {
    2 * n_q + 3 + 3 + 8 + usize::from(include_sigma) + 3 * n_q
}

/// World `−z` expressed in the base frame.
pub fn gravity_body(base: &UnitQuaternion<f64>) -> Vector3<f64> {
    base.inverse_transform_vector(&-Vector3::z())
}

fn jitter<R: Rng>(rng: &mut R, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.random_range(-half_width..=half_width)
    } else {
        0.0
    }
}

/// Build the observation; bounded uniform noise is drawn from `rng` on every
/// channel except phase, σ and the action history.
#[allow(clippy::too_many_arguments)]
pub fn assemble_observation<R: Rng>(
    sim: &SimState,
    model: &RobotModel,
    phase: &PhaseState,
    history: &[Vec<f64>],
    sigma: Option<u8>,
    cfg: &ObservationConfig,
    noise: &NoiseConfig,
    rng: &mut R,
) -> Observation {
    let act = model.actuated_joints();
    let on = noise.enabled;
    let nz = |rng: &mut R, w: f64| if on { jitter(rng, w) } else { 0.0 };

    let qdot = act
        .iter()
        .map(|&j| match cfg.first_channel {
            JointChannel::Qdot => sim.qdot[j] + nz(rng, noise.qdot),
            JointChannel::Q => sim.q[j] + nz(rng, noise.dq),
        })
        .collect();
    let dq = act
        .iter()
        .zip(&model.q_nominal)
        .map(|(&j, q0)| sim.q[j] - q0 + nz(rng, noise.dq))
        .collect();
    let w = sim.base_angvel;
    let omega_body = [0, 1, 2].map(|i| w[i] + nz(rng, noise.omega));
    let g = gravity_body(&sim.base_quat);
    let gravity_body = [0, 1, 2].map(|i| g[i] + nz(rng, noise.gravity));
    let mut action_history = Vec::with_capacity(history.iter().map(Vec::len).sum());
    for a in history {
        action_history.extend(a);
    }
    Observation {
        qdot,
        dq,
        omega_body,
        gravity_body,
        phase: phase.features(),
        sigma: sigma.map(f64::from),
        action_history,
    }
}
