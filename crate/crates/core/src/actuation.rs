//! Action → torque pipeline: residual target, low-pass command filter,
//! joint PD and the servo torque–speed envelope.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::morphology::RobotModel;

#[derive(Debug, Error, PartialEq)]
pub enum ActuationError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("invalid servo parameter {0}")]
    InvalidParam(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServoParams {
    pub kp: f64,
    pub kd: f64,
    pub tau_max: f64,
    /// No-load speed, rad/s.
    pub omega_nl: f64,
    /// Braking torque capacity relative to `tau_max` (≥ 1).
    pub brake_scale: f64,
    pub filter_alpha: f64,
}

impl Default for ServoParams {
    fn default() -> Self {
        ServoParams {
            kp: 15.0,
            kd: 0.15,
            tau_max: 3.0,
            omega_nl: 4.8,
            brake_scale: 1.3,
            filter_alpha: 0.3,
        }
    }
}

impl ServoParams {
    pub fn validate(&self) -> Result<(), ActuationError> {
        let checks = [
            (self.kp > 0.0, "kp"),
            (self.kd >= 0.0, "kd"),
            (self.tau_max > 0.0, "tau_max"),
            (self.omega_nl > 0.0, "omega_nl"),
            (self.brake_scale >= 1.0, "brake_scale"),
            (self.filter_alpha > 0.0 && self.filter_alpha <= 1.0, "filter_alpha"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, name)) => Err(ActuationError::InvalidParam(name)),
            None => Ok(()),
        }
    }
}

/// Low-pass filter memory, one entry per actuated joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorState {
    pub filtered_target: Vec<f64>,
}

impl ActuatorState {
    /// Warm start at the nominal posture.
    pub fn at_nominal(model: &RobotModel) -> Self {
        ActuatorState {
            filtered_target: model.q_nominal.clone(),
        }
    }
}

fn check(what: &'static str, expected: usize, got: usize) -> Result<(), ActuationError> {
    if expected == got {
        Ok(())
    } else {
        Err(ActuationError::DimensionMismatch { what, expected, got })
    }
}

/// `q_des = q_nominal + scale·Δq`, clamped to the joint limits.
pub fn residual_to_target(action: &[f64], model: &RobotModel, action_scale: f64) -> Result<Vec<f64>, ActuationError> {
    let act = model.actuated_joints();
    check("action", act.len(), action.len())?;
    Ok(act
        .iter()
        .zip(action)
        .zip(&model.q_nominal)
        .map(|((&j, &a), &q0)| {
            let [lo, hi] = model.joints[j].limits;
            (q0 + action_scale * a).clamp(lo, hi)
        })
        .collect())
}

/// First-order low-pass: `(1−α)·previous + α·q_des`. Updates the memory
/// in place and returns the filtered target.
pub fn filter_target(state: &mut ActuatorState, q_des: &[f64], alpha: f64) -> Result<Vec<f64>, ActuationError> {
    check("q_des", state.filtered_target.len(), q_des.len())?;
    for (f, &d) in state.filtered_target.iter_mut().zip(q_des) {
        *f = (1.0 - alpha) * *f + alpha * d;
    }
    Ok(state.filtered_target.clone())
}

#[inline]
pub fn pd_torque(q_target: f64, q: f64, qdot: f64, kp: f64, kd: f64) -> f64 {
    kp * (q_target - q) - kd * qdot
}

/// Velocity-dependent saturation with a larger braking capacity.
#[inline]
pub fn servo_envelope(tau: f64, qdot: f64, params: &ServoParams) -> f64 {
    let bound = if tau * qdot > 0.0 {
        params.tau_max * (1.0 - qdot.abs() / params.omega_nl).max(0.0)
    } else {
        params.brake_scale * params.tau_max
    };
    tau.clamp(-bound, bound)
}

/// Coulomb-like joint friction, smoothed below 0.1 rad/s.
#[inline]
pub fn joint_friction(friction: f64, qdot: f64) -> f64 {
    -friction * qdot / qdot.abs().max(0.1)
}

/// PD + envelope + joint friction for every actuated joint, writing into a
/// full-length joint torque vector (passive entries untouched).
#[allow(clippy::too_many_arguments)]
pub fn servo_torques(
    model: &RobotModel,
    q_target: &[f64],
    q: &[f64],
    qdot: &[f64],
    params: &ServoParams,
    kp_scale: f64,
    kd_scale: f64,
    friction: f64,
    out: &mut [f64],
) {
    for (k, &j) in model.actuated_joints().iter().enumerate() {
        let raw = pd_torque(q_target[k], q[j], qdot[j], params.kp * kp_scale, params.kd * kd_scale);
        out[j] = servo_envelope(raw, qdot[j], params) + joint_friction(friction, qdot[j]);
    }
}
