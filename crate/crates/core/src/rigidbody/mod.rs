//! Land-mode physics: floating-base articulated dynamics, penalty contact,
//! terrain, and the semi-implicit Euler integrator.

mod articulation;
pub mod contact;
pub mod spatial;
mod state;
pub mod terrain;

use nalgebra::{Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use articulation::{Accelerations, Articulation, Kinematics};
pub use contact::{contact_forces, ContactParams, ContactReport, FootContact};
pub use state::SimState;
pub use terrain::{make_terrain, TerrainError, TerrainField, TerrainKind, TerrainParams};

use crate::morphology::RobotModel;

pub const G: f64 = 9.81;
pub const GRAVITY: Vector3<f64> = Vector3::new(0.0, 0.0, -G);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RigidBodyError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("singular articulated mass matrix")]
    SingularMassMatrix,
    #[error("integration diverged at step {step}")]
    Diverged { step: u64 },
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
}

impl RigidBodyError {
    pub(crate) fn dims(what: &'static str, expected: usize, got: usize) -> Self {
        RigidBodyError::DimensionMismatch { what, expected, got }
    }
}

/// World-frame force and torque about a segment's CoM.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn zero() -> Self {
        Wrench::default()
    }
}

/// World pose and velocity of one segment frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    /// World velocity of the frame origin.
    pub linvel: Vector3<f64>,
    /// World angular velocity.
    pub angvel: Vector3<f64>,
}

/// Per-segment poses and velocities, indexed by segment.
pub fn forward_kinematics(art: &Articulation, state: &SimState) -> Result<Vec<SegmentPose>, RigidBodyError> {
    let kin = art.kinematics(state)?;
    Ok((0..kin.num_segments())
        .map(|s| {
            let r = kin.rotation(s);
            let origin = *kin.origin(s);
            SegmentPose {
                position: origin,
                orientation: UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r)),
                linvel: kin.point_velocity_world(s, &origin),
                angvel: kin.angular_velocity_world(s),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    /// Mass-weighted mean of segment world yaw rates.
    pub yaw_rate: f64,
}

pub fn com_state(art: &Articulation, model: &RobotModel, kin: &Kinematics) -> ComState {
    let mut pos = Vector3::zeros();
    let mut vel = Vector3::zeros();
    let mut yaw = 0.0;
    let mut total = 0.0;
    for (s, seg) in model.segments.iter().enumerate() {
        let m = art.segment_mass(s);
        let c = kin.point(s, &seg.com);
        pos += c * m;
        vel += kin.point_velocity_world(s, &c) * m;
        yaw += kin.angular_velocity_world(s).z * m;
        total += m;
    }
    ComState {
        position: pos / total,
        velocity: vel / total,
        yaw_rate: yaw / total,
    }
}

/// One semi-implicit Euler step.
///
/// Velocities are advanced from the accelerations, then positions from the
/// new velocities. Joints resting on a limit and being driven into it are
/// held rigid for the step (their reaction is carried by the rest of the
/// tree); any residual overshoot is clamped and the offending velocity
/// component zeroed.
pub fn step(
    art: &Articulation,
    state: &SimState,
    tau: &[f64],
    external: &[Wrench],
    dt: f64,
) -> Result<SimState, RigidBodyError> {
    step_with_gravity(art, state, tau, external, dt, &GRAVITY)
}

/// [`step`] under an arbitrary uniform gravity field.
pub fn step_with_gravity(
    art: &Articulation,
    state: &SimState,
    tau: &[f64],
    external: &[Wrench],
    dt: f64,
    gravity: &Vector3<f64>,
) -> Result<SimState, RigidBodyError> {
    let kin = art.kinematics(state)?;
    step_from(art, &kin, state, tau, external, dt, gravity)
}

/// [`step`] reusing kinematics already computed for `state` (e.g. for
/// contact evaluation).
pub fn step_from(
    art: &Articulation,
    kin: &Kinematics,
    state: &SimState,
    tau: &[f64],
    external: &[Wrench],
    dt: f64,
    gravity: &Vector3<f64>,
) -> Result<SimState, RigidBodyError> {
    let acc = accelerations(art, kin, state, tau, external, dt, gravity)?;
    let mut next = integrate(art, state, &acc, dt);
    if !art.is_fixed_base() && next.is_finite() {
        balance_linear_momentum(art, kin, &mut next, external, dt, gravity)?;
    }
    if !next.is_finite() {
        return Err(RigidBodyError::Diverged {
            step: (state.time / dt).round() as u64,
        });
    }
    next.time = state.time + dt;
    Ok(next)
}

fn accelerations(
    art: &Articulation,
    kin: &Kinematics,
    state: &SimState,
    tau: &[f64],
    external: &[Wrench],
    dt: f64,
    gravity: &Vector3<f64>,
) -> Result<Accelerations, RigidBodyError> {
    if !(dt > 0.0) {
        return Err(RigidBodyError::InvalidTimeStep(dt));
    }
    let acc = art.forward_dynamics_with_gravity(kin, state, tau, external, None, gravity)?;
    match art.limit_locks(state, &acc, dt) {
        Some(locks) => art.forward_dynamics_with_gravity(kin, state, tau, external, Some(&locks), gravity),
        None => Ok(acc),
    }
}

/// Semi-implicit Euler in body-fixed generalized velocities changes the
/// total linear momentum by `O(dt²)` per step even when the net external
/// force vanishes (the `J̇ν` term is evaluated at the old configuration).
/// Shifting the base velocity restores the exact discrete balance
/// `P' = P + dt·ΣF`; the shift is itself `O(dt²)`, so consistency and
/// order are unchanged.
fn balance_linear_momentum(
    art: &Articulation,
    kin: &Kinematics,
    next: &mut SimState,
    external: &[Wrench],
    dt: f64,
    gravity: &Vector3<f64>,
) -> Result<(), RigidBodyError> {
    let m = art.total_mass();
    let net: Vector3<f64> = external.iter().map(|w| w.force).sum::<Vector3<f64>>() + gravity * m;
    let target = art.com_velocity(kin) + net * (dt / m);
    let current = art.com_velocity(&art.kinematics(next)?);
    next.base_linvel += target - current;
    Ok(())
}

fn integrate(art: &Articulation, state: &SimState, acc: &Accelerations, dt: f64) -> SimState {
    let mut next = state.clone();
    if !art.is_fixed_base() {
        let r = state.base_quat;
        let v_body = r.inverse_transform_vector(&state.base_linvel);
        let w_new = state.base_angvel + dt * spatial::angular(&acc.base);
        let v_body_new = v_body + dt * spatial::linear(&acc.base);
        let mut q_new = r * UnitQuaternion::from_scaled_axis(w_new * dt);
        q_new.renormalize();
        let v_world_new = q_new * v_body_new;
        next.base_pos = state.base_pos + dt * v_world_new;
        next.base_quat = q_new;
        next.base_linvel = v_world_new;
        next.base_angvel = w_new;
    }
    for j in 0..art.num_joints() {
        let [lo, hi] = art.joint_limits(j);
        let mut qd = state.qdot[j] + dt * acc.qdd[j];
        let mut q = state.q[j] + dt * qd;
        if q < lo {
            q = lo;
            qd = qd.max(0.0);
        } else if q > hi {
            q = hi;
            qd = qd.min(0.0);
        }
        next.q[j] = q;
        next.qdot[j] = qd;
    }
    next
}

/// Stagger the velocities half a step back so that subsequent
/// semi-implicit steps behave as a leapfrog (kick-drift-kick) scheme:
/// positions then carry no first-order bias under constant acceleration.
/// Call once before the first [`step`] of a trajectory.
pub fn prime_leapfrog(
    art: &Articulation,
    state: &SimState,
    tau: &[f64],
    external: &[Wrench],
    dt: f64,
) -> Result<SimState, RigidBodyError> {
    let kin = art.kinematics(state)?;
    let acc = accelerations(art, &kin, state, tau, external, dt, &GRAVITY)?;
    let mut primed = state.clone();
    let h = -0.5 * dt;
    if !art.is_fixed_base() {
        let v_body = state.base_quat.inverse_transform_vector(&state.base_linvel);
        primed.base_angvel = state.base_angvel + h * spatial::angular(&acc.base);
        primed.base_linvel = state.base_quat * (v_body + h * spatial::linear(&acc.base));
    }
    for (qd, a) in primed.qdot.iter_mut().zip(&acc.qdd) {
        *qd += h * a;
    }
    Ok(primed)
}

/// Column names of a state snapshot row.
pub fn snapshot_header(model: &RobotModel) -> Vec<String> {
    let mut cols: Vec<String> = [
        "time", "base_x", "base_y", "base_z", "quat_w", "quat_x", "quat_y", "quat_z", "vel_x", "vel_y", "vel_z",
        "angvel_x", "angvel_y", "angvel_z",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(model.joints.iter().map(|j| format!("q_{}", j.name)));
    cols.extend(model.joints.iter().map(|j| format!("qd_{}", j.name)));
    cols
}

/// Flat SI-unit record of every [`SimState`] field, matching [`snapshot_header`].
pub fn snapshot_row(state: &SimState) -> Vec<f64> {
    let q = state.base_quat.quaternion();
    let mut row = vec![
        state.time,
        state.base_pos.x,
        state.base_pos.y,
        state.base_pos.z,
        q.w,
        q.i,
        q.j,
        q.k,
        state.base_linvel.x,
        state.base_linvel.y,
        state.base_linvel.z,
        state.base_angvel.x,
        state.base_angvel.y,
        state.base_angvel.z,
    ];
    row.extend(&state.q);
    row.extend(&state.qdot);
    row
}

#[cfg(test)]
mod tests;
