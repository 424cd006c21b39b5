use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::morphology::RobotModel;

/// Floating-base pose and velocity plus joint coordinates.
///
/// `base_linvel` is the world-frame velocity of the root frame origin;
/// `base_angvel` is expressed in the root (body) frame. `q`/`qdot` cover
/// every model joint, actuated and passive, in model declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub base_pos: Vector3<f64>,
    pub base_quat: UnitQuaternion<f64>,
    pub base_linvel: Vector3<f64>,
    pub base_angvel: Vector3<f64>,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub time: f64,
}

impl SimState {
    /// Base at the origin, at rest, joints at the nominal posture.
    pub fn nominal(model: &RobotModel) -> Self {
        SimState {
            base_pos: Vector3::zeros(),
            base_quat: UnitQuaternion::identity(),
            base_linvel: Vector3::zeros(),
            base_angvel: Vector3::zeros(),
            q: model.nominal_joint_positions(),
            qdot: vec![0.0; model.joints.len()],
            time: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.base_pos.iter().all(|x| x.is_finite())
            && self.base_quat.coords.iter().all(|x| x.is_finite())
            && self.base_linvel.iter().all(|x| x.is_finite())
            && self.base_angvel.iter().all(|x| x.is_finite())
            && self.q.iter().all(|x| x.is_finite())
            && self.qdot.iter().all(|x| x.is_finite())
    }

    /// Actuated joint positions in actuated order.
    pub fn actuated_q(&self, model: &RobotModel) -> Vec<f64> {
        model.actuated_joints().iter().map(|&j| self.q[j]).collect()
    }

    pub fn actuated_qdot(&self, model: &RobotModel) -> Vec<f64> {
        model.actuated_joints().iter().map(|&j| self.qdot[j]).collect()
    }
}
