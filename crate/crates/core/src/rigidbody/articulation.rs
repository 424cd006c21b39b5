//! Reduced-coordinate articulated dynamics for a floating-base tree.
//!
//! Bodies are stored in topological order (parents first). Every quantity
//! is in body coordinates; the root's six DoF are the floating base.
//! Forward dynamics is the three-pass articulated-body algorithm with
//! joint armature folded into the joint-space pivot `D`, which also lets a
//! joint be locked (treated as rigid) for a step by skipping its pivot.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

use super::spatial::{
    angular, cross_force, cross_motion, force_at, linear, motion_transform, spatial, spatial_inertia, SpatialMat,
    SpatialVec,
};
use super::{RigidBodyError, SimState, Wrench, GRAVITY};
use crate::morphology::RobotModel;

#[derive(Debug, Clone)]
struct Body {
    segment: usize,
    parent: usize,
    joint: usize,
    place_rot: Matrix3<f64>,
    origin: Vector3<f64>,
    axis: Vector3<f64>,
    mass: f64,
    com: Vector3<f64>,
    inertia: SpatialMat,
}

#[derive(Debug, Clone, Copy)]
struct JointParams {
    armature: f64,
    stiffness: f64,
    damping: f64,
    limits: [f64; 2],
}

/// Dynamics-ready view of a [`RobotModel`], optionally with per-segment
/// mass scaling (domain randomization).
#[derive(Debug, Clone)]
pub struct Articulation {
    bodies: Vec<Body>,
    segment_body: Vec<usize>,
    joints: Vec<JointParams>,
    fixed_base: bool,
    total_mass: f64,
}

/// Generalized accelerations: the base's spatial acceleration in body
/// coordinates (the time derivative of the body-frame twist) and `q̈`.
#[derive(Debug, Clone, PartialEq)]
pub struct Accelerations {
    pub base: SpatialVec,
    pub qdd: Vec<f64>,
}

impl Accelerations {
    /// Classical acceleration of the base origin in world coordinates.
    pub fn base_linear_world(&self, state: &SimState) -> Vector3<f64> {
        let r = state.base_quat.to_rotation_matrix();
        let v_body = r.inverse() * state.base_linvel;
        r * (linear(&self.base) + state.base_angvel.cross(&v_body))
    }
}

/// World poses and body-frame twists of every body.
#[derive(Debug, Clone)]
pub struct Kinematics {
    rot: Vec<Matrix3<f64>>,
    pos: Vec<Vector3<f64>>,
    twist: Vec<SpatialVec>,
    xup: Vec<SpatialMat>,
    bias: Vec<SpatialVec>,
    segment_body: Vec<usize>,
}

impl Kinematics {
    fn body(&self, segment: usize) -> usize {
        self.segment_body[segment]
    }

    /// Rotation of a segment frame (segment-to-world).
    pub fn rotation(&self, segment: usize) -> &Matrix3<f64> {
        &self.rot[self.body(segment)]
    }

    /// World position of a segment's frame origin (its parent joint).
    pub fn origin(&self, segment: usize) -> &Vector3<f64> {
        &self.pos[self.body(segment)]
    }

    /// World position of a point given in segment coordinates.
    pub fn point(&self, segment: usize, local: &Vector3<f64>) -> Vector3<f64> {
        let b = self.body(segment);
        self.pos[b] + self.rot[b] * local
    }

    pub fn angular_velocity_world(&self, segment: usize) -> Vector3<f64> {
        let b = self.body(segment);
        self.rot[b] * angular(&self.twist[b])
    }

    /// World velocity of the material point at world position `p`.
    pub fn point_velocity_world(&self, segment: usize, p: &Vector3<f64>) -> Vector3<f64> {
        let b = self.body(segment);
        let w = self.rot[b] * angular(&self.twist[b]);
        let v0 = self.rot[b] * linear(&self.twist[b]);
        v0 + w.cross(&(p - self.pos[b]))
    }

    /// Body-frame twist `[ω; v_origin]`.
    pub fn twist(&self, segment: usize) -> &SpatialVec {
        &self.twist[self.body(segment)]
    }

    pub fn num_segments(&self) -> usize {
        self.segment_body.len()
    }
}

impl Articulation {
    pub fn new(model: &RobotModel) -> Self {
        Self::with_mass_scales(model, &vec![1.0; model.segments.len()])
    }

    /// Build with every segment's mass and inertia multiplied by its scale.
    pub fn with_mass_scales(model: &RobotModel, scales: &[f64]) -> Self {
        assert_eq!(scales.len(), model.segments.len(), "one mass scale per segment");
        let order = model.traversal_order();
        let mut segment_body = vec![0; model.segments.len()];
        for (b, &s) in order.iter().enumerate() {
            segment_body[s] = b;
        }
        let bodies: Vec<Body> = order
            .iter()
            .map(|&s| {
                let seg = &model.segments[s];
                let mass = seg.mass * scales[s];
                let ic = Matrix3::from_diagonal(&(seg.inertia_diag * scales[s]));
                let inertia = spatial_inertia(mass, &seg.com, &ic);
                match model.parent_joint(s) {
                    None => Body {
                        segment: s,
                        parent: usize::MAX,
                        joint: usize::MAX,
                        place_rot: Matrix3::identity(),
                        origin: Vector3::zeros(),
                        axis: Vector3::zeros(),
                        mass,
                        com: seg.com,
                        inertia,
                    },
                    Some(ji) => {
                        let j = &model.joints[ji];
                        let ps = model.segment_index(&j.parent).unwrap();
                        Body {
                            segment: s,
                            parent: segment_body[ps],
                            joint: ji,
                            place_rot: j.placement_rotation().into_inner(),
                            origin: j.origin,
                            axis: j.axis,
                            mass,
                            com: seg.com,
                            inertia,
                        }
                    }
                }
            })
            .collect();
        let joints = model
            .joints
            .iter()
            .map(|j| JointParams {
                armature: j.armature,
                stiffness: j.passive_stiffness,
                damping: j.passive_damping,
                limits: j.limits,
            })
            .collect();
        let total_mass = bodies.iter().map(|b| b.mass).sum();
        Articulation {
            bodies,
            segment_body,
            joints,
            fixed_base: model.fixed_base,
            total_mass,
        }
    }

    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn num_segments(&self) -> usize {
        self.bodies.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn segment_mass(&self, segment: usize) -> f64 {
        self.bodies[self.segment_body[segment]].mass
    }

    pub fn segment_com(&self, segment: usize) -> &Vector3<f64> {
        &self.bodies[self.segment_body[segment]].com
    }

    pub fn is_fixed_base(&self) -> bool {
        self.fixed_base
    }

    pub fn joint_limits(&self, joint: usize) -> [f64; 2] {
        self.joints[joint].limits
    }

    /// Mass-weighted mean velocity of the segment CoMs (world frame).
    pub fn com_velocity(&self, kin: &Kinematics) -> Vector3<f64> {
        let mut p = Vector3::zeros();
        for (b, body) in self.bodies.iter().enumerate() {
            let w = angular(&kin.twist[b]);
            let v = linear(&kin.twist[b]) + w.cross(&body.com);
            p += kin.rot[b] * v * body.mass;
        }
        p / self.total_mass
    }

    pub(crate) fn check_dims(&self, state: &SimState) -> Result<(), RigidBodyError> {
        let n = self.joints.len();
        if state.q.len() != n {
            return Err(RigidBodyError::dims("q", n, state.q.len()));
        }
        if state.qdot.len() != n {
            return Err(RigidBodyError::dims("qdot", n, state.qdot.len()));
        }
        Ok(())
    }

    /// Outward pass: poses, twists, transforms and velocity-product terms.
    pub fn kinematics(&self, state: &SimState) -> Result<Kinematics, RigidBodyError> {
        self.check_dims(state)?;
        let nb = self.bodies.len();
        let mut rot = Vec::with_capacity(nb);
        let mut pos = Vec::with_capacity(nb);
        let mut twist = Vec::with_capacity(nb);
        let mut xup = Vec::with_capacity(nb);
        let mut bias = Vec::with_capacity(nb);
        for (b, body) in self.bodies.iter().enumerate() {
            if b == 0 {
                let r = state.base_quat.to_rotation_matrix().into_inner();
                let v = if self.fixed_base {
                    SpatialVec::zeros()
                } else {
                    spatial(&state.base_angvel, &(r.transpose() * state.base_linvel))
                };
                rot.push(r);
                pos.push(state.base_pos);
                twist.push(v);
                xup.push(SpatialMat::identity());
                bias.push(SpatialVec::zeros());
                continue;
            }
            let q = state.q[body.joint];
            let qd = state.qdot[body.joint];
            let rj = body.place_rot * Rotation3::from_axis_angle(&Unit::new_unchecked(body.axis), q).into_inner();
            let p = body.parent;
            rot.push(rot[p] * rj);
            pos.push(pos[p] + rot[p] * body.origin);
            let x = motion_transform(&rj.transpose(), &body.origin);
            let vj = spatial(&(body.axis * qd), &Vector3::zeros());
            let v = x * twist[p] + vj;
            bias.push(cross_motion(&v, &vj));
            twist.push(v);
            xup.push(x);
        }
        Ok(Kinematics {
            rot,
            pos,
            twist,
            xup,
            bias,
            segment_body: self.segment_body.clone(),
        })
    }

    /// Total torque on each joint: applied torque plus the passive
    /// spring-damper contribution.
    fn joint_torque(&self, j: usize, state: &SimState, tau: &[f64]) -> f64 {
        let p = &self.joints[j];
        tau[j] - p.stiffness * state.q[j] - p.damping * state.qdot[j]
    }

    /// Articulated-body forward dynamics under gravity.
    ///
    /// `tau` holds one applied torque per joint (passive entries are
    /// normally zero; their spring-damper torque is added here). `external`
    /// holds one world-frame wrench per segment, applied at the segment CoM.
    /// Joints flagged in `locked` are held rigid (`q̈ = 0`).
    pub fn forward_dynamics(
        &self,
        kin: &Kinematics,
        state: &SimState,
        tau: &[f64],
        external: &[Wrench],
        locked: Option<&[bool]>,
    ) -> Result<Accelerations, RigidBodyError> {
        self.forward_dynamics_with_gravity(kin, state, tau, external, locked, &GRAVITY)
    }

    pub fn forward_dynamics_with_gravity(
        &self,
        kin: &Kinematics,
        state: &SimState,
        tau: &[f64],
        external: &[Wrench],
        locked: Option<&[bool]>,
        gravity: &Vector3<f64>,
    ) -> Result<Accelerations, RigidBodyError> {
        self.check_dims(state)?;
        if tau.len() != self.joints.len() {
            return Err(RigidBodyError::dims("joint_torques", self.joints.len(), tau.len()));
        }
        if external.len() != self.bodies.len() {
            return Err(RigidBodyError::dims("external_wrenches", self.bodies.len(), external.len()));
        }
        let nb = self.bodies.len();
        let mut ia: Vec<SpatialMat> = Vec::with_capacity(nb);
        let mut pa: Vec<SpatialVec> = Vec::with_capacity(nb);
        for (b, body) in self.bodies.iter().enumerate() {
            let v = &kin.twist[b];
            let rt = kin.rot[b].transpose();
            let w = &external[body.segment];
            let f = rt * (w.force + *gravity * body.mass);
            let n = rt * w.torque;
            let fext = force_at(&body.com, &f, &n);
            ia.push(body.inertia);
            pa.push(cross_force(v, &(body.inertia * v)) - fext);
        }

        let mut u_vec = vec![SpatialVec::zeros(); nb];
        let mut d_inv = vec![0.0; nb];
        let mut u_sc = vec![0.0; nb];
        for b in (1..nb).rev() {
            let body = &self.bodies[b];
            let j = body.joint;
            let is_locked = locked.is_some_and(|l| l[j]);
            let s = spatial(&body.axis, &Vector3::zeros());
            let (ia_b, pa_b) = if is_locked {
                (ia[b], pa[b] + ia[b] * kin.bias[b])
            } else {
                let u = ia[b] * s;
                let d = s.dot(&u) + self.joints[j].armature;
                let uj = self.joint_torque(j, state, tau) - s.dot(&pa[b]);
                u_vec[b] = u;
                d_inv[b] = 1.0 / d;
                u_sc[b] = uj;
                let ia_art = ia[b] - u * u.transpose() * d_inv[b];
                let pa_art = pa[b] + ia_art * kin.bias[b] + u * (uj * d_inv[b]);
                (ia_art, pa_art)
            };
            let x = &kin.xup[b];
            let p = body.parent;
            ia[p] += x.transpose() * ia_b * x;
            pa[p] += x.transpose() * pa_b;
        }

        let mut acc = vec![SpatialVec::zeros(); nb];
        if !self.fixed_base {
            let chol = ia[0].cholesky().ok_or(RigidBodyError::SingularMassMatrix)?;
            acc[0] = -chol.solve(&pa[0]);
        }
        let mut qdd = vec![0.0; self.joints.len()];
        for b in 1..nb {
            let body = &self.bodies[b];
            let j = body.joint;
            let a = kin.xup[b] * acc[body.parent] + kin.bias[b];
            if locked.is_some_and(|l| l[j]) {
                acc[b] = a;
                continue;
            }
            let qa = (u_sc[b] - u_vec[b].dot(&a)) * d_inv[b];
            qdd[j] = qa;
            acc[b] = a + spatial(&(body.axis * qa), &Vector3::zeros());
        }
        Ok(Accelerations { base: acc[0], qdd })
    }

    /// Joints sitting on a limit whose next velocity would push past it.
    pub(crate) fn limit_locks(&self, state: &SimState, acc: &Accelerations, dt: f64) -> Option<Vec<bool>> {
        let mut any = false;
        let locks: Vec<bool> = (0..self.joints.len())
            .map(|j| {
                let [lo, hi] = self.joints[j].limits;
                let v_next = state.qdot[j] + dt * acc.qdd[j];
                let lock = (state.q[j] <= lo + LIMIT_EPS && v_next < 0.0) || (state.q[j] >= hi - LIMIT_EPS && v_next > 0.0);
                any |= lock;
                lock
            })
            .collect();
        any.then_some(locks)
    }
}

const LIMIT_EPS: f64 = 1e-12;
