//! Robot morphology: segments, joints, limb tags, nominal posture and the
//! girdle backlash augmentation.
//!
//! A [`RobotModel`] is a kinematic tree rooted at a single floating-base
//! segment. Joints are revolute, either servo-driven (actuated) or passive
//! spring-damper hinges. Actuated joints are indexed in declaration order;
//! that order is the layout of every action and `q` vector in the crate.

mod file;

pub use file::{load_model, parse_model, to_toml_string, DEFAULT_MODEL_TOML};

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while loading or transforming a model.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read model file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Parse(String),
    #[error("invalid model: {entity}: {reason}")]
    Validation { entity: String, reason: String },
    #[error("model has no girdle sites to augment")]
    MissingGirdles,
    #[error("girdle site `{0}` is already augmented with backlash joints")]
    AlreadyAugmented(String),
    #[error("backlash range must be positive, got {0} deg")]
    InvalidBacklashRange(f64),
}

fn invalid(entity: impl Into<String>, reason: impl Into<String>) -> ModelError {
    ModelError::Validation {
        entity: entity.into(),
        reason: reason.into(),
    }
}

/// Collision and hydrodynamic shape of a segment, centred on its CoM.
/// Capsules lie along the segment's local x axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Capsule { radius: f64, half_length: f64 },
    Box { half_extents: [f64; 3] },
}

impl Geometry {
    fn validate(&self, entity: &str) -> Result<(), ModelError> {
        let ok = match *self {
            Geometry::Capsule {
                radius,
                half_length,
            } => radius > 0.0 && half_length > 0.0,
            Geometry::Box { half_extents } => half_extents.iter().all(|&h| h > 0.0),
        };
        if ok && self.is_finite() {
            Ok(())
        } else {
            Err(invalid(entity, "geometry dimensions must be positive"))
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            Geometry::Capsule {
                radius,
                half_length,
            } => radius.is_finite() && half_length.is_finite(),
            Geometry::Box { half_extents } => half_extents.iter().all(|h| h.is_finite()),
        }
    }

    /// Uniformly scale every linear dimension.
    pub fn scaled(&self, s: f64) -> Geometry {
        match *self {
            Geometry::Capsule {
                radius,
                half_length,
            } => Geometry::Capsule {
                radius: radius * s,
                half_length: half_length * s,
            },
            Geometry::Box { half_extents } => Geometry::Box {
                half_extents: half_extents.map(|h| h * s),
            },
        }
    }
}

/// Sphere used for terrain contact, expressed in the segment frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactSphere {
    pub offset: Vector3<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSpec {
    pub name: String,
    pub mass: f64,
    /// Principal moments about the CoM, aligned with the segment frame.
    pub inertia_diag: Vector3<f64>,
    /// CoM in the segment frame (the frame origin is the parent joint).
    pub com: Vector3<f64>,
    pub geometry: Geometry,
    pub parent_joint: Option<String>,
    pub contacts: Vec<ContactSphere>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Actuated,
    Passive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub parent: String,
    pub child: String,
    /// Joint frame position in the parent segment frame.
    pub origin: Vector3<f64>,
    /// Fixed roll-pitch-yaw of the joint frame relative to the parent frame.
    pub rpy: Vector3<f64>,
    /// Rotation axis in the joint frame (the parent frame when `rpy` is zero).
    pub axis: Vector3<f64>,
    pub kind: JointKind,
    pub limits: [f64; 2],
    pub passive_stiffness: f64,
    pub passive_damping: f64,
    /// Reflected rotor inertia added to the joint-space diagonal.
    pub armature: f64,
}

impl JointSpec {
    pub fn is_actuated(&self) -> bool {
        self.kind == JointKind::Actuated
    }

    /// Fixed rotation from the parent segment frame to the joint frame.
    pub fn placement_rotation(&self) -> Rotation3<f64> {
        Rotation3::from_euler_angles(self.rpy.x, self.rpy.y, self.rpy.z)
    }
}

/// Limb tags in the canonical order FL, FR, HL, HR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Foot {
    FL,
    FR,
    HL,
    HR,
}

impl Foot {
    pub const ALL: [Foot; 4] = [Foot::FL, Foot::FR, Foot::HL, Foot::HR];

    pub fn label(self) -> &'static str {
        match self {
            Foot::FL => "FL",
            Foot::FR => "FR",
            Foot::HL => "HL",
            Foot::HR => "HR",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub segments: Vec<SegmentSpec>,
    pub joints: Vec<JointSpec>,
    /// Index of the floating-base segment.
    pub root: usize,
    /// Pins the root to the world (test rigs and pendulums).
    pub fixed_base: bool,
    /// Nominal angle per actuated joint, in actuated order.
    pub q_nominal: Vec<f64>,
    /// Foot segment indices in [`Foot::ALL`] order.
    pub feet: Option<[usize; 4]>,
    /// Joint indices of the front and back girdle connections.
    pub girdles: Option<[usize; 2]>,
    actuated: Vec<usize>,
    parent_joint_of: Vec<Option<usize>>,
}

impl RobotModel {
    /// Assemble and validate a model from its parts.
    ///
    /// `q_nominal` is given per actuated joint in declaration order. Feet
    /// and girdles are optional here; [`load_model`] requires feet.
    pub fn new(
        name: impl Into<String>,
        segments: Vec<SegmentSpec>,
        joints: Vec<JointSpec>,
        q_nominal: Vec<f64>,
        feet: Option<[usize; 4]>,
        girdles: Option<[usize; 2]>,
        fixed_base: bool,
    ) -> Result<Self, ModelError> {
        let mut model = RobotModel {
            name: name.into(),
            segments,
            joints,
            root: 0,
            fixed_base,
            q_nominal,
            feet,
            girdles,
            actuated: Vec::new(),
            parent_joint_of: Vec::new(),
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&mut self) -> Result<(), ModelError> {
        if self.segments.is_empty() {
            return Err(invalid("model", "no segments"));
        }
        let mut seen = std::collections::HashSet::new();
        for seg in &self.segments {
            if !seen.insert(seg.name.as_str()) {
                return Err(invalid(&seg.name, "duplicate segment name"));
            }
            let entity = format!("segment `{}`", seg.name);
            if !(seg.mass > 0.0) || !seg.mass.is_finite() {
                return Err(invalid(&entity, "mass must be positive"));
            }
            if !seg.inertia_diag.iter().all(|&i| i > 0.0 && i.is_finite()) {
                return Err(invalid(&entity, "inertia components must be positive"));
            }
            seg.geometry.validate(&entity)?;
            if seg.contacts.iter().any(|c| !(c.radius > 0.0)) {
                return Err(invalid(&entity, "contact sphere radius must be positive"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for j in &self.joints {
            if !seen.insert(j.name.as_str()) {
                return Err(invalid(&j.name, "duplicate joint name"));
            }
            let entity = format!("joint `{}`", j.name);
            if (j.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(invalid(&entity, "axis must have unit norm"));
            }
            if !(j.limits[0] < j.limits[1]) {
                return Err(invalid(&entity, "lower limit must be below upper limit"));
            }
            if j.is_actuated() && (j.passive_stiffness != 0.0 || j.passive_damping != 0.0) {
                return Err(invalid(&entity, "actuated joints carry no passive stiffness"));
            }
            if j.passive_stiffness < 0.0 || j.passive_damping < 0.0 || j.armature < 0.0 {
                return Err(invalid(&entity, "stiffness, damping and armature must be >= 0"));
            }
            if self.segment_index(&j.parent).is_none() {
                return Err(invalid(&entity, format!("unknown parent segment `{}`", j.parent)));
            }
            if self.segment_index(&j.child).is_none() {
                return Err(invalid(&entity, format!("unknown child segment `{}`", j.child)));
            }
        }

        // Parent-joint references must agree with the joint list.
        let mut parent_joint_of = vec![None; self.segments.len()];
        for (ji, j) in self.joints.iter().enumerate() {
            let c = self.segment_index(&j.child).unwrap();
            if parent_joint_of[c].is_some() {
                return Err(invalid(
                    format!("segment `{}`", j.child),
                    "has more than one parent joint",
                ));
            }
            parent_joint_of[c] = Some(ji);
        }
        let mut roots = Vec::new();
        for (si, seg) in self.segments.iter().enumerate() {
            let entity = format!("segment `{}`", seg.name);
            match (&seg.parent_joint, parent_joint_of[si]) {
                (None, None) => roots.push(si),
                (Some(pj), Some(ji)) if *pj == self.joints[ji].name => {}
                (Some(pj), _) if self.joint_index(pj).is_none() => {
                    return Err(invalid(entity, format!("parent_joint `{pj}` does not exist")));
                }
                _ => {
                    return Err(invalid(entity, "parent_joint disagrees with the joint list"));
                }
            }
        }
        if roots.len() != 1 {
            return Err(invalid("model", format!("expected one root segment, found {}", roots.len())));
        }
        self.root = roots[0];

        // Every segment must be reachable from the root: rules out cycles.
        let mut visited = vec![false; self.segments.len()];
        let mut stack = vec![self.root];
        while let Some(s) = stack.pop() {
            if visited[s] {
                return Err(invalid(format!("segment `{}`", self.segments[s].name), "cycle"));
            }
            visited[s] = true;
            for j in &self.joints {
                if self.segment_index(&j.parent) == Some(s) {
                    stack.push(self.segment_index(&j.child).unwrap());
                }
            }
        }
        if let Some(s) = visited.iter().position(|v| !v) {
            return Err(invalid(
                format!("segment `{}`", self.segments[s].name),
                "not reachable from the root (cycle in joint graph)",
            ));
        }
        self.parent_joint_of = parent_joint_of;

        self.actuated = self
            .joints
            .iter()
            .enumerate()
            .filter(|(_, j)| j.is_actuated())
            .map(|(i, _)| i)
            .collect();
        if self.q_nominal.len() != self.actuated.len() {
            return Err(invalid(
                "q_nominal",
                format!("{} entries for {} actuated joints", self.q_nominal.len(), self.actuated.len()),
            ));
        }
        for (k, &ji) in self.actuated.iter().enumerate() {
            let j = &self.joints[ji];
            let q = self.q_nominal[k];
            if q < j.limits[0] || q > j.limits[1] {
                return Err(invalid(format!("q_nominal `{}`", j.name), "outside joint limits"));
            }
        }
        if let Some(feet) = self.feet {
            for (k, &s) in feet.iter().enumerate() {
                if s >= self.segments.len() {
                    return Err(invalid(Foot::ALL[k].label(), "foot segment out of range"));
                }
                if self.segments[s].contacts.is_empty() {
                    return Err(invalid(Foot::ALL[k].label(), "foot segment has no contact sphere"));
                }
                if feet[..k].contains(&s) {
                    return Err(invalid(Foot::ALL[k].label(), "foot segment tagged twice"));
                }
            }
        }
        if let Some(g) = self.girdles {
            if g.iter().any(|&j| j >= self.joints.len()) {
                return Err(invalid("girdles", "girdle joint out of range"));
            }
        }
        Ok(())
    }

    pub fn segment_index(&self, name: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.name == name)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Joint indices of the actuated joints, in actuated order.
    pub fn actuated_joints(&self) -> &[usize] {
        &self.actuated
    }

    /// The joint whose child is `segment`, `None` for the root.
    pub fn parent_joint(&self, segment: usize) -> Option<usize> {
        self.parent_joint_of[segment]
    }

    pub fn parent_segment(&self, segment: usize) -> Option<usize> {
        self.parent_joint_of[segment].map(|j| self.segment_index(&self.joints[j].parent).unwrap())
    }

    /// Depth-first order from the root; parents precede children.
    pub fn traversal_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.segments.len());
        let mut stack = vec![self.root];
        while let Some(s) = stack.pop() {
            order.push(s);
            let name = &self.segments[s].name;
            // push in reverse so children are visited in declaration order
            for j in self.joints.iter().rev().filter(|j| &j.parent == name) {
                stack.push(self.segment_index(&j.child).unwrap());
            }
        }
        order
    }

    pub fn total_mass(&self) -> f64 {
        self.segments.iter().map(|s| s.mass).sum()
    }

    /// Foot segment index for a limb tag.
    pub fn foot_segment(&self, foot: Foot) -> Option<usize> {
        self.feet.map(|f| f[foot as usize])
    }

    /// Full joint vector (actuated + passive) at the nominal posture.
    pub fn nominal_joint_positions(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.joints.len()];
        for (k, &ji) in self.actuated.iter().enumerate() {
            q[ji] = self.q_nominal[k];
        }
        q
    }

    /// Joint indices of the axial chain from the root following
    /// actuated z-axis joints, head to tail.
    pub fn axial_joints(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut seg = self.root;
        loop {
            let name = &self.segments[seg].name;
            let next = self.joints.iter().enumerate().find(|(_, j)| {
                &j.parent == name && j.is_actuated() && j.rpy == Vector3::zeros() && j.axis.z.abs() > 0.99
            });
            let Some((ji, j)) = next else { break };
            out.push(ji);
            seg = self.segment_index(&j.child).unwrap();
            // walk through passive backlash hinges
            while let Some((_, pj)) = self
                .joints
                .iter()
                .enumerate()
                .find(|(_, pj)| pj.parent == self.segments[seg].name && !pj.is_actuated())
            {
                seg = self.segment_index(&pj.child).unwrap();
            }
        }
        out
    }
}

/// Number of actuated joints `n_q`; passive joints are excluded.
pub fn actuated_dof_count(model: &RobotModel) -> usize {
    model.actuated_joints().len()
}

/// Passive-hinge parameters used by [`augment_backlash`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacklashParams {
    pub range_deg: f64,
    pub stiffness: f64,
    pub damping: f64,
}

impl Default for BacklashParams {
    fn default() -> Self {
        BacklashParams {
            range_deg: 4.0,
            stiffness: 0.5,
            damping: 0.01,
        }
    }
}

const VIRTUAL_MASS: f64 = 1e-6;
const VIRTUAL_INERTIA: f64 = 1e-10;
const VIRTUAL_SIZE: f64 = 1e-4;

/// Insert two passive hinges (local x then local y) after each girdle joint,
/// limited to `±range_deg`. Returns a new model; actuated indexing is
/// unchanged because the new joints and their zero-offset carrier segments
/// are appended.
pub fn augment_backlash(model: &RobotModel, range_deg: f64) -> Result<RobotModel, ModelError> {
    augment_backlash_with(
        model,
        BacklashParams {
            range_deg,
            ..BacklashParams::default()
        },
    )
}

pub fn augment_backlash_with(model: &RobotModel, params: BacklashParams) -> Result<RobotModel, ModelError> {
    let girdles = model.girdles.ok_or(ModelError::MissingGirdles)?;
    if !(params.range_deg > 0.0) || !params.range_deg.is_finite() {
        return Err(ModelError::InvalidBacklashRange(params.range_deg));
    }
    let range = params.range_deg.to_radians();
    let mut segments = model.segments.clone();
    let mut joints = model.joints.clone();
    for &gj in &girdles {
        let site = joints[gj].name.clone();
        let x_name = format!("{site}_backlash_x");
        if joints.iter().any(|j| j.name == x_name) {
            return Err(ModelError::AlreadyAugmented(site));
        }
        let child = joints[gj].child.clone();
        let carrier_x = format!("{site}_backlash_carrier_x");
        let carrier_y = format!("{site}_backlash_carrier_y");
        let y_name = format!("{site}_backlash_y");
        for (name, pj) in [(&carrier_x, &site), (&carrier_y, &x_name)] {
            segments.push(SegmentSpec {
                name: name.clone(),
                mass: VIRTUAL_MASS,
                inertia_diag: Vector3::repeat(VIRTUAL_INERTIA),
                com: Vector3::zeros(),
                geometry: Geometry::Capsule {
                    radius: VIRTUAL_SIZE,
                    half_length: VIRTUAL_SIZE,
                },
                parent_joint: Some(pj.clone()),
                contacts: Vec::new(),
            });
        }
        joints[gj].child = carrier_x.clone();
        let child_idx = segments.iter().position(|s| s.name == child).unwrap();
        segments[child_idx].parent_joint = Some(y_name.clone());
        let hinge = |name: &str, parent: &str, child: &str, axis: Vector3<f64>| JointSpec {
            name: name.to_string(),
            parent: parent.to_string(),
            child: child.to_string(),
            origin: Vector3::zeros(),
            rpy: Vector3::zeros(),
            axis,
            kind: JointKind::Passive,
            limits: [-range, range],
            passive_stiffness: params.stiffness,
            passive_damping: params.damping,
            armature: 0.0,
        };
        joints.push(hinge(&x_name, &carrier_x, &carrier_y, Vector3::x()));
        joints.push(hinge(&y_name, &carrier_y, &child, Vector3::y()));
    }
    RobotModel::new(
        model.name.clone(),
        segments,
        joints,
        model.q_nominal.clone(),
        model.feet,
        model.girdles,
        model.fixed_base,
    )
}

/// The shipped 18-DoF default morphology.
pub fn default_model() -> RobotModel {
    parse_model(DEFAULT_MODEL_TOML).expect("shipped default model is valid")
}
