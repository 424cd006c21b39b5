//! TOML model file (`format_version = 1`).
//!
//! ```toml
//! format_version = 1
//! name = "..."
//! root = "girdle_front"        # informational; the root is the segment without parent_joint
//! fixed_base = false           # optional
//! [feet]                       # FL/FR/HL/HR -> segment name
//! [girdles]                    # front/back -> joint name (optional)
//! [q_nominal]                  # actuated joint name -> radians (missing = 0)
//! [[segments]]                 # name, parent_joint?, mass, inertia_diag, com, geometry, contacts[]
//! [[joints]]                   # name, parent, child, origin, rpy?, axis, kind, limits,
//!                              # passive_stiffness?, passive_damping?, armature?
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{ContactSphere, Foot, Geometry, JointKind, JointSpec, ModelError, RobotModel, SegmentSpec};

pub const DEFAULT_MODEL_TOML: &str = include_str!("../../assets/salamander.toml");

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root: Option<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    fixed_base: bool,
    feet: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    girdles: Option<GirdleFile>,
    #[serde(default)]
    q_nominal: BTreeMap<String, f64>,
    segments: Vec<SegmentFile>,
    #[serde(default)]
    joints: Vec<JointFile>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn is_zero3(v: &[f64; 3]) -> bool {
    v.iter().all(|x| *x == 0.0)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GirdleFile {
    front: String,
    back: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent_joint: Option<String>,
    mass: f64,
    inertia_diag: [f64; 3],
    #[serde(default)]
    com: [f64; 3],
    geometry: Geometry,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    contacts: Vec<ContactFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContactFile {
    offset: [f64; 3],
    radius: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointFile {
    name: String,
    parent: String,
    child: String,
    #[serde(default)]
    origin: [f64; 3],
    #[serde(default, skip_serializing_if = "is_zero3")]
    rpy: [f64; 3],
    axis: [f64; 3],
    kind: JointKind,
    limits: [f64; 2],
    #[serde(default, skip_serializing_if = "is_zero")]
    passive_stiffness: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    passive_damping: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    armature: f64,
}

/// Read and validate a model file. Feet tags are mandatory.
pub fn load_model(path: impl AsRef<Path>) -> Result<RobotModel, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}

pub fn parse_model(text: &str) -> Result<RobotModel, ModelError> {
    let file: ModelFile = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(ModelError::Validation {
            entity: "format_version".into(),
            reason: format!("unsupported version {}", file.format_version),
        });
    }
    let segments: Vec<SegmentSpec> = file
        .segments
        .into_iter()
        .map(|s| SegmentSpec {
            name: s.name,
            mass: s.mass,
            inertia_diag: Vector3::from(s.inertia_diag),
            com: Vector3::from(s.com),
            geometry: s.geometry,
            parent_joint: s.parent_joint,
            contacts: s
                .contacts
                .into_iter()
                .map(|c| ContactSphere {
                    offset: Vector3::from(c.offset),
                    radius: c.radius,
                })
                .collect(),
        })
        .collect();
    let joints: Vec<JointSpec> = file
        .joints
        .into_iter()
        .map(|j| JointSpec {
            name: j.name,
            parent: j.parent,
            child: j.child,
            origin: Vector3::from(j.origin),
            rpy: Vector3::from(j.rpy),
            axis: Vector3::from(j.axis),
            kind: j.kind,
            limits: j.limits,
            passive_stiffness: j.passive_stiffness,
            passive_damping: j.passive_damping,
            armature: j.armature,
        })
        .collect();

    let seg_idx = |name: &str, what: &str| {
        segments
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| ModelError::Validation {
                entity: what.to_string(),
                reason: format!("unknown segment `{name}`"),
            })
    };
    let mut feet = [0usize; 4];
    for foot in Foot::ALL {
        let name = file.feet.get(foot.label()).ok_or_else(|| ModelError::Validation {
            entity: "feet".into(),
            reason: format!("missing {} tag", foot.label()),
        })?;
        feet[foot as usize] = seg_idx(name, foot.label())?;
    }
    if file.feet.len() != 4 {
        return Err(ModelError::Validation {
            entity: "feet".into(),
            reason: "exactly FL, FR, HL, HR must be tagged".into(),
        });
    }
    let joint_idx = |name: &str| {
        joints
            .iter()
            .position(|j| j.name == name)
            .ok_or_else(|| ModelError::Validation {
                entity: "girdles".into(),
                reason: format!("unknown joint `{name}`"),
            })
    };
    let girdles = match &file.girdles {
        Some(g) => Some([joint_idx(&g.front)?, joint_idx(&g.back)?]),
        None => None,
    };
    for name in file.q_nominal.keys() {
        match joints.iter().find(|j| &j.name == name) {
            Some(j) if j.is_actuated() => {}
            _ => {
                return Err(ModelError::Validation {
                    entity: format!("q_nominal `{name}`"),
                    reason: "not an actuated joint".into(),
                })
            }
        }
    }
    let q_nominal = joints
        .iter()
        .filter(|j| j.is_actuated())
        .map(|j| file.q_nominal.get(&j.name).copied().unwrap_or(0.0))
        .collect();
    let model = RobotModel::new(file.name, segments, joints, q_nominal, Some(feet), girdles, file.fixed_base)?;
    if let Some(root) = &file.root {
        if model.segments[model.root].name != *root {
            return Err(ModelError::Validation {
                entity: "root".into(),
                reason: format!("declared root `{root}` has a parent joint"),
            });
        }
    }
    Ok(model)
}

/// Serialize a model back to the file format.
pub fn to_toml_string(model: &RobotModel) -> Result<String, ModelError> {
    let feet = model.feet.ok_or_else(|| ModelError::Validation {
        entity: "feet".into(),
        reason: "model files require foot tags".into(),
    })?;
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        name: model.name.clone(),
        root: Some(model.segments[model.root].name.clone()),
        fixed_base: model.fixed_base,
        feet: Foot::ALL
            .iter()
            .map(|f| (f.label().to_string(), model.segments[feet[*f as usize]].name.clone()))
            .collect(),
        girdles: model.girdles.map(|g| GirdleFile {
            front: model.joints[g[0]].name.clone(),
            back: model.joints[g[1]].name.clone(),
        }),
        q_nominal: model
            .actuated_joints()
            .iter()
            .zip(&model.q_nominal)
            .map(|(&j, &q)| (model.joints[j].name.clone(), q))
            .collect(),
        segments: model
            .segments
            .iter()
            .map(|s| SegmentFile {
                name: s.name.clone(),
                parent_joint: s.parent_joint.clone(),
                mass: s.mass,
                inertia_diag: s.inertia_diag.into(),
                com: s.com.into(),
                geometry: s.geometry,
                contacts: s
                    .contacts
                    .iter()
                    .map(|c| ContactFile {
                        offset: c.offset.into(),
                        radius: c.radius,
                    })
                    .collect(),
            })
            .collect(),
        joints: model
            .joints
            .iter()
            .map(|j| JointFile {
                name: j.name.clone(),
                parent: j.parent.clone(),
                child: j.child.clone(),
                origin: j.origin.into(),
                rpy: j.rpy.into(),
                axis: j.axis.into(),
                kind: j.kind,
                limits: j.limits,
                passive_stiffness: j.passive_stiffness,
                passive_damping: j.passive_damping,
                armature: j.armature,
            })
            .collect(),
    };
    toml::to_string(&file).map_err(|e| ModelError::Parse(e.to_string()))
}
