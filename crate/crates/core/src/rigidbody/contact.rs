//! Compliant penalty contact between contact spheres and a height field.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{Kinematics, TerrainField, Wrench};
use crate::morphology::{Foot, RobotModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactParams {
    /// Normal stiffness k_n, N/m.
    pub stiffness: f64,
    /// Normal damping c_n, N·s/m.
    pub damping: f64,
    /// Coulomb coefficient μ.
    pub friction: f64,
    /// Slip speed below which friction is viscous, m/s.
    pub slip_velocity: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        ContactParams {
            stiffness: 5000.0,
            damping: 50.0,
            friction: 0.8,
            slip_velocity: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FootContact {
    pub in_contact: bool,
    pub normal_force: f64,
    /// Friction force along the local tangent basis (t₁ ≈ world x, t₂ = n × t₁).
    pub tangential_force: [f64; 2],
    pub penetration: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    /// Indexed by [`Foot`].
    pub feet: [FootContact; 4],
    /// Number of non-foot contact spheres touching the ground.
    pub body_contacts: usize,
    /// Summed normal force on non-foot spheres, N.
    pub body_normal_force: f64,
}

impl ContactReport {
    pub fn foot(&self, foot: Foot) -> &FootContact {
        &self.feet[foot as usize]
    }

    pub fn foot_contact_count(&self) -> usize {
        self.feet.iter().filter(|f| f.in_contact).count()
    }

    /// Feet plus body spheres in contact.
    pub fn total_contacts(&self) -> usize {
        self.foot_contact_count() + self.body_contacts
    }
}

/// Force law for one sphere, given its penetration depth, the contact
/// normal and the world velocity of the contact point. Returns the normal
/// magnitude and the friction force vector.
pub fn sphere_contact_force(
    params: &ContactParams,
    penetration: f64,
    normal: &Vector3<f64>,
    point_velocity: &Vector3<f64>,
) -> (f64, Vector3<f64>) {
    if penetration <= 0.0 {
        return (0.0, Vector3::zeros());
    }
    let vn = point_velocity.dot(normal);
    let fn_mag = (params.stiffness * penetration - params.damping * vn).max(0.0);
    let vt = point_velocity - normal * vn;
    let speed = vt.norm();
    let ft = if speed > 0.0 {
        -vt * (params.friction * fn_mag / speed.max(params.slip_velocity))
    } else {
        Vector3::zeros()
    };
    (fn_mag, ft)
}

fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let t1 = (Vector3::x() - n * n.x).normalize();
    (t1, n.cross(&t1))
}

/// Penalty forces for every contact sphere of the model against `terrain`.
///
/// Penetration is measured along the local terrain normal. Returned wrenches
/// are world-frame, one per segment, about each segment's CoM.
pub fn contact_forces(
    model: &RobotModel,
    kin: &Kinematics,
    terrain: &TerrainField,
    params: &ContactParams,
) -> (ContactReport, Vec<Wrench>) {
    let mut wrenches = vec![Wrench::zero(); model.segments.len()];
    let mut report = ContactReport::default();
    let foot_of = |s: usize| {
        model
            .feet
            .and_then(|f| Foot::ALL.into_iter().find(|foot| f[*foot as usize] == s))
    };
    for (s, seg) in model.segments.iter().enumerate() {
        if seg.contacts.is_empty() {
            continue;
        }
        let foot = foot_of(s);
        let com = kin.point(s, &seg.com);
        for sphere in &seg.contacts {
            let c = kin.point(s, &sphere.offset);
            let h = terrain.height(c.x, c.y);
            let (gx, gy) = terrain.gradient(c.x, c.y);
            let n = Vector3::new(-gx, -gy, 1.0).normalize();
            // distance from the sphere centre to the local tangent plane
            let penetration = sphere.radius - (c.z - h) * n.z;
            if penetration <= 0.0 {
                continue;
            }
            let p = c - n * sphere.radius;
            let v = kin.point_velocity_world(s, &p);
            let (fn_mag, ft) = sphere_contact_force(params, penetration, &n, &v);
            let f = n * fn_mag + ft;
            wrenches[s].force += f;
            wrenches[s].torque += (p - com).cross(&f);
            match foot {
                Some(foot) => {
                    let (t1, t2) = tangent_basis(&n);
                    let fc = &mut report.feet[foot as usize];
                    fc.in_contact = true;
                    fc.normal_force += fn_mag;
                    fc.tangential_force[0] += ft.dot(&t1);
                    fc.tangential_force[1] += ft.dot(&t2);
                    fc.penetration = fc.penetration.max(penetration);
                }
                None => {
                    report.body_contacts += 1;
                    report.body_normal_force += fn_mag;
                }
            }
        }
    }
    (report, wrenches)
}
