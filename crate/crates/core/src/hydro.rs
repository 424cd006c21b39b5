//! Water-mode forces: immersion, buoyancy, linear+quadratic drag and the
//! land/water mode indicator.
//!
//! Every force is scaled by the segment's immersion fraction, so crossing
//! the surface is continuous.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::morphology::{Geometry, RobotModel};
use crate::rigidbody::{spatial, Articulation, Kinematics, Wrench, G};

/// Horizontal rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Extent {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaterRegion {
    pub surface_z: f64,
    /// `None` means water everywhere.
    pub extent: Option<Extent>,
    /// Multiplies every drag gain.
    pub density_scale: f64,
}

impl Default for WaterRegion {
    fn default() -> Self {
        WaterRegion {
            surface_z: 0.0,
            extent: None,
            density_scale: 1.0,
        }
    }
}

impl WaterRegion {
    pub fn covers(&self, x: f64, y: f64) -> bool {
        self.extent.is_none_or(|e| e.contains(x, y))
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Some(e) = self.extent {
            if !(e.x_max > e.x_min && e.y_max > e.y_min) {
                return Err("water extent must have positive area".into());
            }
        }
        if !(self.density_scale >= 0.0) {
            return Err("density_scale must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuoyancyParams {
    pub k_b: f64,
    /// N·s/m
    pub k_d: f64,
}

impl Default for BuoyancyParams {
    fn default() -> Self {
        BuoyancyParams { k_b: 1.05, k_d: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidParams {
    /// kg/m³
    pub density: f64,
    pub drag_coeff: f64,
    /// Stokes-like linear coefficient per unit surface area, N·s/m³.
    pub linear_coeff: f64,
}

impl Default for FluidParams {
    fn default() -> Self {
        FluidParams {
            density: 1000.0,
            drag_coeff: 1.0,
            linear_coeff: 5.0,
        }
    }
}

/// Diagonal drag gains, expressed in the segment frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DragGains {
    pub c_v_lin: Vector3<f64>,
    pub c_v_quad: Vector3<f64>,
    pub c_w_lin: Vector3<f64>,
    pub c_w_quad: Vector3<f64>,
}

impl DragGains {
    pub fn scaled(&self, k: f64) -> DragGains {
        DragGains {
            c_v_lin: self.c_v_lin * k,
            c_v_quad: self.c_v_quad * k,
            c_w_lin: self.c_w_lin * k,
            c_w_quad: self.c_w_quad * k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Immersion {
    pub fraction: f64,
    /// Depth of the segment centre below the surface (0 when above).
    pub depth: f64,
}

/// `∫₀ᵘ clamp(t, 0, 1) dt`
fn ramp_integral(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u <= 1.0 {
        0.5 * u * u
    } else {
        u - 0.5
    }
}

/// Immersed fraction of a segment whose geometry is centred at `center`
/// with orientation `rot` (segment-to-world).
///
/// Capsules: each cross-section along the axis is counted as submerged in
/// proportion to how much of its diameter lies below the surface; the
/// fraction is the average over the axis (closed form). As the radius
/// vanishes this is exactly the submerged axis-length fraction, and a
/// horizontal capsule still changes continuously with depth. Boxes use the
/// submerged fraction of their vertical extent.
pub fn immersion_fraction(
    center: &Vector3<f64>,
    rot: &Matrix3<f64>,
    geometry: &Geometry,
    water: &WaterRegion,
) -> Immersion {
    let depth = (water.surface_z - center.z).max(0.0);
    if !water.covers(center.x, center.y) {
        return Immersion { fraction: 0.0, depth: 0.0 };
    }
    let fraction = match *geometry {
        Geometry::Capsule { radius, half_length } => {
            let az = rot[(2, 0)];
            let u = |s: f64| (water.surface_z - (center.z + s * az) + radius) / (2.0 * radius);
            let (u0, u1) = (u(-half_length), u(half_length));
            if (u0 - u1).abs() < 1e-9 {
                (0.5 * (u0 + u1)).clamp(0.0, 1.0)
            } else {
                (ramp_integral(u0) - ramp_integral(u1)) / (u0 - u1)
            }
        }
        Geometry::Box { half_extents } => {
            let hz: f64 = (0..3).map(|i| rot[(2, i)].abs() * half_extents[i]).sum();
            ((water.surface_z - (center.z - hz)) / (2.0 * hz)).clamp(0.0, 1.0)
        }
    };
    Immersion {
        fraction: fraction.clamp(0.0, 1.0),
        depth,
    }
}

/// Upward buoyancy with heave damping, `fraction·(k_b·m·g − k_d·ż)·e_z`.
pub fn buoyancy_force(mass: f64, params: &BuoyancyParams, fraction: f64, zdot: f64) -> Vector3<f64> {
    if fraction <= 0.0 {
        return Vector3::zeros();
    }
    Vector3::new(0.0, 0.0, fraction * (params.k_b * mass * G - params.k_d * zdot))
}

/// Drag gains from segment geometry.
///
/// Capsule (axis x, radius r, half-length L):
/// - quadratic translation `½ρC_d·A` with `A_x = πr²`, `A_y = A_z = 2r·2L`;
/// - linear translation `β·S`, `S = 4πrL + 4πr²`;
/// - lateral rotation from integrating the strip law along the axis:
///   quadratic `½ρC_d·r·L⁴`, linear `β·2πr·(2L³/3)`;
/// - axial spin: skin friction only, linear `β·4πrL·r²`, no quadratic term.
///
/// Box (half-extents a₁,a₂,a₃): quadratic translation `½ρC_d·4aⱼaₖ`; linear
/// `β·S`; rotation about i: quadratic `½ρC_d·aᵢ(aⱼ⁴ + aₖ⁴)` (leading faces),
/// linear `β·∫(distance to axis)² dS` over the whole surface.
pub fn drag_gains_from_geometry(geometry: &Geometry, fluid: &FluidParams) -> DragGains {
    let q = 0.5 * fluid.density * fluid.drag_coeff;
    let beta = fluid.linear_coeff;
    let pi = std::f64::consts::PI;
    match *geometry {
        Geometry::Capsule { radius: r, half_length: l } => {
            let lateral = 4.0 * r * l;
            let surface = 4.0 * pi * r * l + 4.0 * pi * r * r;
            let rot_lat_quad = q * r * l.powi(4);
            let rot_lat_lin = beta * 2.0 * pi * r * (2.0 * l.powi(3) / 3.0);
            DragGains {
                c_v_lin: Vector3::repeat(beta * surface),
                c_v_quad: Vector3::new(q * pi * r * r, q * lateral, q * lateral),
                c_w_lin: Vector3::new(beta * 4.0 * pi * r * l * r * r, rot_lat_lin, rot_lat_lin),
                c_w_quad: Vector3::new(0.0, rot_lat_quad, rot_lat_quad),
            }
        }
        Geometry::Box { half_extents: h } => {
            let surface = 8.0 * (h[0] * h[1] + h[1] * h[2] + h[2] * h[0]);
            let mut g = DragGains {
                c_v_lin: Vector3::repeat(beta * surface),
                ..Default::default()
            };
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                g.c_v_quad[i] = q * 4.0 * h[j] * h[k];
                g.c_w_quad[i] = q * h[i] * (h[j].powi(4) + h[k].powi(4));
                g.c_w_lin[i] = beta * box_second_moment(h, i);
            }
            g
        }
    }
}

/// `∫ (distance to axis i)² dS` over the surface of a box.
fn box_second_moment(h: [f64; 3], i: usize) -> f64 {
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    let (a, b, c) = (h[i], h[j], h[k]);
    // faces normal to i: area 4bc, ∫(y²+z²) = 4bc(b²+c²)/3
    let fi = 4.0 * b * c * (b * b + c * c) / 3.0;
    // faces normal to j at distance b: ∫(b² + z²) over 2a × 2c
    let fj = 4.0 * a * c * (b * b + c * c / 3.0);
    let fk = 4.0 * a * b * (c * c + b * b / 3.0);
    2.0 * (fi + fj + fk)
}

/// Local-frame drag force and torque: `−fraction·(C_lin·v + C_quad·(|v|⊙v))`.
pub fn drag_wrench(
    v: &Vector3<f64>,
    w: &Vector3<f64>,
    gains: &DragGains,
    fraction: f64,
) -> (Vector3<f64>, Vector3<f64>) {
    let law = |x: &Vector3<f64>, lin: &Vector3<f64>, quad: &Vector3<f64>| {
        -(lin.component_mul(x) + quad.component_mul(&x.abs().component_mul(x))) * fraction
    };
    (law(v, &gains.c_v_lin, &gains.c_v_quad), law(w, &gains.c_w_lin, &gains.c_w_quad))
}

/// Land (0) / water (1) indicator, measured at the given reference point
/// (the front-girdle CoM): inside the water extent and below the surface.
pub fn mode_indicator(reference: &Vector3<f64>, water: &WaterRegion) -> u8 {
    mode_indicator_with(reference, water, 0.0)
}

/// [`mode_indicator`] with the switching height moved to
/// `surface_z + threshold`.
pub fn mode_indicator_with(reference: &Vector3<f64>, water: &WaterRegion, threshold: f64) -> u8 {
    u8::from(water.covers(reference.x, reference.y) && reference.z < water.surface_z + threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HydroParams {
    pub fluid: FluidParams,
    pub buoyancy: BuoyancyParams,
}

/// Precomputed per-segment hydrodynamic model.
#[derive(Debug, Clone)]
pub struct HydroModel {
    pub params: HydroParams,
    pub water: WaterRegion,
    gains: Vec<DragGains>,
}

/// Aggregate water interaction of one evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HydroReport {
    /// Immersion fraction per segment.
    pub fractions: Vec<f64>,
}

impl HydroReport {
    /// Mass-unweighted mean immersion over segments.
    pub fn mean_fraction(&self) -> f64 {
        if self.fractions.is_empty() {
            0.0
        } else {
            self.fractions.iter().sum::<f64>() / self.fractions.len() as f64
        }
    }
}

impl HydroModel {
    pub fn new(model: &RobotModel, params: HydroParams, water: WaterRegion) -> Self {
        let gains = model
            .segments
            .iter()
            .map(|s| drag_gains_from_geometry(&s.geometry, &params.fluid).scaled(water.density_scale))
            .collect();
        HydroModel { params, water, gains }
    }

    pub fn gains(&self, segment: usize) -> &DragGains {
        &self.gains[segment]
    }

    /// World-frame buoyancy + drag wrench about each segment CoM.
    pub fn wrenches(&self, model: &RobotModel, art: &Articulation, kin: &Kinematics) -> (Vec<Wrench>, HydroReport) {
        let n = model.segments.len();
        let mut out = vec![Wrench::zero(); n];
        let mut fractions = vec![0.0; n];
        for (s, seg) in model.segments.iter().enumerate() {
            let rot = kin.rotation(s);
            let c = kin.point(s, &seg.com);
            let imm = immersion_fraction(&c, rot, &seg.geometry, &self.water);
            fractions[s] = imm.fraction;
            if imm.fraction <= 0.0 {
                continue;
            }
            let v_world = kin.point_velocity_world(s, &c);
            let v_local = rot.transpose() * v_world;
            let w_local = spatial::angular(kin.twist(s));
            let (f, t) = drag_wrench(&v_local, &w_local, &self.gains[s], imm.fraction);
            let fb = buoyancy_force(art.segment_mass(s), &self.params.buoyancy, imm.fraction, v_world.z);
            out[s].force = rot * f + fb;
            out[s].torque = rot * t;
        }
        (out, HydroReport { fractions })
    }
}
