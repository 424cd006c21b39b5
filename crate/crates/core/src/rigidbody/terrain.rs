//! Procedural height fields.
//!
//! Hill and valley fields are raised-cosine bumps `A(1+cos(πr/R))/2` with
//! disjoint supports, one per jittered grid cell, so the steepest slope is
//! exactly `Aπ/(2R)` and never exceeds the configured maximum. Rugged
//! fields are smoothstep-interpolated value noise with lattice values in
//! `[0, max_roughness]`; the interpolant is a convex combination, so the
//! peak-to-peak height never exceeds `max_roughness`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainKind {
    Flat,
    Hill,
    Rugged,
    Valley,
    /// Hills plus rugged noise.
    Composite,
    /// Flat runway, linear ramp down, then a flat floor (amphibious arena).
    Bank,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainParams {
    pub max_slope_deg: f64,
    pub max_roughness: f64,
    /// Support radius of one hill/valley bump, m.
    pub bump_radius: f64,
    /// Rugged-noise lattice spacing, m.
    pub cell_size: f64,
    /// Bank: x where the ramp begins.
    pub bank_start_x: f64,
    /// Bank: horizontal ramp length.
    pub bank_length: f64,
    /// Bank: floor depth below z = 0 after the ramp.
    pub bank_depth: f64,
    /// Radius around the origin kept flat (spawn pad), m.
    pub flat_radius: f64,
}

impl Default for TerrainParams {
    fn default() -> Self {
        TerrainParams {
            max_slope_deg: 15.0,
            max_roughness: 0.04,
            bump_radius: 0.6,
            cell_size: 0.12,
            bank_start_x: 2.0,
            bank_length: 1.0,
            bank_depth: 0.3,
            flat_radius: 0.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TerrainError {
    #[error("terrain parameter `{0}` out of range: {1}")]
    InvalidParam(&'static str, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainField {
    pub kind: TerrainKind,
    pub params: TerrainParams,
    pub seed: u64,
}

const FD_STEP: f64 = 1e-4;

impl TerrainField {
    pub fn flat() -> Self {
        TerrainField {
            kind: TerrainKind::Flat,
            params: TerrainParams::default(),
            seed: 0,
        }
    }

    /// Maximum slope, degrees (0 for fields without hills).
    pub fn max_slope(&self) -> f64 {
        match self.kind {
            TerrainKind::Hill | TerrainKind::Valley | TerrainKind::Composite => self.params.max_slope_deg,
            TerrainKind::Bank => (self.params.bank_depth / self.params.bank_length).atan().to_degrees(),
            _ => 0.0,
        }
    }

    pub fn max_roughness(&self) -> f64 {
        match self.kind {
            TerrainKind::Rugged | TerrainKind::Composite => self.params.max_roughness,
            _ => 0.0,
        }
    }

    pub fn height(&self, x: f64, y: f64) -> f64 {
        let p = &self.params;
        let h = match self.kind {
            TerrainKind::Flat => 0.0,
            TerrainKind::Hill => self.bumps(x, y, 1.0),
            TerrainKind::Valley => self.bumps(x, y, -1.0),
            TerrainKind::Rugged => self.noise(x, y),
            TerrainKind::Composite => self.bumps(x, y, 1.0) + self.noise(x, y),
            TerrainKind::Bank => {
                if x <= p.bank_start_x {
                    0.0
                } else if x >= p.bank_start_x + p.bank_length {
                    -p.bank_depth
                } else {
                    -p.bank_depth * (x - p.bank_start_x) / p.bank_length
                }
            }
        };
        if p.flat_radius > 0.0 && self.kind != TerrainKind::Bank {
            // blend to zero inside the spawn pad
            let r = (x * x + y * y).sqrt();
            let w = smoothstep(((r - p.flat_radius) / p.flat_radius).clamp(0.0, 1.0));
            h * w
        } else {
            h
        }
    }

    /// Central-difference gradient (∂h/∂x, ∂h/∂y).
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        if self.kind == TerrainKind::Flat {
            return (0.0, 0.0);
        }
        let hx = (self.height(x + FD_STEP, y) - self.height(x - FD_STEP, y)) / (2.0 * FD_STEP);
        let hy = (self.height(x, y + FD_STEP) - self.height(x, y - FD_STEP)) / (2.0 * FD_STEP);
        (hx, hy)
    }

    fn bump_amplitude(&self) -> f64 {
        let p = &self.params;
        p.max_slope_deg.to_radians().tan() * 2.0 * p.bump_radius / std::f64::consts::PI
    }

    fn bumps(&self, x: f64, y: f64, sign: f64) -> f64 {
        let r_sup = self.params.bump_radius;
        let cell = 2.0 * r_sup * BUMP_CELL_FACTOR;
        let jitter = (cell - 2.0 * r_sup) / 2.0;
        let ci = (x / cell).floor() as i64;
        let cj = (y / cell).floor() as i64;
        let (u1, u2, u3) = (
            unit(self.seed, ci, cj, 1),
            unit(self.seed, ci, cj, 2),
            unit(self.seed, ci, cj, 3),
        );
        let cx = (ci as f64 + 0.5) * cell + (2.0 * u1 - 1.0) * jitter;
        let cy = (cj as f64 + 0.5) * cell + (2.0 * u2 - 1.0) * jitter;
        let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
        if r >= r_sup {
            return 0.0;
        }
        let amp = self.bump_amplitude() * (0.5 + 0.5 * u3);
        sign * amp * 0.5 * (1.0 + (std::f64::consts::PI * r / r_sup).cos())
    }

    fn noise(&self, x: f64, y: f64) -> f64 {
        let c = self.params.cell_size;
        let (gx, gy) = (x / c, y / c);
        let (i, j) = (gx.floor() as i64, gy.floor() as i64);
        let (fx, fy) = (smoothstep(gx - i as f64), smoothstep(gy - j as f64));
        let m = self.params.max_roughness;
        let v = |a: i64, b: i64| m * unit(self.seed, a, b, 7);
        let top = v(i, j) * (1.0 - fx) + v(i + 1, j) * fx;
        let bot = v(i, j + 1) * (1.0 - fx) + v(i + 1, j + 1) * fx;
        top * (1.0 - fy) + bot * fy
    }
}

/// Bump cells are this much wider than the bump support so neighbouring
/// supports never overlap.
const BUMP_CELL_FACTOR: f64 = 1.25;

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic uniform in [0, 1) keyed by (seed, lattice cell, salt).
fn unit(seed: u64, i: i64, j: i64, salt: u64) -> f64 {
    let h = splitmix(splitmix(splitmix(seed ^ salt.wrapping_mul(0x51_7cc1_b727_220a)) ^ i as u64) ^ (j as u64).rotate_left(17));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Build a terrain field, validating parameter ranges.
pub fn make_terrain(kind: TerrainKind, params: TerrainParams, seed: u64) -> Result<TerrainField, TerrainError> {
    let needs_slope = matches!(kind, TerrainKind::Hill | TerrainKind::Valley | TerrainKind::Composite);
    let needs_rough = matches!(kind, TerrainKind::Rugged | TerrainKind::Composite);
    if needs_slope && !(params.max_slope_deg >= 0.0 && params.max_slope_deg < 60.0) {
        return Err(TerrainError::InvalidParam("max_slope_deg", params.max_slope_deg));
    }
    if needs_slope && !(params.bump_radius > 0.0) {
        return Err(TerrainError::InvalidParam("bump_radius", params.bump_radius));
    }
    if needs_rough && !(params.max_roughness >= 0.0 && params.max_roughness <= 0.5) {
        return Err(TerrainError::InvalidParam("max_roughness", params.max_roughness));
    }
    if needs_rough && !(params.cell_size > 0.0) {
        return Err(TerrainError::InvalidParam("cell_size", params.cell_size));
    }
    if kind == TerrainKind::Bank {
        if !(params.bank_length > 0.0) {
            return Err(TerrainError::InvalidParam("bank_length", params.bank_length));
        }
        if !(params.bank_depth >= 0.0) {
            return Err(TerrainError::InvalidParam("bank_depth", params.bank_depth));
        }
    }
    if !(params.flat_radius >= 0.0) {
        return Err(TerrainError::InvalidParam("flat_radius", params.flat_radius));
    }
    Ok(TerrainField { kind, params, seed })
}
