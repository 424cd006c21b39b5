//! Per-foot gait clock and the swing-height reference.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::EnvError;

/// Wrap an angle to `[−π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    /// FL, FR, HL, HR.
    pub phi: [f64; 4],
    pub freq: f64,
}

impl PhaseState {
    pub fn new(offsets: [f64; 4], freq: f64) -> Self {
        PhaseState {
            phi: offsets.map(wrap_angle),
            freq,
        }
    }

    /// `(sin φ_j, cos φ_j)` per foot.
    pub fn features(&self) -> [f64; 8] {
        let mut f = [0.0; 8];
        for (j, p) in self.phi.iter().enumerate() {
            f[2 * j] = p.sin();
            f[2 * j + 1] = p.cos();
        }
        f
    }
}

pub fn advance_phase(phase: &PhaseState, dt: f64) -> PhaseState {
    let d = 2.0 * PI * phase.freq * dt;
    PhaseState {
        phi: phase.phi.map(|p| wrap_angle(p + d)),
        freq: phase.freq,
    }
}

/// Swing-foot height reference.
///
/// Stance (`φ < 0`) is flat. Swing is the quartic Bézier curve with control
/// heights `(0, 0, 8/3·apex, 0, 0)` over `u = φ/π`, which simplifies to
/// `16·apex·u²(1−u)²`: zero at both ends and exactly `apex` at `u = ½`.
pub fn bezier_ref(phi: f64, swing_apex: f64) -> Result<f64, EnvError> {
    const SLACK: f64 = 1e-9;
    if !(-PI - SLACK..=PI + SLACK).contains(&phi) {
        return Err(EnvError::PhaseOutOfRange(phi));
    }
    if phi < 0.0 {
        return Ok(0.0);
    }
    let u = (phi / PI).min(1.0);
    Ok(bezier_quartic([0.0, 0.0, 8.0 / 3.0 * swing_apex, 0.0, 0.0], u))
}

fn bezier_quartic(p: [f64; 5], u: f64) -> f64 {
    let v = 1.0 - u;
    let basis = [v.powi(4), 4.0 * u * v.powi(3), 6.0 * u * u * v * v, 4.0 * u.powi(3) * v, u.powi(4)];
    p.iter().zip(basis).map(|(c, b)| c * b).sum()
}
