//! Table-I reward terms and their weighted sum.

use serde::{Deserialize, Serialize};

use super::config::RewardConfig;
use super::phase::bezier_ref;
use super::{Command, EnvError};

/// Quantities the reward depends on, already expressed in the heading frame.
#[derive(Debug, Clone)]
pub struct RewardInputs<'a> {
    pub command: Command,
    /// CoM planar velocity in the heading frame.
    pub v_com_xy: [f64; 2],
    /// Aggregate CoM yaw rate.
    pub yaw_rate: f64,
    /// Actuated joint velocities and applied torques.
    pub qdot: &'a [f64],
    pub tau: &'a [f64],
    /// Foot clearance above the local terrain, FL FR HL HR.
    pub foot_heights: [f64; 4],
    pub phi: [f64; 4],
    pub sigma: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardTerms {
    pub r_v: f64,
    pub r_omega: f64,
    pub r_energy: f64,
    pub r_phase: f64,
    /// Effective weights (`w·dt`, phase gated in water).
    pub weights: [f64; 4],
    pub total: f64,
}

impl RewardTerms {
    pub fn weighted(&self) -> [f64; 4] {
        let r = [self.r_v, self.r_omega, self.r_energy, self.r_phase];
        std::array::from_fn(|i| self.weights[i] * r[i])
    }
}

#[inline]
pub fn kernel(err_sq: f64, sigma: f64) -> f64 {
    (-err_sq / sigma).exp()
}

pub fn compute_reward(inp: &RewardInputs, cfg: &RewardConfig) -> Result<RewardTerms, EnvError> {
    let ex = inp.command.v_x - inp.v_com_xy[0];
    let ey = inp.command.v_y - inp.v_com_xy[1];
    let r_v = kernel(ex * ex + ey * ey, cfg.sigma_v);
    let ew = inp.command.omega_z - inp.yaw_rate;
    let r_omega = kernel(ew * ew, cfg.sigma_omega);
    let r_energy = -inp.qdot.iter().zip(inp.tau).map(|(q, t)| (q * t).abs()).sum::<f64>();
    let mut phase_err = 0.0;
    for j in 0..4 {
        let z_ref = bezier_ref(inp.phi[j], cfg.swing_apex)?;
        phase_err += (inp.foot_heights[j] - z_ref).powi(2);
    }
    let r_phase = kernel(phase_err, cfg.sigma_phase);
    let gate = if cfg.gate_phase_in_water && inp.sigma == 1 { 0.0 } else { 1.0 };
    let weights = [cfg.w_v * cfg.dt, cfg.w_omega * cfg.dt, cfg.w_energy * cfg.dt, gate * cfg.w_phase * cfg.dt];
    let mut terms = RewardTerms {
        r_v,
        r_omega,
        r_energy,
        r_phase,
        weights,
        total: 0.0,
    };
    terms.total = terms.weighted().iter().sum();
    Ok(terms)
}
