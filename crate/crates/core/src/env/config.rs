//! Environment configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::actuation::ServoParams;
use crate::hydro::{HydroParams, WaterRegion};
use crate::rigidbody::{ContactParams, TerrainKind, TerrainParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Model file; the shipped default model when absent.
    pub model: Option<PathBuf>,
    /// Girdle backlash range in degrees; no backlash joints when absent.
    pub backlash_deg: Option<f64>,
    pub episode_length: usize,
    /// Control period, s.
    pub control_dt: f64,
    pub substeps: usize,
    pub action_scale: f64,
    pub action_clip: f64,
    pub terrain: TerrainConfig,
    pub contact: ContactParams,
    /// Water body; land-only when absent.
    pub water: Option<WaterRegion>,
    pub hydro: HydroParams,
    /// σ is 1 when the front-girdle CoM is below `surface_z + sigma_threshold`.
    pub sigma_threshold: f64,
    pub servo: ServoParams,
    pub command: CommandConfig,
    pub phase: PhaseConfig,
    pub reward: RewardConfig,
    pub observation: ObservationConfig,
    pub noise: NoiseConfig,
    pub randomization: RandomizationConfig,
    pub start: StartConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            model: None,
            backlash_deg: None,
            episode_length: 1000,
            control_dt: 0.02,
            substeps: 10,
            action_scale: 0.5,
            action_clip: 1.0,
            terrain: TerrainConfig::default(),
            contact: ContactParams::default(),
            water: None,
            hydro: HydroParams::default(),
            sigma_threshold: 0.0,
            servo: ServoParams::default(),
            command: CommandConfig::default(),
            phase: PhaseConfig::default(),
            reward: RewardConfig::default(),
            observation: ObservationConfig::default(),
            noise: NoiseConfig::default(),
            randomization: RandomizationConfig::default(),
            start: StartConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainConfig {
    pub kind: TerrainKind,
    pub params: TerrainParams,
    /// Terrain seed; drawn from the episode stream when absent.
    pub seed: Option<u64>,
}

impl Default for TerrainConfig {
    fn default() -> Self {
        TerrainConfig {
            kind: TerrainKind::Flat,
            params: TerrainParams {
                flat_radius: 0.3,
                ..TerrainParams::default()
            },
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandMode {
    Random,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommandConfig {
    pub mode: CommandMode,
    /// (v_x, v_y, ω_z) used in fixed mode.
    pub fixed: [f64; 3],
    pub v_x: [f64; 2],
    pub v_y: [f64; 2],
    pub omega_z: [f64; 2],
}

impl Default for CommandConfig {
    fn default() -> Self {
        CommandConfig {
            mode: CommandMode::Random,
            fixed: [0.3, 0.0, 0.0],
            v_x: [0.0, 0.3],
            v_y: [-0.15, 0.15],
            omega_z: [-0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    pub freq: f64,
    /// Initial phase per foot (FL, FR, HL, HR), rad.
    pub offsets: [f64; 4],
}

impl Default for PhaseConfig {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        PhaseConfig {
            freq: 1.0,
            offsets: [0.0, -pi, -pi, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Weights before multiplication by `dt`.
    pub w_v: f64,
    pub w_omega: f64,
    pub w_energy: f64,
    pub w_phase: f64,
    pub dt: f64,
    pub sigma_v: f64,
    pub sigma_omega: f64,
    pub sigma_phase: f64,
    pub swing_apex: f64,
    /// Drop the foot-phase term while σ = 1.
    pub gate_phase_in_water: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            w_v: 1.0,
            w_omega: 0.5,
            w_energy: 1e-3,
            w_phase: 1.0,
            dt: 0.02,
            sigma_v: 0.25,
            sigma_omega: 0.25,
            sigma_phase: 4e-4,
            swing_apex: 0.03,
            gate_phase_in_water: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointChannel {
    /// Joint velocities (default).
    Qdot,
    /// Joint positions.
    Q,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationConfig {
    pub first_channel: JointChannel,
    /// Append the land/water indicator.
    pub include_sigma: bool,
}

impl Default for ObservationConfig {
    fn default() -> Self {
        ObservationConfig {
            first_channel: JointChannel::Qdot,
            include_sigma: false,
        }
    }
}

/// Half-widths of the bounded uniform noise per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub qdot: f64,
    pub dq: f64,
    pub omega: f64,
    pub gravity: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            enabled: true,
            qdot: 0.5,
            dq: 0.01,
            omega: 0.1,
            gravity: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PushConfig {
    pub enabled: bool,
    /// Seconds between pushes.
    pub interval: [f64; 2],
    /// Maximum horizontal force, N.
    pub max_force: f64,
    pub duration: f64,
}

impl Default for PushConfig {
    fn default() -> Self {
        PushConfig {
            enabled: true,
            interval: [3.0, 6.0],
            max_force: 5.0,
            duration: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationConfig {
    pub enabled: bool,
    pub friction: [f64; 2],
    pub mass_scale: [f64; 2],
    pub joint_friction: [f64; 2],
    pub kp_scale: [f64; 2],
    pub kd_scale: [f64; 2],
    pub push: PushConfig,
}

impl Default for RandomizationConfig {
    fn default() -> Self {
        RandomizationConfig {
            enabled: true,
            friction: [0.4, 1.2],
            mass_scale: [0.9, 1.1],
            joint_friction: [0.0, 0.05],
            kp_scale: [0.85, 1.15],
            kd_scale: [0.85, 1.15],
            push: PushConfig::default(),
        }
    }
}

/// Where episodes start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartConfig {
    /// Candidate start regions with relative weights.
    pub regions: Vec<StartRegion>,
}

impl Default for StartConfig {
    fn default() -> Self {
        StartConfig {
            regions: vec![StartRegion::default()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartRegion {
    pub name: String,
    pub weight: f64,
    pub x: [f64; 2],
    pub y: [f64; 2],
    /// Initial yaw range, rad.
    pub yaw: [f64; 2],
    /// Place the base at this height instead of on the terrain (for
    /// floating starts).
    pub base_z: Option<f64>,
}

impl Default for StartRegion {
    fn default() -> Self {
        StartRegion {
            name: "land".into(),
            weight: 1.0,
            x: [0.0, 0.0],
            y: [0.0, 0.0],
            yaw: [0.0, 0.0],
            base_z: None,
        }
    }
}

fn range_ok(r: &[f64; 2]) -> bool {
    r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]
}

impl EnvConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, EnvError> {
        toml::from_str(text).map_err(|e| EnvError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EnvError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::Config(m.to_string()));
        if self.episode_length == 0 {
            return bad("episode_length must be positive");
        }
        if !(self.control_dt > 0.0) || self.substeps == 0 {
            return bad("control_dt and substeps must be positive");
        }
        if !(self.action_scale > 0.0) || !(self.action_clip > 0.0) {
            return bad("action_scale and action_clip must be positive");
        }
        self.servo.validate().map_err(|e| EnvError::Config(e.to_string()))?;
        let c = &self.command;
        if !range_ok(&c.v_x) || !range_ok(&c.v_y) || !range_ok(&c.omega_z) {
            return bad("command ranges must satisfy lo <= hi");
        }
        if !(self.phase.freq > 0.0) {
            return bad("phase.freq must be positive");
        }
        let r = &self.reward;
        if !(r.sigma_v > 0.0 && r.sigma_omega > 0.0 && r.sigma_phase > 0.0) {
            return bad("reward kernel widths must be positive");
        }
        let rd = &self.randomization;
        for (name, range) in [
            ("friction", rd.friction),
            ("mass_scale", rd.mass_scale),
            ("joint_friction", rd.joint_friction),
            ("kp_scale", rd.kp_scale),
            ("kd_scale", rd.kd_scale),
            ("push.interval", rd.push.interval),
        ] {
            if !range_ok(&range) {
                return Err(EnvError::Config(format!("randomization.{name} must satisfy lo <= hi")));
            }
        }
        if rd.mass_scale[0] <= 0.0 || rd.friction[0] < 0.0 {
            return bad("randomized masses must stay positive and friction non-negative");
        }
        if rd.push.enabled && rd.push.interval[0] <= 0.0 {
            return bad("push interval must be positive");
        }
        if let Some(w) = &self.water {
            w.validate().map_err(EnvError::Config)?;
        }
        if self.start.regions.is_empty() || self.start.regions.iter().any(|s| !(s.weight >= 0.0)) {
            return bad("start.regions must be non-empty with non-negative weights");
        }
        if !(self.start.regions.iter().map(|s| s.weight).sum::<f64>() > 0.0) {
            return bad("start.regions weights must not all be zero");
        }
        for s in &self.start.regions {
            if !range_ok(&s.x) || !range_ok(&s.y) || !range_ok(&s.yaw) {
                return Err(EnvError::Config(format!("start region `{}` ranges must satisfy lo <= hi", s.name)));
            }
        }
        Ok(())
    }
}
