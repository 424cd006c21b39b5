//! The locomotion environment: episode lifecycle, command sampling, domain
//! randomization and the hybrid land/water stepping loop.

pub mod config;
pub mod log;
pub mod observation;
pub mod phase;
pub mod reward;

use std::collections::VecDeque;

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::EnvConfig;
use config::{CommandConfig, CommandMode, RandomizationConfig};
pub use observation::{assemble_observation, gravity_body, observation_dim, Observation};
pub use phase::{advance_phase, bezier_ref, wrap_angle, PhaseState};
pub use reward::{compute_reward, RewardInputs, RewardTerms};

use crate::actuation::{filter_target, residual_to_target, servo_torques, ActuationError, ActuatorState};
use crate::hydro::{mode_indicator_with, HydroModel};
use crate::morphology::{augment_backlash, default_model, load_model, ModelError, RobotModel};
use crate::rigidbody::{
    com_state, contact_forces, make_terrain, step_from, Articulation, ContactReport, Kinematics, RigidBodyError,
    SimState, TerrainError, TerrainField, GRAVITY,
};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("config error: {0}")]
    Config(String),
    #[error("phase {0} outside [-pi, pi]")]
    PhaseOutOfRange(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error(transparent)]
    Sim(#[from] RigidBodyError),
    #[error(transparent)]
    Actuation(#[from] ActuationError),
    #[error("action has {got} entries, expected {expected}")]
    ActionDimension { expected: usize, got: usize },
    #[error("step called before reset")]
    NotReset,
}

/// Fall threshold on the body-frame gravity z component.
pub const FALL_GRAVITY_Z: f64 = -0.3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Command {
    pub v_x: f64,
    pub v_y: f64,
    pub omega_z: f64,
}

impl Command {
    pub fn to_array(self) -> [f64; 3] {
        [self.v_x, self.v_y, self.omega_z]
    }
}

fn uniform<R: Rng>(rng: &mut R, r: [f64; 2]) -> f64 {
    if r[0] < r[1] {
        rng.random_range(r[0]..=r[1])
    } else {
        r[0]
    }
}

pub fn sample_command<R: Rng>(rng: &mut R, cfg: &CommandConfig) -> Command {
    match cfg.mode {
        CommandMode::Fixed => Command {
            v_x: cfg.fixed[0],
            v_y: cfg.fixed[1],
            omega_z: cfg.fixed[2],
        },
        CommandMode::Random => Command {
            v_x: uniform(rng, cfg.v_x),
            v_y: uniform(rng, cfg.v_y),
            omega_z: uniform(rng, cfg.omega_z),
        },
    }
}

/// Horizontal force on the root for `duration` seconds from `start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Push {
    pub start: f64,
    pub duration: f64,
    pub force: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizationDraw {
    pub friction: f64,
    pub mass_scales: Vec<f64>,
    pub joint_friction: f64,
    pub kp_scale: f64,
    pub kd_scale: f64,
    pub pushes: Vec<Push>,
}

impl RandomizationDraw {
    /// The identity draw: configured friction, unit scales, no pushes.
    pub fn nominal(num_segments: usize, friction: f64) -> Self {
        RandomizationDraw {
            friction,
            mass_scales: vec![1.0; num_segments],
            joint_friction: 0.0,
            kp_scale: 1.0,
            kd_scale: 1.0,
            pushes: Vec::new(),
        }
    }

    pub fn sample<R: Rng>(rng: &mut R, cfg: &RandomizationConfig, num_segments: usize, horizon: f64) -> Self {
        let friction = uniform(rng, cfg.friction);
        let mass_scales = (0..num_segments).map(|_| uniform(rng, cfg.mass_scale)).collect();
        let joint_friction = uniform(rng, cfg.joint_friction);
        let kp_scale = uniform(rng, cfg.kp_scale);
        let kd_scale = uniform(rng, cfg.kd_scale);
        let mut pushes = Vec::new();
        if cfg.push.enabled {
            let mut t = uniform(rng, cfg.push.interval);
            while t < horizon {
                let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let mag = uniform(rng, [0.0, cfg.push.max_force]);
                pushes.push(Push {
                    start: t,
                    duration: cfg.push.duration,
                    force: [mag * angle.cos(), mag * angle.sin()],
                });
                t += uniform(rng, cfg.push.interval);
            }
        }
        RandomizationDraw {
            friction,
            mass_scales,
            joint_friction,
            kp_scale,
            kd_scale,
            pushes,
        }
    }

    fn push_force(&self, t: f64) -> [f64; 2] {
        self.pushes
            .iter()
            .filter(|p| t >= p.start && t < p.start + p.duration)
            .fold([0.0; 2], |acc, p| [acc[0] + p.force[0], acc[1] + p.force[1]])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub sim: SimState,
    pub actuator: ActuatorState,
    pub phase: PhaseState,
    pub command: Command,
    pub draw: RandomizationDraw,
    /// Most recent action first; always three entries.
    pub action_history: VecDeque<Vec<f64>>,
    pub step_count: usize,
    pub rng: ChaCha8Rng,
    pub terrain_seed: u64,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepInfo {
    pub time: f64,
    pub sigma: u8,
    pub contacts: [bool; 4],
    /// All touching spheres, feet and body.
    pub contact_count: usize,
    pub com_position: [f64; 3],
    pub com_velocity: [f64; 3],
    /// CoM planar velocity in the heading frame.
    pub com_velocity_heading: [f64; 2],
    pub yaw_rate: f64,
    /// Front-girdle (root) CoM position.
    pub root_position: [f64; 3],
    pub terms: RewardTerms,
    pub fell: bool,
    pub diverged: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Something that maps a policy input to an action.
pub trait Policy {
    fn act(&mut self, input: &[f64]) -> Vec<f64>;
}

/// Holds the nominal posture.
#[derive(Debug, Clone, Copy)]
pub struct ZeroPolicy {
    pub n: usize,
}

impl Policy for ZeroPolicy {
    fn act(&mut self, _input: &[f64]) -> Vec<f64> {
        vec![0.0; self.n]
    }
}

/// `[v_x, v_y, ω_z] ++ observation`, the network input.
pub fn policy_input(command: &Command, obs: &Observation) -> Vec<f64> {
    let mut v = Vec::with_capacity(3 + obs.len());
    v.extend(command.to_array());
    obs.write_into(&mut v);
    v
}

pub fn build_model(cfg: &EnvConfig) -> Result<RobotModel, EnvError> {
    let model = match &cfg.model {
        Some(path) => load_model(path)?,
        None => default_model(),
    };
    Ok(match cfg.backlash_deg {
        Some(deg) => augment_backlash(&model, deg.to_radians())?,
        None => model,
    })
}

#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
    model: RobotModel,
    art: Articulation,
    terrain: TerrainField,
    hydro: Option<HydroModel>,
    state: Option<EnvState>,
    last_contacts: ContactReport,
}

impl Env {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let model = build_model(&config)?;
        if model.feet.is_none() {
            return Err(EnvError::Config("model must declare feet".into()));
        }
        let art = Articulation::new(&model);
        let terrain = make_terrain(config.terrain.kind, config.terrain.params, config.terrain.seed.unwrap_or(0))?;
        let hydro = config
            .water
            .clone()
            .map(|w| HydroModel::new(&model, config.hydro, w));
        Ok(Env {
            config,
            model,
            art,
            terrain,
            hydro,
            state: None,
            last_contacts: ContactReport::default(),
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn model(&self) -> &RobotModel {
        &self.model
    }

    pub fn articulation(&self) -> &Articulation {
        &self.art
    }

    pub fn terrain(&self) -> &TerrainField {
        &self.terrain
    }

    pub fn hydro(&self) -> Option<&HydroModel> {
        self.hydro.as_ref()
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    pub fn last_contacts(&self) -> &ContactReport {
        &self.last_contacts
    }

    pub fn num_actions(&self) -> usize {
        self.model.q_nominal.len()
    }

    pub fn observation_dim(&self) -> usize {
        observation_dim(self.num_actions(), self.config.observation.include_sigma)
    }

    /// Length of [`policy_input`].
    pub fn input_dim(&self) -> usize {
        3 + self.observation_dim()
    }

    pub fn episode_duration(&self) -> f64 {
        self.config.episode_length as f64 * self.config.control_dt
    }

    /// Start a new episode; every random quantity of the episode derives
    /// from `seed`.
    pub fn reset(&mut self, seed: u64) -> Result<Observation, EnvError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = &self.config;
        let terrain_seed = match cfg.terrain.seed {
            Some(s) => s,
            None => rng.random(),
        };
        if terrain_seed != self.terrain.seed {
            self.terrain = make_terrain(cfg.terrain.kind, cfg.terrain.params, terrain_seed)?;
        }
        let nseg = self.model.segments.len();
        let draw = if cfg.randomization.enabled {
            RandomizationDraw::sample(&mut rng, &cfg.randomization, nseg, self.episode_duration())
        } else {
            RandomizationDraw::nominal(nseg, cfg.contact.friction)
        };
        self.art = Articulation::with_mass_scales(&self.model, &draw.mass_scales);

        let total: f64 = cfg.start.regions.iter().map(|r| r.weight).sum();
        let mut pick = rng.random_range(0.0..total);
        let region = cfg
            .start
            .regions
            .iter()
            .find(|r| {
                pick -= r.weight;
                pick < 0.0
            })
            .unwrap_or_else(|| cfg.start.regions.last().expect("validated non-empty"));
        let x = uniform(&mut rng, region.x);
        let y = uniform(&mut rng, region.y);
        let yaw = uniform(&mut rng, region.yaw);
        let mut sim = SimState::nominal(&self.model);
        sim.base_quat = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw);
        sim.base_pos = Vector3::new(x, y, 0.0);
        sim.base_pos.z = match region.base_z {
            Some(z) => z,
            None => -self.lowest_clearance(&sim)?,
        };
        let command = sample_command(&mut rng, &cfg.command);
        let n = self.num_actions();
        let state = EnvState {
            sim,
            actuator: ActuatorState::at_nominal(&self.model),
            phase: PhaseState::new(cfg.phase.offsets, cfg.phase.freq),
            command,
            draw,
            action_history: VecDeque::from(vec![vec![0.0; n]; 3]),
            step_count: 0,
            rng,
            terrain_seed,
        };
        self.state = Some(state);
        let kin = self.art.kinematics(&self.state.as_ref().unwrap().sim)?;
        self.last_contacts = contact_forces(&self.model, &kin, &self.terrain, &self.contact_params()).0;
        let sigma = self.sigma(&kin);
        Ok(self.observe(sigma))
    }

    /// Smallest vertical gap between any contact sphere and the terrain.
    fn lowest_clearance(&self, sim: &SimState) -> Result<f64, EnvError> {
        let kin = self.art.kinematics(sim)?;
        let mut lowest = f64::INFINITY;
        for (s, seg) in self.model.segments.iter().enumerate() {
            for c in &seg.contacts {
                let p = kin.point(s, &c.offset);
                lowest = lowest.min(p.z - c.radius - self.terrain.height(p.x, p.y));
            }
        }
        Ok(lowest)
    }

    fn contact_params(&self) -> crate::rigidbody::ContactParams {
        let mut p = self.config.contact;
        if let Some(s) = &self.state {
            p.friction = s.draw.friction;
        }
        p
    }

    /// Land/water indicator at the front-girdle CoM.
    pub fn sigma(&self, kin: &Kinematics) -> u8 {
        match &self.hydro {
            Some(h) => {
                let root = self.model.root;
                let c = kin.point(root, &self.model.segments[root].com);
                mode_indicator_with(&c, &h.water, self.config.sigma_threshold)
            }
            None => 0,
        }
    }

    fn observe(&mut self, sigma: u8) -> Observation {
        let st = self.state.as_mut().expect("reset");
        let history: Vec<Vec<f64>> = st.action_history.iter().cloned().collect();
        let sigma = self.config.observation.include_sigma.then_some(sigma);
        assemble_observation(
            &st.sim,
            &self.model,
            &st.phase,
            &history,
            sigma,
            &self.config.observation,
            &self.config.noise,
            &mut st.rng,
        )
    }

    /// Advance one control period.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError> {
        let n = self.num_actions();
        if action.len() != n {
            return Err(EnvError::ActionDimension { expected: n, got: action.len() });
        }
        let contact = self.contact_params();
        let cfg = &self.config;
        let st = self.state.as_mut().ok_or(EnvError::NotReset)?;
        let clip = cfg.action_clip;
        let action: Vec<f64> = action
            .iter()
            .map(|a| if a.is_finite() { a.clamp(-clip, clip) } else { 0.0 })
            .collect();
        let q_des = residual_to_target(&action, &self.model, cfg.action_scale)?;
        let target = filter_target(&mut st.actuator, &q_des, cfg.servo.filter_alpha)?;
        st.action_history.pop_back();
        st.action_history.push_front(action);

        let dt = cfg.control_dt / cfg.substeps as f64;
        let root = self.model.root;
        let mut tau = vec![0.0; self.model.joints.len()];
        let mut diverged = false;
        let mut report = ContactReport::default();
        for _ in 0..cfg.substeps {
            let kin = self.art.kinematics(&st.sim)?;
            let (rep, mut ext) = contact_forces(&self.model, &kin, &self.terrain, &contact);
            report = rep;
            if let Some(h) = &self.hydro {
                let (hw, _) = h.wrenches(&self.model, &self.art, &kin);
                for (e, w) in ext.iter_mut().zip(hw) {
                    e.force += w.force;
                    e.torque += w.torque;
                }
            }
            let push = st.draw.push_force(st.sim.time);
            ext[root].force += Vector3::new(push[0], push[1], 0.0);
            servo_torques(
                &self.model,
                &target,
                &st.sim.q,
                &st.sim.qdot,
                &cfg.servo,
                st.draw.kp_scale,
                st.draw.kd_scale,
                st.draw.joint_friction,
                &mut tau,
            );
            match step_from(&self.art, &kin, &st.sim, &tau, &ext, dt, &GRAVITY) {
                Ok(next) => st.sim = next,
                Err(RigidBodyError::Diverged { .. }) => {
                    diverged = true;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        self.last_contacts = report.clone();
        st.phase = advance_phase(&st.phase, cfg.control_dt);
        st.step_count += 1;

        let kin = self.art.kinematics(&st.sim)?;
        let com = com_state(&self.art, &self.model, &kin);
        let rot = kin.rotation(root);
        let yaw = rot[(1, 0)].atan2(rot[(0, 0)]);
        let (s, c) = yaw.sin_cos();
        let v_head = [c * com.velocity.x + s * com.velocity.y, -s * com.velocity.x + c * com.velocity.y];
        let root_pos = kin.point(root, &self.model.segments[root].com);
        let sigma = match &self.hydro {
            Some(h) => mode_indicator_with(&root_pos, &h.water, cfg.sigma_threshold),
            None => 0,
        };
        let feet = self.model.feet.expect("checked in new");
        let foot_heights = feet.map(|f| {
            self.model.segments[f]
                .contacts
                .iter()
                .map(|c| {
                    let p = kin.point(f, &c.offset);
                    p.z - c.radius - self.terrain.height(p.x, p.y)
                })
                .fold(f64::INFINITY, f64::min)
                .max(0.0)
        });
        let act = self.model.actuated_joints();
        let qdot_a: Vec<f64> = act.iter().map(|&j| st.sim.qdot[j]).collect();
        let tau_a: Vec<f64> = act.iter().map(|&j| tau[j]).collect();
        let terms = if diverged {
            RewardTerms::default()
        } else {
            compute_reward(
                &RewardInputs {
                    command: st.command,
                    v_com_xy: v_head,
                    yaw_rate: com.yaw_rate,
                    qdot: &qdot_a,
                    tau: &tau_a,
                    foot_heights,
                    phi: st.phase.phi,
                    sigma,
                },
                &cfg.reward,
            )?
        };
        let g = gravity_body(&st.sim.base_quat);
        let fell = !diverged && g.z > FALL_GRAVITY_Z;
        let truncated = st.step_count >= cfg.episode_length;
        let info = StepInfo {
            time: st.sim.time,
            sigma,
            contacts: report.feet.map(|f| f.in_contact),
            contact_count: report.total_contacts(),
            com_position: com.position.into(),
            com_velocity: com.velocity.into(),
            com_velocity_heading: v_head,
            yaw_rate: com.yaw_rate,
            root_position: root_pos.into(),
            terms,
            fell,
            diverged,
            truncated: truncated && !fell && !diverged,
        };
        let observation = self.observe(sigma);
        Ok(StepResult {
            observation,
            reward: terms.total,
            done: diverged || fell || truncated,
            info,
        })
    }
}
