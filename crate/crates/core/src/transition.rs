//! Land→water transition: amphibious arena, scripted evaluation and
//! traveling-wave analysis of the axial joints.

use std::io::Write;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::config::{CommandMode, StartRegion};
use crate::env::{policy_input, Env, EnvConfig, EnvError, Policy};
use crate::hydro::{Extent, WaterRegion};
use crate::morphology::{Foot, RobotModel};
use crate::rigidbody::TerrainKind;

pub const TRACE_SCHEMA: &str = "transition-trace-v1";

/// Runway along +x, a ramp under the surface, then a deep pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArenaConfig {
    pub runway_length: f64,
    pub bank_length: f64,
    /// Floor depth below the surface after the ramp.
    pub bank_depth: f64,
    pub water_length: f64,
    /// Half-width of the pool in y.
    pub half_width: f64,
    pub surface_z: f64,
    /// Scripted evaluation start (on land, facing +x).
    pub eval_start_x: f64,
    /// Relative weights of land, water and boundary starts in training.
    pub mixture: [f64; 3],
}

impl Default for ArenaConfig {
    fn default() -> Self {
        ArenaConfig {
            runway_length: 2.0,
            bank_length: 1.0,
            bank_depth: 0.3,
            water_length: 3.0,
            half_width: 3.0,
            surface_z: 0.0,
            eval_start_x: 1.2,
            mixture: [0.5, 0.3, 0.2],
        }
    }
}

#[derive(Debug, Error)]
pub enum TransitionError {
    #[error("invalid arena: {0}")]
    InvalidArena(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("not enough oscillation: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ArenaConfig {
    pub fn validate(&self) -> Result<(), TransitionError> {
        let bad = |m: &str| Err(TransitionError::InvalidArena(m.into()));
        if !(self.runway_length > 0.0 && self.bank_length > 0.0 && self.water_length > 0.0 && self.half_width > 0.0) {
            return bad("lengths must be positive");
        }
        if !(self.bank_depth > 0.0) {
            return bad("bank_depth must be positive");
        }
        if !(self.eval_start_x < self.runway_length) {
            return bad("eval start must lie on the runway");
        }
        if self.mixture.iter().any(|w| !(*w >= 0.0)) || !(self.mixture.iter().sum::<f64>() > 0.0) {
            return bad("mixture weights must be non-negative and not all zero");
        }
        Ok(())
    }

    pub fn water_region(&self) -> WaterRegion {
        WaterRegion {
            surface_z: self.surface_z,
            extent: Some(Extent {
                x_min: self.runway_length,
                x_max: self.runway_length + self.bank_length + self.water_length,
                y_min: -self.half_width,
                y_max: self.half_width,
            }),
            density_scale: 1.0,
        }
    }

    fn pool_x(&self) -> [f64; 2] {
        let x0 = self.runway_length + self.bank_length;
        [x0 + 0.5, x0 + self.water_length - 0.5]
    }

    /// Training start mixture: land runway, deep pool, ramp.
    pub fn start_regions(&self) -> Vec<StartRegion> {
        let yaw = [-0.3, 0.3];
        let [land, water, boundary] = self.mixture;
        vec![
            StartRegion {
                name: "land".into(),
                weight: land,
                x: [0.0, self.runway_length - 0.5],
                y: [-0.3, 0.3],
                yaw,
                base_z: None,
            },
            StartRegion {
                name: "water".into(),
                weight: water,
                x: self.pool_x(),
                y: [-0.3, 0.3],
                yaw: [-std::f64::consts::PI, std::f64::consts::PI],
                base_z: Some(self.surface_z - 0.05),
            },
            StartRegion {
                name: "boundary".into(),
                weight: boundary,
                x: [self.runway_length - 0.3, self.runway_length + 0.5 * self.bank_length],
                y: [-0.3, 0.3],
                yaw,
                base_z: None,
            },
        ]
    }
}

/// Amphibious training configuration on top of `base`: bank terrain, pool,
/// σ observation and the start mixture.
pub fn transition_config(base: &EnvConfig, arena: &ArenaConfig) -> Result<EnvConfig, TransitionError> {
    arena.validate()?;
    let mut cfg = base.clone();
    cfg.terrain.kind = TerrainKind::Bank;
    cfg.terrain.params.bank_start_x = arena.runway_length;
    cfg.terrain.params.bank_length = arena.bank_length;
    cfg.terrain.params.bank_depth = arena.bank_depth;
    cfg.water = Some(arena.water_region());
    cfg.observation.include_sigma = true;
    cfg.start.regions = arena.start_regions();
    Ok(cfg)
}

pub fn build_transition_env(base: &EnvConfig, arena: &ArenaConfig) -> Result<Env, TransitionError> {
    Ok(Env::new(transition_config(base, arena)?)?)
}

/// Scripted evaluation: fixed forward command, on land facing the water,
/// no noise, no randomization, one episode spanning `duration`.
pub fn eval_config(base: &EnvConfig, arena: &ArenaConfig, v_cmd: f64, duration: f64) -> Result<EnvConfig, TransitionError> {
    let mut cfg = transition_config(base, arena)?;
    cfg.command.mode = CommandMode::Fixed;
    cfg.command.fixed = [v_cmd, 0.0, 0.0];
    cfg.noise.enabled = false;
    cfg.randomization.enabled = false;
    cfg.episode_length = ((duration / cfg.control_dt).round() as usize).max(1);
    cfg.start.regions = vec![StartRegion {
        name: "scripted".into(),
        weight: 1.0,
        x: [arena.eval_start_x; 2],
        y: [0.0; 2],
        yaw: [0.0; 2],
        base_z: None,
    }];
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: f64,
    pub sigma: u8,
    pub q: Vec<f64>,
    pub contacts: [bool; 4],
    pub contact_count: usize,
    pub com_velocity: [f64; 3],
    pub root_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TransitionTrace {
    pub joint_names: Vec<String>,
    pub rows: Vec<TraceRow>,
    /// Integration diverged; the trace stops at the last finite state.
    pub diverged: bool,
    pub fell: bool,
}

/// Run `policy` from the scripted start for `duration` seconds (50 Hz rows).
/// A fall does not stop the rollout; divergence does, and is recorded.
pub fn run_transition_eval(
    env: &mut Env,
    policy: &mut dyn Policy,
    seed: u64,
) -> Result<TransitionTrace, TransitionError> {
    let mut obs = env.reset(seed)?;
    let model = env.model().clone();
    let mut trace = TransitionTrace {
        joint_names: model.joints.iter().map(|j| j.name.clone()).collect(),
        ..Default::default()
    };
    for _ in 0..env.config().episode_length {
        let command = env.state().expect("reset").command;
        let action = policy.act(&policy_input(&command, &obs));
        let r = env.step(&action)?;
        let sim = &env.state().expect("reset").sim;
        trace.rows.push(TraceRow {
            time: r.info.time,
            sigma: r.info.sigma,
            q: sim.q.clone(),
            contacts: r.info.contacts,
            contact_count: r.info.contact_count,
            com_velocity: r.info.com_velocity,
            root_x: r.info.root_position[0],
        });
        trace.fell |= r.info.fell;
        if r.info.diverged {
            trace.diverged = true;
            break;
        }
        obs = r.observation;
    }
    Ok(trace)
}

impl TransitionTrace {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["time", "sigma"].map(String::from).to_vec();
        h.extend(Foot::ALL.iter().map(|f| format!("contact_{}", f.label())));
        h.extend(["contact_count", "com_vx", "com_vy", "com_vz", "root_x"].map(String::from));
        h.extend(self.joint_names.iter().map(|n| format!("q_{n}")));
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TransitionError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let num = |x: f64| format!("{x:.6}");
        for r in &self.rows {
            let mut rec = vec![num(r.time), r.sigma.to_string()];
            rec.extend(r.contacts.map(|c| u8::from(c).to_string()));
            rec.push(r.contact_count.to_string());
            rec.extend(r.com_velocity.map(num));
            rec.push(num(r.root_x));
            rec.extend(r.q.iter().map(|&x| num(x)));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Number of 0→1 σ switches.
    pub fn sigma_entries(&self) -> usize {
        self.rows.windows(2).filter(|w| w[0].sigma == 0 && w[1].sigma == 1).count()
            + usize::from(self.rows.first().is_some_and(|r| r.sigma == 1))
    }

    /// Time of the first row with σ = 1.
    pub fn entry_time(&self) -> Option<f64> {
        self.rows.iter().find(|r| r.sigma == 1).map(|r| r.time)
    }

    /// First time at or after water entry with no touching sphere.
    pub fn contacts_zero_time(&self) -> Option<f64> {
        let entry = self.entry_time()?;
        self.rows
            .iter()
            .find(|r| r.time >= entry && r.contact_count == 0)
            .map(|r| r.time)
    }

    /// Last time any sphere touched the ground.
    pub fn last_contact_time(&self) -> Option<f64> {
        self.rows.iter().rev().find(|r| r.contact_count > 0).map(|r| r.time)
    }

    /// Axial joint signals sampled from `t_start` on.
    pub fn joint_series(&self, joints: &[usize], t_start: f64) -> Vec<Vec<f64>> {
        joints
            .iter()
            .map(|&j| self.rows.iter().filter(|r| r.time >= t_start).map(|r| r.q[j]).collect())
            .collect()
    }

    pub fn sample_period(&self) -> Option<f64> {
        match self.rows.as_slice() {
            [a, b, ..] => Some(b.time - a.time),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveAnalysis {
    /// Dominant frequency of each joint, Hz.
    pub joint_frequencies: Vec<f64>,
    /// Peak of the summed spectrum, Hz.
    pub dominant_frequency: f64,
    pub bin_width: f64,
    /// Phase lag of joint i+1 behind joint i, rad.
    pub phase_lags: Vec<f64>,
    /// All lags positive: the wave travels head to tail.
    pub traveling_wave: bool,
}

/// Lags below this are treated as a standing wave.
pub const MIN_WAVE_LAG: f64 = 0.02;

fn magnitude_spectrum(x: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf[..x.len() / 2 + 1].iter().map(|c| c.norm()).collect()
}

fn cross_correlation(a: &[f64], b: &[f64], lag: isize) -> f64 {
    // unbiased estimate of E[a(t)·b(t+lag)]
    let n = a.len() as isize;
    let (lo, hi) = (0.max(-lag), n.min(n - lag));
    let s: f64 = (lo..hi).map(|t| a[t as usize] * b[(t + lag) as usize]).sum();
    s / (hi - lo) as f64
}

/// Spectral peak and cross-correlation lags of the given signals, ordered
/// head to tail, sampled every `dt` seconds.
pub fn analyze_traveling_wave(signals: &[Vec<f64>], dt: f64) -> Result<WaveAnalysis, TransitionError> {
    let insufficient = |m: String| Err(TransitionError::InsufficientData(m));
    if signals.len() < 2 {
        return insufficient("need at least two joints".into());
    }
    let n = signals[0].len();
    if n < 16 || signals.iter().any(|s| s.len() != n) {
        return insufficient(format!("need at least 16 equal-length samples, got {n}"));
    }
    let centred: Vec<Vec<f64>> = signals
        .iter()
        .map(|s| {
            let m = s.iter().sum::<f64>() / n as f64;
            s.iter().map(|x| x - m).collect()
        })
        .collect();
    let bin = 1.0 / (n as f64 * dt);
    let spectra: Vec<Vec<f64>> = centred.iter().map(|s| magnitude_spectrum(s)).collect();
    let peak = |sp: &[f64]| -> (usize, f64) {
        sp.iter()
            .enumerate()
            .skip(1)
            .fold((0, 0.0), |best, (k, &m)| if m > best.1 { (k, m) } else { best })
    };
    let total: Vec<f64> = (0..spectra[0].len()).map(|k| spectra.iter().map(|s| s[k]).sum()).collect();
    let (k_dom, m_dom) = peak(&total);
    let energy: f64 = centred.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    if k_dom == 0 || energy < 1e-9 || m_dom < 1e-9 {
        return insufficient("no dominant oscillation".into());
    }
    let f = k_dom as f64 * bin;
    let periods = f * n as f64 * dt;
    if periods < 5.0 {
        return insufficient(format!("only {periods:.1} periods in the window"));
    }
    let joint_frequencies = spectra.iter().map(|s| peak(s).0 as f64 * bin).collect();
    let half = ((0.5 / f) / dt).floor().max(1.0) as isize;
    let phase_lags: Vec<f64> = centred
        .windows(2)
        .map(|w| {
            let c: Vec<f64> = (-half..=half).map(|l| cross_correlation(&w[0], &w[1], l)).collect();
            let i = c
                .iter()
                .enumerate()
                .fold(0, |best, (k, &v)| if v > c[best] { k } else { best });
            // parabolic refinement around the peak
            let off = if i > 0 && i + 1 < c.len() {
                let (a, b, d) = (c[i - 1], c[i], c[i + 1]);
                let den = a - 2.0 * b + d;
                if den.abs() > 1e-300 {
                    0.5 * (a - d) / den
                } else {
                    0.0
                }
            } else {
                0.0
            };
            let lag_samples = (i as isize - half) as f64 + off;
            2.0 * std::f64::consts::PI * f * lag_samples * dt
        })
        .collect();
    let traveling_wave = phase_lags.iter().all(|&l| l > MIN_WAVE_LAG);
    Ok(WaveAnalysis {
        joint_frequencies,
        dominant_frequency: f,
        bin_width: bin,
        phase_lags,
        traveling_wave,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub schema: String,
    pub steps: usize,
    pub sigma_entries: usize,
    pub entry_time: Option<f64>,
    pub contacts_zero_time: Option<f64>,
    pub last_contact_time: Option<f64>,
    pub diverged: bool,
    pub fell: bool,
    pub wave: Option<WaveAnalysis>,
    /// Why the wave analysis was not possible, if so.
    pub wave_error: Option<String>,
}

/// Summarise a trace; the wave analysis uses axial joints from the moment
/// contacts vanish (or water entry) to the end.
pub fn transition_report(trace: &TransitionTrace, model: &RobotModel) -> TransitionReport {
    let t_water = trace.contacts_zero_time().or(trace.entry_time());
    let (wave, wave_error) = match (t_water, trace.sample_period()) {
        (Some(t0), Some(dt)) => match analyze_traveling_wave(&trace.joint_series(&model.axial_joints(), t0), dt) {
            Ok(w) => (Some(w), None),
            Err(e) => (None, Some(e.to_string())),
        },
        _ => (None, Some("robot never entered the water".into())),
    };
    TransitionReport {
        schema: TRACE_SCHEMA.into(),
        steps: trace.rows.len(),
        sigma_entries: trace.sigma_entries(),
        entry_time: trace.entry_time(),
        contacts_zero_time: trace.contacts_zero_time(),
        last_contact_time: trace.last_contact_time(),
        diverged: trace.diverged,
        fell: trace.fell,
        wave,
        wave_error,
    }
}
