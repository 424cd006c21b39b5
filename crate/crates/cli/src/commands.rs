//! The four commands. Each owns one output directory, writes its primary
//! CSV/JSON outputs there and finishes with a manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use salamander_core::env::config::CommandMode;
use salamander_core::env::log::{RolloutWriter, ROLLOUT_SCHEMA};
use salamander_core::env::{Env, EnvConfig, Policy, ZeroPolicy, policy_input};
use salamander_core::rigidbody::{TerrainKind, TerrainParams};
use salamander_core::transition::{eval_config, run_transition_eval, transition_report, TransitionReport, TRACE_SCHEMA};
use salamander_ppo::checkpoint::{config_hash, CHECKPOINT_VERSION};
use salamander_ppo::train::{train_with, MetricsWriter};
use salamander_ppo::{Checkpoint, CheckpointMeta, MetricsRow, TrainedPolicy};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::{hash_file, sha256_hex, unix_now, OutputDir, RunManifest, MANIFEST_SCHEMA};

/// Default output root when `--out` is absent.
pub const OUT_ROOT_ENV: &str = "SALAMANDER_OUT";
pub const METRICS_SCHEMA: &str = "train-metrics-v1";
pub const EVAL_SCHEMA: &str = "eval-v1";
pub const EVAL_EPISODES_SCHEMA: &str = "eval-episodes-v1";
pub const ROLLOUT_SUMMARY_SCHEMA: &str = "rollout-summary-v1";
pub const RUN_CONFIG_SCHEMA: &str = "run-config-v1";
pub const POLICY_FILE: &str = "policy.ckpt";

#[derive(Debug, Clone, Default)]
pub struct CommonArgs {
    pub preset: Option<String>,
    pub config: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

struct Resolved {
    run: RunConfig,
    label: String,
    seed: u64,
    inputs: BTreeMap<String, String>,
}

fn resolve(common: &CommonArgs, default_preset: &str) -> Result<Resolved, CliError> {
    let mut inputs = BTreeMap::new();
    let (mut run, label) = match (&common.config, &common.preset) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either --config or --preset, not both".into())),
        (Some(path), None) => {
            let run = RunConfig::load(path)?;
            inputs.insert(path.display().to_string(), hash_file(path)?);
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "config".into());
            (run, stem)
        }
        (None, preset) => {
            let name = preset.as_deref().unwrap_or(default_preset);
            (RunConfig::preset(name)?, name.to_string())
        }
    };
    for o in &common.overrides {
        run.apply_override(o)?;
    }
    run.validate()?;
    Ok(Resolved {
        run,
        label,
        seed: common.seed.unwrap_or(0),
        inputs,
    })
}

pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

fn out_dir(common: &CommonArgs, command: &str, r: &Resolved) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| output_root().join(format!("{command}-{}-seed{}", r.label, r.seed)))
}

fn manifest(command: &str, common: &CommonArgs, r: &Resolved, config_text: &str, checkpoint: Option<&Path>) -> RunManifest {
    RunManifest {
        schema: MANIFEST_SCHEMA.into(),
        command: command.into(),
        preset: if common.config.is_some() { None } else { Some(r.label.clone()) },
        config_paths: common.config.iter().cloned().collect(),
        checkpoint: checkpoint.map(Path::to_path_buf),
        overrides: common.overrides.clone(),
        seed: r.seed,
        code_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: sha256_hex(config_text.as_bytes()),
        input_hashes: r.inputs.clone(),
        output_hashes: BTreeMap::new(),
        output_schemas: BTreeMap::new(),
        started_unix: unix_now(),
        finished_unix: 0.0,
        output_dir: PathBuf::new(),
    }
}

fn load_policy(path: &Path, inputs: &mut BTreeMap<String, String>) -> Result<TrainedPolicy, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::IncompatibleCheckpoint(format!("cannot read {}: {e}", path.display())))?;
    inputs.insert(path.display().to_string(), sha256_hex(&bytes));
    let ckpt = Checkpoint::from_bytes(&bytes)
        .map_err(|e| CliError::IncompatibleCheckpoint(format!("{}: {e}", path.display())))?;
    Ok(ckpt.policy)
}

fn ensure_compatible(policy: &TrainedPolicy, env: &Env, guidance: &str) -> Result<(), CliError> {
    let (want_in, want_act) = (policy.input_dim(), policy.ac.num_actions());
    let (have_in, have_act) = (env.input_dim(), env.num_actions());
    if want_in != have_in || want_act != have_act {
        return Err(CliError::IncompatibleCheckpoint(format!(
            "observation dimension mismatch: policy takes {want_in} inputs / {want_act} actions, \
             environment provides {have_in} inputs / {have_act} actions. {guidance}"
        )));
    }
    Ok(())
}

/// Command for eval and rollout: a fixed `(v_x, v_y, ω_z)` or the
/// configured random distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CommandSpec {
    Fixed([f64; 3]),
    Random,
}

impl FromStr for CommandSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("random") {
            return Ok(CommandSpec::Random);
        }
        let vals: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad command `{s}`: {e}")))
            .collect::<Result<_, _>>()?;
        match vals.as_slice() {
            [vx] => Ok(CommandSpec::Fixed([*vx, 0.0, 0.0])),
            [vx, vy, wz] => Ok(CommandSpec::Fixed([*vx, *vy, *wz])),
            _ => Err(format!("command `{s}` must be `random`, `v_x` or `v_x,v_y,omega_z`")),
        }
    }
}

impl CommandSpec {
    fn apply(&self, cfg: &mut EnvConfig) {
        match *self {
            CommandSpec::Fixed(c) => {
                cfg.command.mode = CommandMode::Fixed;
                cfg.command.fixed = c;
            }
            CommandSpec::Random => cfg.command.mode = CommandMode::Random,
        }
    }

    fn label(&self) -> String {
        match self {
            CommandSpec::Fixed([vx, vy, wz]) if *vy == 0.0 && *wz == 0.0 => format!("fixed forward velocity ({vx} m/s)"),
            CommandSpec::Fixed(c) => format!("fixed ({}, {}, {})", c[0], c[1], c[2]),
            CommandSpec::Random => "random (training distribution)".into(),
        }
    }
}

fn steps_for(duration: f64, dt: f64) -> Result<usize, CliError> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(CliError::Config(format!("duration must be a non-negative number of seconds, got {duration}")));
    }
    Ok((duration / dt).round() as usize)
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone, Default)]
pub struct TrainArgs {
    pub common: CommonArgs,
    /// Save an intermediate checkpoint every this many iterations (0: only the final one).
    pub checkpoint_every: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub out_dir: PathBuf,
    pub checkpoint: PathBuf,
    pub metrics: Vec<MetricsRow>,
    pub env_steps: u64,
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainOutcome, CliError> {
    let mut r = resolve(&args.common, "desk-flat")?;
    if let Some(seed) = args.common.seed {
        r.run.train.seed = seed;
    }
    r.seed = r.run.train.seed;
    let config_text = r.run.to_toml_string();
    let env_cfg = r.run.training_env()?;
    let env = Env::new(env_cfg.clone())?;
    let mut out = OutputDir::acquire(out_dir(&args.common, "train", &r))?;
    let man = manifest("train", &args.common, &r, &config_text, None);
    out.create_versioned("config.toml", RUN_CONFIG_SCHEMA)?.write_all(config_text.as_bytes())?;

    let hash = config_hash(&config_text);
    let env_text = env_cfg.to_toml_string();
    let meta = |iteration: u64, env_steps: u64| CheckpointMeta {
        version: CHECKPOINT_VERSION,
        iteration,
        env_steps,
        config_hash: hash.clone(),
        env_config: Some(env_text.clone()),
    };

    let mut writer = MetricsWriter::new(out.create_versioned("metrics.csv", METRICS_SCHEMA)?);
    let every = args.checkpoint_every;
    let out_path = out.path().to_path_buf();
    let mut saved = Vec::new();
    let result = train_with(&env, &r.run.train, |row, policy| {
        writer.write(row)?;
        log::info!(
            "iteration {} steps {} return {:.3} r_v {:.3} kl {:.4}",
            row.iteration,
            row.env_steps,
            row.mean_return,
            row.r_v,
            row.approx_kl
        );
        if every > 0 && row.iteration % every == 0 {
            let name = format!("checkpoints/iter_{:06}.ckpt", row.iteration);
            std::fs::create_dir_all(out_path.join("checkpoints"))?;
            Checkpoint {
                meta: meta(row.iteration, row.env_steps),
                policy: policy.clone(),
            }
            .save(out_path.join(&name))?;
            saved.push(name);
        }
        Ok(())
    })?;
    drop(writer);
    for name in &saved {
        out.record(name);
    }
    let last_iter = result.metrics.last().map_or(0, |m| m.iteration);
    let ckpt_path = out.path().join(POLICY_FILE);
    Checkpoint {
        meta: meta(last_iter, result.env_steps),
        policy: result.policy,
    }
    .save(&ckpt_path)?;
    out.record(POLICY_FILE);
    let out_dir = out.path().to_path_buf();
    out.finish(man)?;
    Ok(TrainOutcome {
        out_dir,
        checkpoint: ckpt_path,
        metrics: result.metrics,
        env_steps: result.env_steps,
    })
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub common: CommonArgs,
    /// Zero (posture-holding) policy when absent.
    pub checkpoint: Option<PathBuf>,
    pub command: CommandSpec,
    pub episodes: usize,
    /// Episode length, s.
    pub duration: f64,
}

impl Default for EvalArgs {
    fn default() -> Self {
        EvalArgs {
            common: CommonArgs::default(),
            checkpoint: None,
            command: CommandSpec::Fixed([0.3, 0.0, 0.0]),
            episodes: 3,
            duration: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    pub seed: u64,
    pub steps: usize,
    /// Traversal time, s.
    pub duration: f64,
    /// Front-girdle displacement along the initial heading, m.
    pub distance: f64,
    pub forward_velocity: f64,
    pub mean_r_v: f64,
    pub mean_reward: f64,
    pub fell: bool,
    pub diverged: bool,
}

/// One row of the terrain/velocity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub terrain: String,
    pub ruggedness_cm: f64,
    pub clearance_pct: f64,
    pub slope_deg: f64,
    pub command_type: String,
    pub episodes: usize,
    pub v_mean: f64,
    /// Sample standard deviation over the episodes.
    pub v_std: f64,
    /// `mean ± std`, two decimals.
    pub v_bx: String,
    pub fall_rate: f64,
    pub mean_r_v: f64,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub out_dir: PathBuf,
    pub episodes: Vec<EpisodeStats>,
    pub summary: EvalSummary,
}

/// Sample mean and standard deviation (n − 1 denominator; 0 for n < 2).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.2} ± {std:.2}")
}

/// Ruggedness (m) and slope (deg) of a terrain, as in the terrain table.
pub fn terrain_profile(kind: TerrainKind, p: &TerrainParams) -> (f64, f64) {
    match kind {
        TerrainKind::Flat => (0.0, 0.0),
        TerrainKind::Rugged => (p.max_roughness, 0.0),
        TerrainKind::Hill | TerrainKind::Valley => (0.0, p.max_slope_deg),
        TerrainKind::Composite => (p.max_roughness, p.max_slope_deg),
        TerrainKind::Bank => (0.0, (p.bank_depth / p.bank_length).atan().to_degrees()),
    }
}

/// Standing height of the front-girdle frame on flat ground: the
/// clearance ruggedness is normalized by.
pub fn ground_clearance(cfg: &EnvConfig) -> Result<f64, CliError> {
    let mut flat = cfg.clone();
    flat.terrain.kind = TerrainKind::Flat;
    flat.water = None;
    flat.start = Default::default();
    let mut env = Env::new(flat)?;
    env.reset(0)?;
    Ok(env.state().expect("reset").sim.base_pos.z)
}

/// Evaluation episodes with the deterministic policy; each seed is a fresh
/// randomized trial. Stops at a fall or the end of the episode.
pub fn evaluate(env: &mut Env, policy: &mut dyn Policy, seeds: &[u64]) -> Result<Vec<EpisodeStats>, CliError> {
    let dt = env.config().control_dt;
    let mut stats = Vec::with_capacity(seeds.len());
    for (episode, &seed) in seeds.iter().enumerate() {
        let mut obs = env.reset(seed)?;
        let st = env.state().expect("reset");
        let start = st.sim.base_pos;
        let yaw = st.sim.base_quat.euler_angles().2;
        let (mut steps, mut r_v, mut reward) = (0usize, 0.0, 0.0);
        let (mut fell, mut diverged) = (false, false);
        let mut end = start;
        for _ in 0..env.config().episode_length {
            let command = env.state().expect("reset").command;
            let action = policy.act(&policy_input(&command, &obs));
            let res = env.step(&action)?;
            steps += 1;
            r_v += res.info.terms.r_v;
            reward += res.info.terms.total;
            if res.info.diverged {
                diverged = true;
                break;
            }
            end = env.state().expect("reset").sim.base_pos;
            obs = res.observation;
            if res.info.fell {
                fell = true;
                break;
            }
        }
        let duration = steps as f64 * dt;
        let distance = (end.x - start.x) * yaw.cos() + (end.y - start.y) * yaw.sin();
        let denom = steps.max(1) as f64;
        stats.push(EpisodeStats {
            episode,
            seed,
            steps,
            duration,
            distance,
            forward_velocity: if duration > 0.0 { distance / duration } else { 0.0 },
            mean_r_v: r_v / denom,
            mean_reward: reward / denom,
            fell,
            diverged,
        });
    }
    Ok(stats)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalOutcome, CliError> {
    if args.episodes < 3 {
        return Err(CliError::Config(format!("eval needs at least 3 episodes, got {}", args.episodes)));
    }
    let mut r = resolve(&args.common, "desk-flat")?;
    let mut cfg = r.run.resolved_env()?;
    cfg.randomization.push.enabled = false;
    args.command.apply(&mut cfg);
    cfg.episode_length = steps_for(args.duration, cfg.control_dt)?.max(1);
    let mut env = Env::new(cfg.clone())?;
    let mut policy: Box<dyn Policy> = match &args.checkpoint {
        Some(path) => {
            let p = load_policy(path, &mut r.inputs)?;
            ensure_compatible(&p, &env, "Evaluate with the preset the policy was trained on.")?;
            Box::new(p)
        }
        None => Box::new(ZeroPolicy { n: env.num_actions() }),
    };
    let config_text = r.run.to_toml_string();
    let mut out = OutputDir::acquire(out_dir(&args.common, "eval", &r))?;
    let man = manifest("eval", &args.common, &r, &config_text, args.checkpoint.as_deref());
    let seeds: Vec<u64> = (0..args.episodes as u64).map(|i| r.seed.wrapping_add(i)).collect();
    let episodes = evaluate(&mut env, policy.as_mut(), &seeds)?;
    if let Some(bad) = episodes.iter().find(|e| e.diverged) {
        return Err(CliError::Divergence(format!("evaluation episode {} (seed {}) diverged", bad.episode, bad.seed)));
    }

    let velocities: Vec<f64> = episodes.iter().map(|e| e.forward_velocity).collect();
    let (v_mean, v_std) = mean_std(&velocities);
    let (rugged, slope) = terrain_profile(cfg.terrain.kind, &cfg.terrain.params);
    let n = episodes.len() as f64;
    let summary = EvalSummary {
        terrain: r.label.clone(),
        ruggedness_cm: rugged * 100.0,
        clearance_pct: 100.0 * rugged / ground_clearance(&cfg)?,
        slope_deg: slope,
        command_type: args.command.label(),
        episodes: episodes.len(),
        v_mean,
        v_std,
        v_bx: format_mean_std(v_mean, v_std),
        fall_rate: episodes.iter().filter(|e| e.fell).count() as f64 / n,
        mean_r_v: episodes.iter().map(|e| e.mean_r_v).sum::<f64>() / n,
    };

    let mut w = csv::Writer::from_writer(out.create_versioned("eval_episodes.csv", EVAL_EPISODES_SCHEMA)?);
    for e in &episodes {
        w.serialize(e)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(out.create_versioned("eval.csv", EVAL_SCHEMA)?);
    w.serialize(&summary)?;
    w.flush()?;
    let out_dir = out.path().to_path_buf();
    out.finish(man)?;
    Ok(EvalOutcome {
        out_dir,
        episodes,
        summary,
    })
}

// ---------------------------------------------------------------- rollout

#[derive(Debug, Clone)]
pub struct RolloutArgs {
    pub common: CommonArgs,
    pub checkpoint: Option<PathBuf>,
    /// Overrides the configured command when present.
    pub command: Option<CommandSpec>,
    pub duration: f64,
}

impl Default for RolloutArgs {
    fn default() -> Self {
        RolloutArgs {
            common: CommonArgs::default(),
            checkpoint: None,
            command: None,
            duration: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutSummary {
    pub schema: String,
    pub rows: usize,
    pub duration: f64,
    pub zero_length: bool,
    pub fell: bool,
    pub fall_time: Option<f64>,
    pub diverged: bool,
    /// Front-girdle displacement along the initial heading, m.
    pub distance: f64,
    pub mean_r_v: f64,
    pub mean_r_omega: f64,
    pub mean_r_energy: f64,
    pub mean_r_phase: f64,
    pub mean_reward: f64,
}

#[derive(Debug, Clone)]
pub struct RolloutOutcome {
    pub out_dir: PathBuf,
    pub summary: RolloutSummary,
}

pub fn cmd_rollout(args: &RolloutArgs) -> Result<RolloutOutcome, CliError> {
    let mut r = resolve(&args.common, "desk-flat")?;
    let mut cfg = r.run.resolved_env()?;
    if let Some(c) = &args.command {
        c.apply(&mut cfg);
    }
    let steps = steps_for(args.duration, cfg.control_dt)?;
    cfg.episode_length = steps.max(1);
    let mut env = Env::new(cfg)?;
    let mut policy: Box<dyn Policy> = match &args.checkpoint {
        Some(path) => {
            let p = load_policy(path, &mut r.inputs)?;
            ensure_compatible(&p, &env, "Roll out with the preset the policy was trained on.")?;
            Box::new(p)
        }
        None => Box::new(ZeroPolicy { n: env.num_actions() }),
    };

    let config_text = r.run.to_toml_string();
    let mut out = OutputDir::acquire(out_dir(&args.common, "rollout", &r))?;
    let man = manifest("rollout", &args.common, &r, &config_text, args.checkpoint.as_deref());
    let mut writer = RolloutWriter::new(out.create_versioned("rollout.csv", ROLLOUT_SCHEMA)?, env.model())?;

    let mut obs = env.reset(r.seed)?;
    let st = env.state().expect("reset");
    let (start, yaw) = (st.sim.base_pos, st.sim.base_quat.euler_angles().2);
    let mut end = start;
    let mut sums = [0.0; 5];
    let (mut rows, mut fall_time, mut diverged) = (0usize, None, false);
    for _ in 0..steps {
        let command = env.state().expect("reset").command;
        let action = policy.act(&policy_input(&command, &obs));
        let res = env.step(&action)?;
        let sim = &env.state().expect("reset").sim;
        writer.write(&command, &res.info, &sim.q)?;
        rows += 1;
        let t = &res.info.terms;
        for (s, v) in sums.iter_mut().zip([t.r_v, t.r_omega, t.r_energy, t.r_phase, t.total]) {
            *s += v;
        }
        if res.info.fell && fall_time.is_none() {
            fall_time = Some(res.info.time);
        }
        if res.info.diverged {
            diverged = true;
            break;
        }
        end = sim.base_pos;
        obs = res.observation;
    }
    writer.into_inner()?.flush()?;

    let denom = rows.max(1) as f64;
    let summary = RolloutSummary {
        schema: ROLLOUT_SUMMARY_SCHEMA.into(),
        rows,
        duration: rows as f64 * env.config().control_dt,
        zero_length: rows == 0,
        fell: fall_time.is_some(),
        fall_time,
        diverged,
        distance: (end.x - start.x) * yaw.cos() + (end.y - start.y) * yaw.sin(),
        mean_r_v: sums[0] / denom,
        mean_r_omega: sums[1] / denom,
        mean_r_energy: sums[2] / denom,
        mean_r_phase: sums[3] / denom,
        mean_reward: sums[4] / denom,
    };
    out.write_json("summary.json", &summary)?;
    let out_dir = out.path().to_path_buf();
    out.finish(man)?;
    if diverged {
        return Err(CliError::Divergence(format!("rollout diverged after {rows} steps; partial log kept")));
    }
    Ok(RolloutOutcome { out_dir, summary })
}

// ---------------------------------------------------------------- transition

#[derive(Debug, Clone)]
pub struct TransitionArgs {
    pub common: CommonArgs,
    pub checkpoint: PathBuf,
    /// Constant forward command, m/s.
    pub v_cmd: f64,
    pub duration: f64,
}

#[derive(Debug, Clone)]
pub struct TransitionOutcome {
    pub out_dir: PathBuf,
    pub report: TransitionReport,
}

pub fn cmd_transition(args: &TransitionArgs) -> Result<TransitionOutcome, CliError> {
    let mut r = resolve(&args.common, "desk-transition")?;
    let arena = r.run.arena.clone().unwrap_or_default();
    steps_for(args.duration, r.run.env.control_dt)?;
    let cfg = eval_config(&r.run.env, &arena, args.v_cmd, args.duration)?;
    let mut env = Env::new(cfg)?;
    let mut policy = load_policy(&args.checkpoint, &mut r.inputs)?;
    ensure_compatible(
        &policy,
        &env,
        "The transition arena appends the land/water indicator to the observation; \
         train the policy with `--preset desk-transition`.",
    )?;
    let trace = run_transition_eval(&mut env, &mut policy, r.seed)?;
    let report = transition_report(&trace, env.model());

    let config_text = r.run.to_toml_string();
    let mut out = OutputDir::acquire(out_dir(&args.common, "transition", &r))?;
    let man = manifest("transition", &args.common, &r, &config_text, Some(&args.checkpoint));
    trace.write_csv(out.create_versioned("trace.csv", TRACE_SCHEMA)?)?;
    out.write_json("report.json", &report)?;
    let out_dir = out.path().to_path_buf();
    out.finish(man)?;
    if trace.diverged {
        return Err(CliError::Divergence(format!(
            "transition rollout diverged after {} steps; partial trace kept",
            trace.rows.len()
        )));
    }
    Ok(TransitionOutcome { out_dir, report })
}
