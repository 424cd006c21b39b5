//! The PPO training loop.

use std::io::Write;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::{clip_grad_norm, Adam};
use crate::envs::TrainEnv;
use crate::gae::{gae, normalize_advantages};
use crate::mlp::Activation;
use crate::normalizer::RunningNormalizer;
use crate::policy::{gaussian_log_prob, ppo_loss, sample_gaussian, ActorCritic, LossConfig, LossStats, Minibatch};
use crate::{PpoError, TrainedPolicy};

/// PPO hyper-parameters. The default is the desk-scale mapping;
/// [`TrainConfig::full_scale`] is the full-scale one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub total_steps: u64,
    pub num_envs: usize,
    pub episode_length: usize,
    pub gamma: f64,
    pub lr: f64,
    pub entropy_coef: f64,
    pub unroll_length: usize,
    pub num_minibatches: usize,
    pub updates_per_batch: usize,
    /// Env unrolls per minibatch; `num_envs = batch_size · num_minibatches`.
    pub batch_size: usize,
    pub grad_clip: f64,
    pub clip_epsilon: f64,
    pub gae_lambda: f64,
    pub seed: u64,
    pub normalize_observations: bool,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub value_coef: f64,
    pub init_log_std: f64,
    pub action_bound: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            total_steps: 5_000_000,
            num_envs: 256,
            episode_length: 1000,
            gamma: 0.97,
            lr: 3e-4,
            entropy_coef: 1e-2,
            unroll_length: 20,
            num_minibatches: 32,
            updates_per_batch: 4,
            batch_size: 8,
            grad_clip: 1.0,
            clip_epsilon: 0.2,
            gae_lambda: 0.95,
            seed: 0,
            normalize_observations: true,
            hidden: vec![512, 256, 128],
            activation: Activation::Tanh,
            value_coef: 0.5,
            init_log_std: -0.5,
            action_bound: 1.0,
        }
    }
}

impl TrainConfig {
    /// Full-scale values: 3·10⁸ steps over 8192 environments.
    pub fn full_scale() -> Self {
        TrainConfig {
            total_steps: 300_000_000,
            num_envs: 8192,
            batch_size: 256,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: String| Err(PpoError::Config(m));
        for (name, v) in [
            ("num_envs", self.num_envs),
            ("episode_length", self.episode_length),
            ("unroll_length", self.unroll_length),
            ("num_minibatches", self.num_minibatches),
            ("updates_per_batch", self.updates_per_batch),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.total_steps == 0 {
            return bad("total_steps must be positive".into());
        }
        if self.batch_size * self.num_minibatches != self.num_envs {
            return bad(format!(
                "num_envs ({}) must equal batch_size ({}) x num_minibatches ({})",
                self.num_envs, self.batch_size, self.num_minibatches
            ));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]".into());
        }
        if !(self.lr > 0.0 && self.grad_clip > 0.0 && self.clip_epsilon > 0.0 && self.action_bound > 0.0) {
            return bad("lr, grad_clip, clip_epsilon and action_bound must be positive".into());
        }
        if !(self.entropy_coef >= 0.0 && self.value_coef >= 0.0) {
            return bad("loss coefficients must be non-negative".into());
        }
        Ok(())
    }

    pub fn steps_per_iteration(&self) -> u64 {
        (self.num_envs * self.unroll_length) as u64
    }

    pub fn iterations(&self) -> u64 {
        self.total_steps.div_ceil(self.steps_per_iteration())
    }

    /// Rollout buffer footprint for an input of `input_dim` values.
    pub fn buffer_bytes(&self, input_dim: usize, actions: usize) -> usize {
        self.num_envs * self.unroll_length * (2 * input_dim + actions + 6) * 8
    }
}

/// One row of the training timeline.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: u64,
    pub env_steps: u64,
    /// Episodes finished during this iteration.
    pub episodes: u64,
    /// Mean undiscounted return of those episodes (NaN if none).
    pub mean_return: f64,
    pub mean_episode_length: f64,
    /// Episodes that ended by fall or divergence.
    pub terminations: u64,
    pub mean_reward: f64,
    pub r_v: f64,
    pub r_omega: f64,
    pub r_energy: f64,
    pub r_phase: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

pub struct TrainOutput {
    pub policy: TrainedPolicy,
    pub metrics: Vec<MetricsRow>,
    pub env_steps: u64,
}

/// Streams [`MetricsRow`]s as CSV with a header.
pub struct MetricsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(out: W) -> Self {
        MetricsWriter {
            inner: csv::Writer::from_writer(out),
        }
    }

    pub fn write(&mut self, row: &MetricsRow) -> Result<(), PpoError> {
        self.inner.serialize(row)?;
        self.inner.flush()?;
        Ok(())
    }
}

fn diverged(iteration: u64, what: impl Into<String>) -> PpoError {
    PpoError::Diverged {
        iteration,
        what: what.into(),
    }
}

/// Per-environment random stream, independent of scheduling.
pub fn env_stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

pub fn train<E: TrainEnv + Clone>(env: &E, cfg: &TrainConfig) -> Result<TrainOutput, PpoError> {
    train_with(env, cfg, |_, _| Ok(()))
}

/// Train, calling `on_iteration` after every update (for logging and
/// checkpointing). An error from the callback aborts training.
pub fn train_with<E, F>(env: &E, cfg: &TrainConfig, mut on_iteration: F) -> Result<TrainOutput, PpoError>
where
    E: TrainEnv + Clone,
    F: FnMut(&MetricsRow, &TrainedPolicy) -> Result<(), PpoError>,
{
    cfg.validate()?;
    let (n_env, t_len) = (cfg.num_envs, cfg.unroll_length);
    let d = env.input_dim();
    let n_act = env.num_actions();
    log::info!(
        "ppo: {} envs x {} unroll, {} iterations, rollout buffer ~{:.1} MB",
        n_env,
        t_len,
        cfg.iterations(),
        cfg.buffer_bytes(d, n_act) as f64 / 1e6
    );

    let mut main_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ac = ActorCritic::new(
        d,
        n_act,
        &cfg.hidden,
        cfg.activation,
        cfg.init_log_std,
        cfg.action_bound,
        &mut main_rng,
    );
    let mut normalizer = RunningNormalizer::new(d);
    let mut opt = Adam::new(ac.theta.len(), cfg.lr);
    let loss_cfg = LossConfig {
        clip_epsilon: cfg.clip_epsilon,
        value_coef: cfg.value_coef,
        entropy_coef: cfg.entropy_coef,
    };

    let mut envs: Vec<E> = vec![env.clone(); n_env];
    let mut rngs: Vec<ChaCha8Rng> = (0..n_env).map(|i| env_stream(cfg.seed, i)).collect();
    let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(n_env);
    for (e, rng) in envs.iter_mut().zip(&mut rngs) {
        let x = e.reset(rng.random())?;
        if x.len() != d {
            return Err(PpoError::IncompatiblePolicy { expected: d, got: x.len() });
        }
        inputs.push(x);
    }
    let mut ep_return = vec![0.0; n_env];
    let mut ep_len = vec![0usize; n_env];

    let total = n_env * t_len;
    let mut raw_buf = DMatrix::<f64>::zeros(d, total);
    let mut obs_buf = DMatrix::<f64>::zeros(d, total);
    let mut act_buf = DMatrix::<f64>::zeros(n_act, total);
    let mut logp_buf = vec![0.0; total];
    let mut val_buf = vec![0.0; total];
    let mut rew_buf = vec![0.0; total];
    let mut done_buf = vec![false; total];

    let mut metrics = Vec::new();
    let mut env_steps = 0u64;
    let mut x_raw = DMatrix::<f64>::zeros(d, n_env);
    let mut x_norm = DMatrix::<f64>::zeros(d, n_env);
    let normalize = |norm: &RunningNormalizer, raw: &DMatrix<f64>, out: &mut DMatrix<f64>| {
        for (src, mut dst) in raw.column_iter().zip(out.column_iter_mut()) {
            if cfg.normalize_observations {
                norm.normalize_into(src.as_slice(), dst.as_mut_slice());
            } else {
                dst.copy_from(&src);
            }
        }
    };

    for iteration in 0..cfg.iterations() {
        let mut row = MetricsRow {
            iteration,
            ..Default::default()
        };
        let (mut ret_sum, mut len_sum) = (0.0, 0.0);
        let mut term_sum = [0.0; 4];
        for t in 0..t_len {
            for (e, x) in inputs.iter().enumerate() {
                x_raw.column_mut(e).copy_from_slice(x);
            }
            normalize(&normalizer, &x_raw, &mut x_norm);
            let means = ac.means(&x_norm);
            let values = ac.values(&x_norm);
            if means.iter().chain(&values).any(|v| !v.is_finite()) {
                return Err(diverged(iteration, "non-finite network output during rollout"));
            }
            let log_std = ac.log_std();
            let mut boot: Vec<(usize, Vec<f64>)> = Vec::new();
            for e in 0..n_env {
                let k = t * n_env + e;
                let mean = means.column(e);
                let raw = sample_gaussian(mean.as_slice(), &log_std, &mut rngs[e]);
                logp_buf[k] = gaussian_log_prob(&raw, mean.as_slice(), &log_std);
                let step = envs[e].step(&ac.clip_action(&raw))?;
                act_buf.column_mut(k).copy_from_slice(&raw);
                val_buf[k] = values[e];
                rew_buf[k] = step.reward;
                done_buf[k] = step.done;
                for (s, v) in term_sum.iter_mut().zip(step.terms) {
                    *s += v;
                }
                ep_return[e] += step.reward;
                ep_len[e] += 1;
                if step.done {
                    if step.truncated {
                        boot.push((k, step.input.clone()));
                    } else {
                        row.terminations += 1;
                    }
                    row.episodes += 1;
                    ret_sum += ep_return[e];
                    len_sum += ep_len[e] as f64;
                    ep_return[e] = 0.0;
                    ep_len[e] = 0;
                    inputs[e] = envs[e].reset(rngs[e].random())?;
                } else {
                    inputs[e] = step.input;
                }
            }
            raw_buf.columns_mut(t * n_env, n_env).copy_from(&x_raw);
            obs_buf.columns_mut(t * n_env, n_env).copy_from(&x_norm);
            // time-limit ends: bootstrap from the value of the final state
            if !boot.is_empty() {
                let mut xb = DMatrix::zeros(d, boot.len());
                let mut xn = DMatrix::zeros(d, boot.len());
                for (c, (_, x)) in boot.iter().enumerate() {
                    xb.column_mut(c).copy_from_slice(x);
                }
                normalize(&normalizer, &xb, &mut xn);
                for ((k, _), v) in boot.iter().zip(ac.values(&xn)) {
                    rew_buf[*k] += cfg.gamma * v;
                }
            }
        }
        for (e, x) in inputs.iter().enumerate() {
            x_raw.column_mut(e).copy_from_slice(x);
        }
        normalize(&normalizer, &x_raw, &mut x_norm);
        let last_values = ac.values(&x_norm);
        env_steps += total as u64;

        let mut adv_buf = vec![0.0; total];
        let mut ret_buf = vec![0.0; total];
        for e in 0..n_env {
            let idx: Vec<usize> = (0..t_len).map(|t| t * n_env + e).collect();
            let r: Vec<f64> = idx.iter().map(|&k| rew_buf[k]).collect();
            let mut v: Vec<f64> = idx.iter().map(|&k| val_buf[k]).collect();
            v.push(last_values[e]);
            let dn: Vec<bool> = idx.iter().map(|&k| done_buf[k]).collect();
            let (a, rt) = gae(&r, &v, &dn, cfg.gamma, cfg.gae_lambda);
            for (j, &k) in idx.iter().enumerate() {
                adv_buf[k] = a[j];
                ret_buf[k] = rt[j];
            }
        }

        let mb_size = total / cfg.num_minibatches;
        let mut order: Vec<usize> = (0..total).collect();
        let mut acc = LossStats::default();
        let mut grad_norm_sum = 0.0;
        let mut updates = 0.0;
        let mut grad = vec![0.0; ac.theta.len()];
        for _ in 0..cfg.updates_per_batch {
            order.shuffle(&mut main_rng);
            for chunk in order.chunks(mb_size) {
                let b = chunk.len();
                let mut advantages: Vec<f64> = chunk.iter().map(|&k| adv_buf[k]).collect();
                normalize_advantages(&mut advantages);
                let mb = Minibatch {
                    obs: DMatrix::from_fn(d, b, |i, j| obs_buf[(i, chunk[j])]),
                    actions: DMatrix::from_fn(n_act, b, |i, j| act_buf[(i, chunk[j])]),
                    old_log_prob: chunk.iter().map(|&k| logp_buf[k]).collect(),
                    advantages,
                    returns: chunk.iter().map(|&k| ret_buf[k]).collect(),
                };
                grad.iter_mut().for_each(|g| *g = 0.0);
                let st = ppo_loss(&ac, &mb, &loss_cfg, Some(&mut grad));
                if !st.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(diverged(iteration, format!("non-finite loss or gradient ({st:?})")));
                }
                grad_norm_sum += clip_grad_norm(&mut grad, cfg.grad_clip);
                opt.step(&mut ac.theta, &grad);
                acc.policy += st.policy;
                acc.value += st.value;
                acc.entropy += st.entropy;
                acc.approx_kl += st.approx_kl;
                acc.clip_fraction += st.clip_fraction;
                updates += 1.0;
            }
        }
        if cfg.normalize_observations {
            normalizer.update(raw_buf.as_slice().chunks_exact(d));
        }

        let steps = total as f64;
        row.env_steps = env_steps;
        row.mean_return = if row.episodes > 0 { ret_sum / row.episodes as f64 } else { f64::NAN };
        row.mean_episode_length = if row.episodes > 0 { len_sum / row.episodes as f64 } else { f64::NAN };
        row.mean_reward = rew_buf.iter().sum::<f64>() / steps;
        [row.r_v, row.r_omega, row.r_energy, row.r_phase] = term_sum.map(|s| s / steps);
        row.policy_loss = acc.policy / updates;
        row.value_loss = acc.value / updates;
        row.entropy = acc.entropy / updates;
        row.approx_kl = acc.approx_kl / updates;
        row.clip_fraction = acc.clip_fraction / updates;
        row.grad_norm = grad_norm_sum / updates;
        log::info!(
            "iter {:>5} steps {:>9} return {:>8.4} r_v {:.3} kl {:.4} entropy {:.2}",
            iteration,
            env_steps,
            row.mean_return,
            row.r_v,
            row.approx_kl,
            row.entropy
        );
        let snapshot = TrainedPolicy {
            ac: ac.clone(),
            normalizer: normalizer.clone(),
        };
        on_iteration(&row, &snapshot)?;
        metrics.push(row);
    }
    Ok(TrainOutput {
        policy: TrainedPolicy { ac, normalizer },
        metrics,
        env_steps,
    })
}
