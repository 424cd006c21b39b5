//! Diagonal-Gaussian actor and value critic sharing one parameter vector.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::mlp::{Activation, Mlp};

pub const LOG_STD_MIN: f64 = -4.0;
pub const LOG_STD_MAX: f64 = 1.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Network shapes; parameters live in [`ActorCritic::theta`] as
/// `[actor | critic | log_std]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic: Mlp,
    pub theta: Vec<f64>,
    /// Actions are clipped to `±action_bound` before reaching the env.
    pub action_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActOutput {
    /// Clipped action sent to the environment.
    pub action: Vec<f64>,
    /// Unclipped Gaussian sample (what `log_prob` refers to).
    pub raw: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
}

impl ActorCritic {
    pub fn new<R: Rng>(
        input: usize,
        actions: usize,
        hidden: &[usize],
        activation: Activation,
        init_log_std: f64,
        action_bound: f64,
        rng: &mut R,
    ) -> Self {
        let actor = Mlp::new(input, hidden, actions, activation);
        let critic = Mlp::new(input, hidden, 1, activation);
        let mut theta = actor.init(rng, 0.01);
        theta.extend(critic.init(rng, 1.0));
        theta.extend(std::iter::repeat_n(init_log_std, actions));
        ActorCritic {
            actor,
            critic,
            theta,
            action_bound,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn num_actions(&self) -> usize {
        self.actor.output_dim()
    }

    fn split(&self) -> (usize, usize) {
        let na = self.actor.num_params();
        (na, na + self.critic.num_params())
    }

    pub fn actor_params(&self) -> &[f64] {
        &self.theta[..self.split().0]
    }

    pub fn critic_params(&self) -> &[f64] {
        let (a, c) = self.split();
        &self.theta[a..c]
    }

    /// Raw (unclamped) log-std parameters.
    pub fn log_std_params(&self) -> &[f64] {
        &self.theta[self.split().1..]
    }

    /// Effective log-std, clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub fn log_std(&self) -> Vec<f64> {
        self.log_std_params().iter().map(|l| l.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect()
    }

    pub fn means(&self, obs: &DMatrix<f64>) -> DMatrix<f64> {
        self.actor.forward(self.actor_params(), obs)
    }

    pub fn values(&self, obs: &DMatrix<f64>) -> Vec<f64> {
        self.critic.forward(self.critic_params(), obs).iter().copied().collect()
    }

    pub fn clip_action(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().map(|a| a.clamp(-self.action_bound, self.action_bound)).collect()
    }

    /// Act on one normalized observation.
    pub fn act<R: Rng>(&self, obs: &[f64], stochastic: bool, rng: &mut R) -> ActOutput {
        let x = DMatrix::from_column_slice(obs.len(), 1, obs);
        let mean: Vec<f64> = self.means(&x).iter().copied().collect();
        let value = self.values(&x)[0];
        let log_std = self.log_std();
        let raw = if stochastic {
            sample_gaussian(&mean, &log_std, rng)
        } else {
            mean.clone()
        };
        ActOutput {
            action: self.clip_action(&raw),
            log_prob: gaussian_log_prob(&raw, &mean, &log_std),
            raw,
            value,
        }
    }
}

pub fn sample_gaussian<R: Rng>(mean: &[f64], log_std: &[f64], rng: &mut R) -> Vec<f64> {
    mean.iter()
        .zip(log_std)
        .map(|(m, l)| {
            let z: f64 = StandardNormal.sample(rng);
            m + l.exp() * z
        })
        .collect()
}

pub fn gaussian_log_prob(x: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((x, m), l)| {
            let z = (x - m) / l.exp();
            -0.5 * z * z - l - HALF_LN_2PI
        })
        .sum()
}

pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|l| l + 0.5 + HALF_LN_2PI).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub clip_epsilon: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

/// One minibatch, samples as columns.
#[derive(Debug, Clone)]
pub struct Minibatch {
    /// Normalized observations, `in × B`.
    pub obs: DMatrix<f64>,
    /// Unclipped actions, `n × B`.
    pub actions: DMatrix<f64>,
    pub old_log_prob: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Clipped-surrogate PPO loss (to minimize):
/// `−E[min(ρA, clip(ρ,1±ε)A)] + c_v·E[(V−R)²] − c_e·H`.
/// When `grad` is given, `∂loss/∂θ` is accumulated into it.
pub fn ppo_loss(ac: &ActorCritic, mb: &Minibatch, cfg: &LossConfig, grad: Option<&mut [f64]>) -> LossStats {
    let b = mb.obs.ncols();
    let nb = b as f64;
    let n = ac.num_actions();
    let (mean, a_cache) = ac.actor.forward_cached(ac.actor_params(), &mb.obs);
    let (value, c_cache) = ac.critic.forward_cached(ac.critic_params(), &mb.obs);
    let raw_ls = ac.log_std_params();
    let ls = ac.log_std();
    let inv_var: Vec<f64> = ls.iter().map(|l| (-2.0 * l).exp()).collect();

    let mut st = LossStats::default();
    // ∂loss/∂log π for each sample
    let mut d_logp = vec![0.0; b];
    for k in 0..b {
        let logp = gaussian_log_prob(
            mb.actions.column(k).as_slice(),
            mean.column(k).as_slice(),
            &ls,
        );
        let ratio = (logp - mb.old_log_prob[k]).exp();
        let adv = mb.advantages[k];
        let clipped = ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
        let (u, c) = (ratio * adv, clipped * adv);
        if u <= c {
            st.policy -= u;
            d_logp[k] = -u / nb;
        } else {
            st.policy -= c;
        }
        if (ratio - 1.0).abs() > cfg.clip_epsilon {
            st.clip_fraction += 1.0;
        }
        st.approx_kl += (ratio - 1.0) - (logp - mb.old_log_prob[k]);
        st.value += (value[k] - mb.returns[k]).powi(2);
    }
    st.policy /= nb;
    st.value /= nb;
    st.clip_fraction /= nb;
    st.approx_kl /= nb;
    st.entropy = gaussian_entropy(&ls);
    st.total = st.policy + cfg.value_coef * st.value - cfg.entropy_coef * st.entropy;

    if let Some(grad) = grad {
        let (ia, ic) = ac.split();
        let (ga, rest) = grad.split_at_mut(ia);
        let (gc, gl) = rest.split_at_mut(ic - ia);
        let mut d_mean = DMatrix::zeros(n, b);
        for k in 0..b {
            if d_logp[k] == 0.0 {
                continue;
            }
            for i in 0..n {
                let diff = mb.actions[(i, k)] - mean[(i, k)];
                d_mean[(i, k)] = d_logp[k] * diff * inv_var[i];
                if raw_ls[i] > LOG_STD_MIN && raw_ls[i] < LOG_STD_MAX {
                    gl[i] += d_logp[k] * (diff * diff * inv_var[i] - 1.0);
                }
            }
        }
        for i in 0..n {
            if raw_ls[i] > LOG_STD_MIN && raw_ls[i] < LOG_STD_MAX {
                gl[i] -= cfg.entropy_coef;
            }
        }
        ac.actor.backward(ac.actor_params(), &a_cache, d_mean, ga);
        let d_value = DMatrix::from_fn(1, b, |_, k| cfg.value_coef * 2.0 * (value[k] - mb.returns[k]) / nb);
        ac.critic.backward(ac.critic_params(), &c_cache, d_value, gc);
    }
    st
}
