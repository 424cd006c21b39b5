//! Versioned binary checkpoints: magic, JSON header, little-endian f64 body.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::normalizer::RunningNormalizer;
use crate::policy::ActorCritic;
use crate::{PpoError, TrainedPolicy};

const MAGIC: &[u8; 8] = b"SALPPO\0\x01";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub version: u32,
    pub iteration: u64,
    pub env_steps: u64,
    /// SHA-256 of the configuration text the run was started with.
    pub config_hash: String,
    /// Environment configuration (TOML) the policy was trained in.
    pub env_config: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    meta: CheckpointMeta,
    actor: crate::mlp::Mlp,
    critic: crate::mlp::Mlp,
    action_bound: f64,
    num_params: usize,
    norm_dim: usize,
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub policy: TrainedPolicy,
}

fn put(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn take(buf: &[u8], pos: &mut usize, n: usize) -> Result<Vec<f64>, PpoError> {
    let end = *pos + 8 * n;
    let bytes = buf
        .get(*pos..end)
        .ok_or_else(|| PpoError::Checkpoint("truncated parameter block".into()))?;
    *pos = end;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let ac = &self.policy.ac;
        let header = Header {
            meta: self.meta.clone(),
            actor: ac.actor.clone(),
            critic: ac.critic.clone(),
            action_bound: ac.action_bound,
            num_params: ac.theta.len(),
            norm_dim: self.policy.normalizer.dim(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(16 + json.len() + 8 * (ac.theta.len() + 2 * header.norm_dim + 2));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        put(&mut out, &ac.theta);
        let n = &self.policy.normalizer;
        put(&mut out, &[n.count, n.warmup]);
        put(&mut out, &n.mean);
        put(&mut out, &n.var);
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, PpoError> {
        if buf.len() < 16 || &buf[..8] != MAGIC {
            return Err(PpoError::Checkpoint("not a checkpoint (bad magic)".into()));
        }
        let hlen = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
        let hjson = buf
            .get(16..16 + hlen)
            .ok_or_else(|| PpoError::Checkpoint("truncated header".into()))?;
        let h: Header = serde_json::from_slice(hjson).map_err(|e| PpoError::Checkpoint(e.to_string()))?;
        if h.meta.version != CHECKPOINT_VERSION {
            return Err(PpoError::Checkpoint(format!("unsupported version {}", h.meta.version)));
        }
        if h.actor.num_params() + h.critic.num_params() + h.actor.output_dim() != h.num_params {
            return Err(PpoError::Checkpoint("parameter count does not match network shapes".into()));
        }
        let mut pos = 16 + hlen;
        let theta = take(buf, &mut pos, h.num_params)?;
        let cw = take(buf, &mut pos, 2)?;
        let mean = take(buf, &mut pos, h.norm_dim)?;
        let var = take(buf, &mut pos, h.norm_dim)?;
        if pos != buf.len() {
            return Err(PpoError::Checkpoint("trailing bytes".into()));
        }
        Ok(Checkpoint {
            meta: h.meta,
            policy: TrainedPolicy {
                ac: ActorCritic {
                    actor: h.actor,
                    critic: h.critic,
                    theta,
                    action_bound: h.action_bound,
                },
                normalizer: RunningNormalizer {
                    count: cw[0],
                    warmup: cw[1],
                    mean,
                    var,
                },
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PpoError> {
        let path = path.as_ref();
        // write-then-rename so a crash never leaves a torn checkpoint
        let tmp = path.with_extension("tmp");
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PpoError> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        std::fs::File::open(path)
            .map_err(|e| PpoError::Checkpoint(format!("cannot open {}: {e}", path.display())))?
            .read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}
