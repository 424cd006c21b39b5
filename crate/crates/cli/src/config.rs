//! Run configuration: environment + trainer (+ optional amphibious arena),
//! shipped presets and dotted-path overrides.

use std::path::Path;

use salamander_core::env::EnvConfig;
use salamander_core::rigidbody::TerrainKind;
use salamander_core::transition::{transition_config, ArenaConfig};
use salamander_ppo::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const PRESETS: &[&str] = &[
    "desk-flat",
    "desk-rough-easy",
    "desk-rough-medium",
    "desk-rough-hard",
    "desk-transition",
];

/// Rough terrain per preset: (ruggedness m, max slope deg).
pub fn rough_terrain(preset: &str) -> Option<(f64, f64)> {
    match preset {
        "desk-rough-easy" => Some((0.02, 15.0)),
        "desk-rough-medium" => Some((0.04, 15.0)),
        "desk-rough-hard" => Some((0.04, 25.0)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `train.episode_length` takes precedence over `env.episode_length`
    /// while training.
    pub env: EnvConfig,
    pub train: TrainConfig,
    /// Present for amphibious runs; the env is then rebuilt on the arena.
    pub arena: Option<ArenaConfig>,
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        match name {
            "desk-flat" => {}
            "desk-transition" => cfg.arena = Some(ArenaConfig::default()),
            other => {
                let (roughness, slope) = rough_terrain(other).ok_or_else(|| {
                    CliError::Config(format!("unknown preset `{other}` (available: {})", PRESETS.join(", ")))
                })?;
                cfg.env.terrain.kind = TerrainKind::Composite;
                cfg.env.terrain.params.max_roughness = roughness;
                cfg.env.terrain.params.max_slope_deg = slope;
            }
        }
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigFile {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Apply `key.path=value`; the value is read as a TOML literal, falling
    /// back to a bare string.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), CliError> {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{spec}` is not key=value")))?;
        let key = key.trim();
        let value = parse_literal(raw.trim());
        let mut doc: toml::Table = toml::from_str(&self.to_toml_string()).expect("own output parses");
        if key == "arena" || key.starts_with("arena.") {
            doc.entry("arena").or_insert_with(|| {
                toml::Value::try_from(ArenaConfig::default()).expect("arena serializes")
            });
        }
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(CliError::Config(format!("override key `{key}` is malformed")));
        }
        let (leaf, parents) = parts.split_last().expect("non-empty");
        let mut table = &mut doc;
        for p in parents {
            table = match table.get_mut(*p) {
                Some(toml::Value::Table(t)) => t,
                _ => return Err(CliError::Config(format!("override key `{key}`: no section `{p}`"))),
            };
        }
        table.insert(leaf.to_string(), value);
        *self = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("override `{spec}`: {e}")))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.train.validate()?;
        if let Some(a) = &self.arena {
            a.validate()?;
        }
        self.env.validate()?;
        Ok(())
    }

    /// The environment actually simulated: arena applied when present.
    pub fn resolved_env(&self) -> Result<EnvConfig, CliError> {
        let env = match &self.arena {
            Some(a) => transition_config(&self.env, a)?,
            None => self.env.clone(),
        };
        env.validate()?;
        Ok(env)
    }

    /// [`Self::resolved_env`] with the trainer's episode length.
    pub fn training_env(&self) -> Result<EnvConfig, CliError> {
        let mut env = self.resolved_env()?;
        env.episode_length = self.train.episode_length;
        Ok(env)
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
