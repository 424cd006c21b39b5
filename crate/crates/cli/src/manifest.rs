//! Output-directory ownership and the run manifest.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_SCHEMA: &str = "run-manifest-v1";
pub const MANIFEST_FILE: &str = "manifest.json";
const LOCK_FILE: &str = ".lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    pub preset: Option<String>,
    pub config_paths: Vec<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub seed: u64,
    pub code_version: String,
    /// SHA-256 of the resolved configuration TOML.
    pub config_hash: String,
    /// SHA-256 of each input file (configs, checkpoint).
    pub input_hashes: BTreeMap<String, String>,
    /// SHA-256 of each file written, relative to the output directory.
    pub output_hashes: BTreeMap<String, String>,
    /// Schema version of each structured output.
    pub output_schemas: BTreeMap<String, String>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub output_dir: PathBuf,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String, CliError> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// An output directory owned by this process until dropped.
#[derive(Debug)]
pub struct OutputDir {
    path: PathBuf,
    outputs: Vec<String>,
    schemas: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn acquire(path: impl Into<PathBuf>) -> Result<Self, CliError> {
        let path = path.into();
        fs::create_dir_all(&path)?;
        match OpenOptions::new().write(true).create_new(true).open(path.join(LOCK_FILE)) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => return Err(CliError::Locked(path)),
            Err(e) => return Err(e.into()),
        }
        Ok(OutputDir {
            path,
            outputs: Vec::new(),
            schemas: BTreeMap::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Create (truncate) an output file and record it for the manifest.
    pub fn create(&mut self, name: &str) -> Result<File, CliError> {
        let p = self.path.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.record(name);
        Ok(File::create(p)?)
    }

    /// [`Self::create`] for a file with a versioned schema.
    pub fn create_versioned(&mut self, name: &str, schema: &str) -> Result<File, CliError> {
        self.schemas.insert(name.to_string(), schema.to_string());
        self.create(name)
    }

    /// Record a file written by other means.
    pub fn record(&mut self, name: &str) {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut f = self.create(name)?;
        serde_json::to_writer_pretty(&mut f, value)?;
        writeln!(f)?;
        Ok(())
    }

    /// Hash every recorded output and write the manifest.
    pub fn finish(mut self, mut manifest: RunManifest) -> Result<RunManifest, CliError> {
        let mut hashes = BTreeMap::new();
        for name in &self.outputs {
            hashes.insert(name.clone(), hash_file(&self.path.join(name))?);
        }
        manifest.output_hashes = hashes;
        manifest.output_schemas = std::mem::take(&mut self.schemas);
        manifest.output_dir = self.path.clone();
        manifest.finished_unix = unix_now();
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(self.path.join(MANIFEST_FILE), text + "\n")?;
        self.outputs.clear();
        Ok(manifest)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.path.join(LOCK_FILE));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_owner_is_refused_until_release() {
        let dir = tempfile::tempdir().unwrap();
        let first = OutputDir::acquire(dir.path()).unwrap();
        let e = OutputDir::acquire(dir.path()).unwrap_err();
        assert!(matches!(e, CliError::Locked(_)));
        drop(first);
        OutputDir::acquire(dir.path()).unwrap();
    }

    #[test]
    fn manifest_hashes_match_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::acquire(dir.path().join("run")).unwrap();
        out.create_versioned("a.csv", "a-v1").unwrap().write_all(b"x,y\n1,2\n").unwrap();
        let m = RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            command: "test".into(),
            preset: None,
            config_paths: vec![],
            checkpoint: None,
            overrides: vec![],
            seed: 0,
            code_version: "0".into(),
            config_hash: String::new(),
            input_hashes: BTreeMap::new(),
            output_hashes: BTreeMap::new(),
            output_schemas: BTreeMap::new(),
            started_unix: 0.0,
            finished_unix: 0.0,
            output_dir: PathBuf::new(),
        };
        let m = out.finish(m).unwrap();
        assert_eq!(m.output_hashes["a.csv"], sha256_hex(b"x,y\n1,2\n"));
        assert_eq!(m.output_schemas["a.csv"], "a-v1");
        let text = fs::read_to_string(dir.path().join("run").join(MANIFEST_FILE)).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert!(!dir.path().join("run").join(LOCK_FILE).exists());
    }
}
