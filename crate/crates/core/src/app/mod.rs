//! Command-line application: config loading, run manifests and the
//! subcommands behind the `ankle-tcn` binary.

mod cli;
mod commands;

pub use cli::{run_cli, Cli, Command};

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::runtime::{ControllerConfig, RuntimeError};
use crate::textcfg::{merge_config_text, read_config_file, ConfigError};
use crate::train::{Profile, TrainConfig, TrainError};

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    /// The session completed but the controller had to hold.
    #[error("runtime fault: {0}")]
    Fault(String),
}

impl AppError {
    /// 1 usage or config, 2 data or model, 3 runtime fault.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) | AppError::Config(_) => 1,
            AppError::Data(_) => 2,
            AppError::Runtime(_) | AppError::Fault(_) => 3,
        }
    }

    pub(crate) fn data(e: impl std::fmt::Display) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<TrainError> for AppError {
    fn from(e: TrainError) -> Self {
        AppError::data(e)
    }
}

impl From<crate::data::DataError> for AppError {
    fn from(e: crate::data::DataError) -> Self {
        AppError::data(e)
    }
}

impl From<crate::nn::io::ModelFileError> for AppError {
    fn from(e: crate::nn::io::ModelFileError) -> Self {
        AppError::data(e)
    }
}

impl From<crate::metrics::MetricsError> for AppError {
    fn from(e: crate::metrics::MetricsError) -> Self {
        AppError::data(e)
    }
}

/// Training config: the profile's values, overridden by the file's keys.
pub fn load_train_config(profile: Profile, path: Option<&Path>) -> Result<TrainConfig, AppError> {
    let base = TrainConfig::for_profile(profile);
    let cfg = match path {
        Some(p) => merge_config_text(&base, &read_config_file(p)?)?,
        None => base,
    };
    cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

pub fn load_controller_config(path: Option<&Path>) -> Result<ControllerConfig, AppError> {
    let cfg = match path {
        Some(p) => parse_controller_config(&read_config_file(p)?)?,
        None => ControllerConfig::default(),
    };
    Ok(cfg)
}

pub fn parse_controller_config(text: &str) -> Result<ControllerConfig, ConfigError> {
    let cfg: ControllerConfig = crate::textcfg::from_config_text(text)?;
    cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArtifactHash {
    pub path: String,
    pub sha256: String,
}

/// What a subcommand ran with and what it produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub profile: Option<String>,
    pub seed: Option<u64>,
    /// Resolved configuration values.
    pub config: serde_json::Value,
    pub inputs: Vec<ArtifactHash>,
    pub outputs: Vec<ArtifactHash>,
    pub elapsed_s: f64,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            profile: None,
            seed: None,
            config: serde_json::Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            elapsed_s: 0.0,
        }
    }

    pub fn with_config(mut self, cfg: &impl Serialize) -> Self {
        self.config = serde_json::to_value(cfg).expect("config serializes");
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<(), AppError> {
        self.inputs.push(hash_artifact(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<(), AppError> {
        self.outputs.push(hash_artifact(path)?);
        Ok(())
    }

    /// Writes `manifest.json` inside a directory output, or
    /// `<file>.manifest.json` next to a file output.
    pub fn write_beside(&mut self, primary: &Path, started: Instant) -> Result<PathBuf, AppError> {
        self.elapsed_s = started.elapsed().as_secs_f64();
        let path = if primary.is_dir() { primary.join("manifest.json") } else { suffixed(primary, ".manifest.json") };
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| AppError::Data(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// `path` with `suffix` appended to its file name.
pub fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut f = fs::File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of a file. A directory hashes the sorted list of its files'
/// names and digests, skipping manifests.
pub fn hash_artifact(path: &Path) -> Result<ArtifactHash, AppError> {
    let err = |e: std::io::Error| AppError::Data(format!("cannot hash {}: {e}", path.display()));
    let sha256 = if path.is_dir() {
        let mut names: Vec<PathBuf> = fs::read_dir(path)
            .map_err(err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && !p.to_string_lossy().ends_with("manifest.json"))
            .collect();
        names.sort();
        let mut h = Sha256::new();
        for p in names {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            h.update(format!("{name}  {}\n", sha256_file(&p).map_err(err)?).as_bytes());
        }
        hex(&h.finalize())
    } else {
        sha256_file(path).map_err(err)?
    };
    Ok(ArtifactHash { path: path.display().to_string(), sha256 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn controller_config_parsing() {
        assert_eq!(parse_controller_config("").unwrap(), ControllerConfig::default());
        assert_eq!(parse_controller_config("gain_fraction=0.2").unwrap().gain_fraction, 0.2);
        assert!(matches!(parse_controller_config("gain_fraction=1.5"), Err(ConfigError::Invalid(_))));
        assert!(matches!(parse_controller_config("gain=0.2"), Err(ConfigError::Key { .. })));
        let c = parse_controller_config("mass_kg = 80\nfault_recovery = latch\n").unwrap();
        assert_eq!(c.mass_kg, 80.0);
    }

    #[test]
    fn train_config_merges_onto_profile() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.cfg");
        fs::write(&p, "pretrain_epochs=3\n").unwrap();
        let c = load_train_config(Profile::Full, Some(&p)).unwrap();
        assert_eq!((c.pretrain_epochs, c.channels), (3, 128));
        fs::write(&p, "").unwrap();
        assert_eq!(load_train_config(Profile::Desk, Some(&p)).unwrap(), TrainConfig::desk());
        fs::write(&p, "batch_size=0\n").unwrap();
        assert!(load_train_config(Profile::Desk, Some(&p)).unwrap_err().exit_code() == 1);
    }

    #[test]
    fn sha256_known_value() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            hash_artifact(&p).unwrap().sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let a = hash_artifact(dir.path()).unwrap();
        fs::write(dir.path().join("manifest.json"), "{}").unwrap();
        assert_eq!(hash_artifact(dir.path()).unwrap(), a);
    }
}
