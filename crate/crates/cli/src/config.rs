//! Run configuration files.

use std::path::{Path, PathBuf};

use msmsf_core::eval::{uniform_thresholds, EvalConfig};
use msmsf_core::model::{MsmsfNetConfig, NetProfile};
use msmsf_core::train::{DatasetProfile, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::manifest::Modality;

/// Network choice: a named profile or a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSpec {
    #[serde(default)]
    pub profile: Option<NetProfile>,
    /// Path (relative to the root) of a network configuration file.
    #[serde(default)]
    pub config: Option<PathBuf>,
    #[serde(default = "three")]
    pub in_channels: usize,
}

fn three() -> usize {
    3
}

impl Default for NetSpec {
    fn default() -> Self {
        NetSpec {
            profile: Some(NetProfile::Tiny),
            config: None,
            in_channels: 3,
        }
    }
}

impl NetSpec {
    pub fn resolve(&self, root: &Path) -> Result<MsmsfNetConfig> {
        let cfg = match (&self.profile, &self.config) {
            (Some(p), None) => MsmsfNetConfig::profile(*p, self.in_channels),
            (None, Some(path)) => read_toml::<MsmsfNetConfig>(&root.join(path))?,
            _ => return Err(CliError::usage("[net] needs exactly one of `profile` or `config`")),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    /// Matching tolerance; defaults to the dataset profile's.
    pub tol_frac: Option<f64>,
    /// Number of uniformly spaced thresholds.
    pub thresholds: usize,
    pub nms: bool,
    pub multiscale: bool,
    pub scales: Vec<f64>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            tol_frac: None,
            thresholds: 99,
            nms: true,
            multiscale: false,
            scales: vec![0.5, 1.0, 1.5],
        }
    }
}

impl EvalSettings {
    pub fn to_eval_config(&self, dataset: Option<DatasetProfile>) -> EvalConfig {
        EvalConfig {
            thresholds: uniform_thresholds(self.thresholds),
            tol_frac: self
                .tol_frac
                .unwrap_or_else(|| dataset.unwrap_or(DatasetProfile::Bsds).tolerance()),
            nms: self.nms,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory, relative to the root.
    pub output_dir: PathBuf,
    pub train_manifest: Option<PathBuf>,
    /// Annotators that must agree for a positive label (capped at the
    /// number of annotations of each image).
    #[serde(default = "three")]
    pub consensus: usize,
    /// Per-channel mean subtracted from inputs.
    #[serde(default)]
    pub mean: Option<[f32; 3]>,
    #[serde(default)]
    pub net: NetSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalSettings,
}

impl RunConfig {
    pub fn load(root: &Path, path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = read_toml(&root.join(path))?;
        // the top-level seed is authoritative
        cfg.train.seed = cfg.seed;
        cfg.train.validate()?;
        if cfg.consensus == 0 {
            return Err(CliError::usage("consensus must be at least 1"));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

/// Network description stored next to checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSidecar {
    pub modality: Modality,
    pub seed: u64,
    pub net: MsmsfNetConfig,
}

pub const NET_SIDECAR: &str = "net.toml";

impl NetSidecar {
    /// The sidecar in the checkpoint's directory.
    pub fn for_checkpoint(checkpoint: &Path) -> Result<Self> {
        let path = checkpoint.parent().unwrap_or(Path::new(".")).join(NET_SIDECAR);
        let s: NetSidecar = read_toml(&path)?;
        s.net.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sidecar serializes")
    }
}

pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
