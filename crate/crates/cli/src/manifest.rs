//! Dataset manifests: images, their annotations and modality tags.

use std::path::{Path, PathBuf};

use msmsf_core::train::{AugmentPolicy, DatasetProfile};
use msmsf_core::Error;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    #[default]
    Rgb,
    /// Pre-computed three-channel depth encoding.
    Hha,
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Modality::Rgb => "rgb",
            Modality::Hha => "hha",
        })
    }
}

impl std::str::FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rgb" => Ok(Modality::Rgb),
            "hha" => Ok(Modality::Hha),
            other => Err(format!("unknown modality {other:?} (expected rgb or hha)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Val,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub image: PathBuf,
    /// One binary edge map per annotator.
    pub annotations: Vec<PathBuf>,
    #[serde(default)]
    pub modality: Modality,
}

impl ManifestEntry {
    /// File name without extension; pairs predictions with ground truth.
    pub fn stem(&self) -> String {
        file_stem(&self.image)
    }
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    #[serde(default)]
    pub split: Split,
    /// Benchmark whose conventions apply (matching tolerance, schedule).
    #[serde(default)]
    pub dataset: Option<DatasetProfile>,
    /// One of "none", "flip", "flip-rotate".
    #[serde(default = "default_augmentation")]
    pub augmentation: String,
    #[serde(default, rename = "entry")]
    pub entries: Vec<ManifestEntry>,
}

fn default_augmentation() -> String {
    "none".into()
}

impl DatasetManifest {
    /// Reads `path` (relative to `root`) and checks that every referenced
    /// file exists. Entry paths are relative to `root`.
    pub fn load(root: &Path, path: &Path) -> Result<Self> {
        let full = root.join(path);
        let text = std::fs::read_to_string(&full)
            .map_err(|e| CliError::usage(format!("cannot read manifest {}: {e}", full.display())))?;
        let manifest: DatasetManifest = toml::from_str(&text).map_err(|e| CliError::Parse {
            path: full.clone(),
            message: e.to_string(),
        })?;
        manifest.policy()?;
        for e in &manifest.entries {
            for p in std::iter::once(&e.image).chain(&e.annotations) {
                if !root.join(p).is_file() {
                    return Err(Error::Data(format!(
                        "manifest {} references missing file {}",
                        full.display(),
                        root.join(p).display()
                    ))
                    .into());
                }
            }
        }
        Ok(manifest)
    }

    pub fn policy(&self) -> Result<AugmentPolicy> {
        Ok(AugmentPolicy::by_id(&self.augmentation)?)
    }

    /// The single modality shared by all entries.
    pub fn modality(&self) -> Result<Modality> {
        let first = self.entries.first().map(|e| e.modality).unwrap_or_default();
        if let Some(e) = self.entries.iter().find(|e| e.modality != first) {
            return Err(Error::Data(format!(
                "manifest {} mixes {first} and {} entries ({})",
                self.name,
                e.modality,
                e.image.display()
            ))
            .into());
        }
        Ok(first)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}
