use serde::{Deserialize, Serialize};

use super::adam::AdamConfig;
use crate::error::{Error, Result};
use crate::model::SIDE_OUTPUTS;

/// Benchmark the run targets; fixes the learning-rate schedule and the
/// matching tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetProfile {
    Biped,
    Bsds,
    Nyud,
}

impl DatasetProfile {
    /// Epochs trained at the initial rate before the ÷10 drop.
    pub fn lr_drop_after(self) -> usize {
        match self {
            DatasetProfile::Biped => 10,
            DatasetProfile::Bsds | DatasetProfile::Nyud => 20,
        }
    }

    pub fn max_epochs(self) -> usize {
        match self {
            DatasetProfile::Biped => 15,
            DatasetProfile::Bsds | DatasetProfile::Nyud => 25,
        }
    }

    /// Matching tolerance as a fraction of the image diagonal.
    pub fn tolerance(self) -> f64 {
        match self {
            DatasetProfile::Nyud => 0.011,
            DatasetProfile::Biped | DatasetProfile::Bsds => 0.0075,
        }
    }
}

impl std::str::FromStr for DatasetProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "biped" => Ok(DatasetProfile::Biped),
            "bsds" => Ok(DatasetProfile::Bsds),
            "nyud" => Ok(DatasetProfile::Nyud),
            other => Err(Error::config(format!("unknown dataset profile {other:?}"))),
        }
    }
}

pub const INITIAL_LR: f64 = 1e-4;

/// Learning rate of the paper schedule for a 1-based epoch.
pub fn lr_at(epoch: usize, profile: DatasetProfile) -> f64 {
    TrainConfig::for_profile(profile).lr_at(epoch)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dataset: DatasetProfile,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Overrides the profile's drop epoch.
    pub lr_drop_after: Option<usize>,
    pub lr_drop_factor: f64,
    /// Overrides the profile's epoch budget.
    pub max_epochs: Option<usize>,
    /// Stop after this many optimizer steps (smoke runs).
    pub max_steps: Option<usize>,
    pub side_weights: [f64; SIDE_OUTPUTS],
    pub seed: u64,
    /// Training crop `[h, w]`; images smaller than the crop keep their size.
    pub crop: Option<[usize; 2]>,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::for_profile(DatasetProfile::Biped)
    }
}

impl TrainConfig {
    pub fn for_profile(dataset: DatasetProfile) -> Self {
        TrainConfig {
            dataset,
            batch_size: 6,
            lr: INITIAL_LR,
            weight_decay: 1e-12,
            lr_drop_after: None,
            lr_drop_factor: 10.0,
            max_epochs: None,
            max_steps: None,
            side_weights: [1.0; SIDE_OUTPUTS],
            seed: 0,
            crop: Some([320, 320]),
            adam: AdamConfig::default(),
        }
    }

    pub fn lr_drop_after(&self) -> usize {
        self.lr_drop_after.unwrap_or(self.dataset.lr_drop_after())
    }

    pub fn max_epochs(&self) -> usize {
        self.max_epochs.unwrap_or(self.dataset.max_epochs())
    }

    /// Initial rate through epoch `lr_drop_after`, divided by the drop
    /// factor from the next epoch on.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if epoch > self.lr_drop_after() {
            self.lr / self.lr_drop_factor
        } else {
            self.lr
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if !(self.lr > 0.0) || !(self.lr_drop_factor > 0.0) || self.weight_decay < 0.0 {
            return Err(Error::config("learning rate and drop factor must be positive"));
        }
        if self.side_weights.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::config("side-loss weights must be positive"));
        }
        if self.max_epochs() == 0 {
            return Err(Error::config("max_epochs must be positive"));
        }
        if let Some([h, w]) = self.crop {
            if h == 0 || w == 0 {
                return Err(Error::config("crop extents must be positive"));
            }
        }
        Ok(())
    }
}
