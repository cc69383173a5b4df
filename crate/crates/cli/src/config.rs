use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use topofeat::features::FeatureSet;
use topofeat::fusion::TrainConfig;
use topofeat::segmentation::SegmentationConfig;
use topofeat::svm::SvmConfig;

/// Settings loadable from `--config`; command-line flags take precedence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub segmentation: SegmentationConfig,
    pub feature_set: FeatureSet,
    pub svm: SvmConfig,
    pub fusion: TrainConfig,
    pub train_fraction: f64,
    pub balanced_test: Option<usize>,
    /// Width of the synthetic backbone used when no backbone CSV is given.
    pub backbone_dim: usize,
    pub backbone_separation: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            segmentation: SegmentationConfig::default(),
            feature_set: FeatureSet::All,
            svm: SvmConfig::default(),
            fusion: TrainConfig { reduced_dim: 64, ..TrainConfig::default() },
            train_fraction: 0.7,
            balanced_test: None,
            backbone_dim: 16,
            backbone_separation: 1.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Copies the run seed into the trainer configs.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.svm.seed = self.seed;
        self.fusion.seed = self.seed;
        self
    }
}
