//! Training configuration, parsed from TOML-compatible key-value files.
//! Unknown keys are errors.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Training modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    /// Main task only (λ forced to 0).
    Vanilla,
    /// Main task + λ-weighted hallucination task.
    Hallucinet,
    /// Like hallucinet, but the classifier reads the hallucinated vector.
    Direct,
    /// Two-frame student (ordered pair with gap k).
    Multiframe,
}

impl TrainMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::Vanilla => "vanilla",
            TrainMode::Hallucinet => "hallucinet",
            TrainMode::Direct => "direct",
            TrainMode::Multiframe => "multiframe",
        }
    }
}

/// Learning-rate schedules: constant, or decay by 10x every 5 epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LrSchedule {
    Constant,
    StepDecay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Adam initial learning rate; standard moment defaults apply.
    pub learning_rate: f64,
    /// Hallucination-loss weight in the multitask objective.
    pub lambda: f64,
    pub mode: TrainMode,
    /// Frame gap k for the multiframe pair.
    pub frame_gap: usize,
    pub lr_schedule: LrSchedule,
    pub seed: u64,
    /// Write a checkpoint every N epochs (0 = final only).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            learning_rate: 1e-4,
            lambda: 50.0,
            mode: TrainMode::Hallucinet,
            frame_gap: 3,
            lr_schedule: LrSchedule::Constant,
            seed: 0,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::Config("lambda must be finite and >= 0".into()));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }

    /// λ actually applied: vanilla mode forces 0.
    pub fn effective_lambda(&self) -> f64 {
        if self.mode == TrainMode::Vanilla {
            0.0
        } else {
            self.lambda
        }
    }

    /// Learning rate at a (0-indexed) epoch.
    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        match self.lr_schedule {
            LrSchedule::Constant => self.learning_rate,
            LrSchedule::StepDecay => self.learning_rate / 10f64.powi((epoch / 5) as i32),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<TrainConfig> {
        let cfg: TrainConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("train config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<TrainConfig> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn config_hash(&self) -> String {
        let text = toml::to_string(self).expect("train config serializes");
        crate::hashing::short_hash(text.as_bytes())
    }
}
