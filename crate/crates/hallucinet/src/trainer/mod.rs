//! Training loops: teacher pretraining, student multitask training, long-
//! sequence aggregation training, and the pretrain→finetune grid.
//!
//! Determinism contract: with a fixed `TrainConfig::seed` (and single-
//! threaded execution, which is all this crate does) two runs produce
//! identical parameter trajectories. Model init and per-epoch shuffles are
//! derived from the seed through documented streams.

mod config;
mod log;
mod pretrain;
mod sequence;
mod student;
mod teacher;

pub use config::{LrSchedule, TrainConfig, TrainMode};
pub use log::{EpochRecord, LogHeader, TrainingLog, LOG_FORMAT};
pub use pretrain::{config_diff, pretrain_then_finetune, GridCell, PretrainFinetuneReport};
pub use sequence::{
    compute_sequence_targets, train_sequence_model, SequenceTask, SequenceTargets,
};
pub use student::{compute_clip_targets, student_input_frames, train_student};
pub use teacher::train_teacher;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::synthvid::VideoClip;
use ndarray::Array1;
use rand::seq::SliceRandom;
use std::path::Path;

/// Seed streams hanging off `TrainConfig::seed`.
const STREAM_MODEL_INIT: u64 = 1 << 40;
const STREAM_SHUFFLE_BASE: u64 = (1 << 40) + 1;

pub(crate) fn model_init_seed(seed: u64) -> u64 {
    derive_seed(seed, STREAM_MODEL_INIT)
}

/// Epoch shuffle: a pure function of (seed, epoch).
pub(crate) fn shuffled_indices(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(derive_seed(seed, STREAM_SHUFFLE_BASE + epoch as u64));
    idx.shuffle(&mut rng);
    idx
}

/// In-memory dataset: labeled clips plus class names.
#[derive(Debug, Clone)]
pub struct ClipDataset {
    pub name: String,
    pub class_names: Vec<String>,
    pub clips: Vec<VideoClip>,
}

impl ClipDataset {
    pub fn new(name: impl Into<String>, class_names: Vec<String>, clips: Vec<VideoClip>) -> Self {
        ClipDataset {
            name: name.into(),
            class_names,
            clips,
        }
    }

    /// Load a dataset from a manifest file; clip paths resolve relative to
    /// the manifest's directory.
    pub fn from_manifest(manifest_path: &Path) -> Result<ClipDataset> {
        let manifest = crate::synthvid::parse_manifest(
            &std::fs::read_to_string(manifest_path)
                .map_err(|_| Error::MissingFile(manifest_path.to_path_buf()))?,
        )?;
        let root = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let clips = crate::synthvid::load_clips(&manifest, root)?;
        Ok(ClipDataset {
            name: format!("{}-{}", manifest.name, manifest.split.as_str()),
            class_names: manifest.class_names,
            clips,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    /// (channels, height, width) of the first clip.
    pub fn frame_geometry(&self) -> Result<(usize, usize, usize)> {
        let c = self
            .clips
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty dataset".into()))?;
        let s = c.frames.shape();
        Ok((s[1], s[2], s[3]))
    }

    pub fn clip_len(&self) -> Result<usize> {
        Ok(self
            .clips
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty dataset".into()))?
            .frames
            .shape()[0])
    }
}

/// Mean over an f64 accumulator.
pub(crate) fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub(crate) fn argmax(v: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest logit.
pub fn argmax_of(v: &Array1<f64>) -> usize {
    argmax(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shuffles_are_deterministic_and_epoch_dependent() {
        let a = shuffled_indices(10, 7, 0);
        let b = shuffled_indices(10, 7, 0);
        let c = shuffled_indices(10, 7, 1);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
    }
}
