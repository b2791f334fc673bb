//! Deterministic procedural generator of labeled synthetic video clips.
//!
//! Clips are short grayscale films of a single sprite following a per-class
//! motion program (translate, rotate, grow/shrink, static). Classes come in
//! ambiguous pairs whose members are indistinguishable from a single frame
//! except for a first-frame causal cue: a bright dot beside the sprite whose
//! side encodes the upcoming motion with configurable reliability.

mod clip_file;
mod generate;
mod manifest;
mod motion;
mod render;

pub use clip_file::{decode_clip, encode_clip, read_clip_file, read_clip_frames, write_clip_file};
pub use generate::{build_dataset, generate_clip, generate_split, BuiltDataset};
pub use manifest::{load_clips, parse_manifest, read_manifest, verify_manifest, ManifestRecord};
pub use motion::{
    attributes_for, draw_motion_params, quality_for, MotionClass, MotionParams, ATTRIBUTE_ARITIES,
};

use crate::error::{Error, Result};
use ndarray::{Array4, ArrayView3};
use serde::{Deserialize, Serialize};

/// A fixed-length frame stack with class, attribute, and quality labels.
///
/// Invariants: `frames` has shape `[T, C, H, W]` with every value in [0, 1];
/// regenerating with the same seed and config is bit-identical.
#[derive(Debug, Clone)]
pub struct VideoClip {
    pub frames: Array4<f32>,
    pub class_id: usize,
    pub attributes: [u8; 5],
    /// Motion quality score in [0, 1]; see [`quality_for`].
    pub quality: f64,
    pub clip_id: String,
    pub seed: u64,
}

impl VideoClip {
    pub fn num_frames(&self) -> usize {
        self.frames.shape()[0]
    }
}

/// Frame at index `floor(T/2)`.
pub fn center_frame(clip: &VideoClip) -> ArrayView3<'_, f32> {
    center_frame_of(&clip.frames)
}

pub fn center_frame_of(frames: &Array4<f32>) -> ArrayView3<'_, f32> {
    let t = frames.shape()[0];
    debug_assert!(t >= 1);
    frames.index_axis(ndarray::Axis(0), t / 2)
}

/// Indices 0, stride, 2·stride, … below `len`.
pub fn sparse_indices(len: usize, stride: usize) -> Result<Vec<usize>> {
    if stride == 0 {
        return Err(Error::InvalidArgument("sparse_sample: stride must be > 0".into()));
    }
    if len < stride {
        return Err(Error::InvalidArgument(format!(
            "sparse_sample: sequence length {len} shorter than stride {stride}"
        )));
    }
    Ok((0..len).step_by(stride).collect())
}

/// Every stride-th frame of a long clip, starting at frame 0.
pub fn sparse_sample(frames: &Array4<f32>, stride: usize) -> Result<Vec<ArrayView3<'_, f32>>> {
    let idx = sparse_indices(frames.shape()[0], stride)?;
    Ok(idx
        .into_iter()
        .map(|i| frames.index_axis(ndarray::Axis(0), i))
        .collect())
}

/// Sprite shapes. The attribute label is the variant index here, independent
/// of which subset a config enables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpriteShape {
    Square,
    Disk,
    Triangle,
}

impl SpriteShape {
    pub fn label(self) -> u8 {
        match self {
            SpriteShape::Square => 0,
            SpriteShape::Disk => 1,
            SpriteShape::Triangle => 2,
        }
    }
}

/// Motion-parameter ranges. All magnitudes are in pixels or degrees over the
/// whole clip.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionRanges {
    /// Sprite radius range (px).
    pub radius: (f64, f64),
    /// Per-leg translation displacement range (px).
    pub displacement: (f64, f64),
    /// Total rotation for count-bucket 1 (degrees).
    pub rotation_half_deg: (f64, f64),
    /// Total rotation for count-bucket 2 (degrees).
    pub rotation_full_deg: (f64, f64),
    /// Relative radius growth/shrink rate over the clip.
    pub scale_rate: (f64, f64),
    /// Maximum path jitter amplitude (px); 0 (the default) disables jitter.
    pub jitter_max: f64,
}

impl Default for MotionRanges {
    fn default() -> Self {
        MotionRanges {
            radius: (3.5, 4.5),
            displacement: (2.5, 4.0),
            rotation_half_deg: (120.0, 200.0),
            rotation_full_deg: (330.0, 420.0),
            scale_rate: (0.35, 0.55),
            jitter_max: 0.0,
        }
    }
}

/// Generator configuration; see module docs for the class set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub name: String,
    /// Clip length T.
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Number of motion classes K (prefix of the canonical class list).
    pub num_classes: usize,
    pub sprites: Vec<SpriteShape>,
    /// Std-dev of i.i.d. additive Gaussian pixel noise, clamped to [0, 1].
    pub noise_std: f64,
    /// Probability that the first-frame cue encodes the true motion.
    pub cue_strength: f64,
    /// Intensity of the cue dot in [0, 1] (1.0 = maximally visible).
    pub cue_contrast: f64,
    pub train_clips: usize,
    pub val_clips: usize,
    pub test_clips: usize,
    pub master_seed: u64,
    pub motion: MotionRanges,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            name: "synthvid".into(),
            frames: 16,
            height: 32,
            width: 32,
            channels: 1,
            num_classes: 8,
            sprites: vec![SpriteShape::Square, SpriteShape::Disk, SpriteShape::Triangle],
            noise_std: 0.0,
            cue_strength: 1.0,
            cue_contrast: 1.0,
            train_clips: 160,
            val_clips: 40,
            test_clips: 40,
            master_seed: 0,
            motion: MotionRanges::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 || self.num_classes > MotionClass::COUNT {
            return Err(Error::Config(format!(
                "num_classes must be in [2, {}], got {}",
                MotionClass::COUNT,
                self.num_classes
            )));
        }
        if !(0.0..=1.0).contains(&self.cue_strength) {
            return Err(Error::Config("cue_strength must be in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.cue_contrast) {
            return Err(Error::Config("cue_contrast must be in [0, 1]".into()));
        }
        if self.train_clips == 0 || self.val_clips == 0 || self.test_clips == 0 {
            return Err(Error::Config("split sizes must be positive".into()));
        }
        if self.frames == 0 || self.channels == 0 {
            return Err(Error::Config("frames and channels must be >= 1".into()));
        }
        if self.sprites.is_empty() {
            return Err(Error::Config("sprite set must not be empty".into()));
        }
        if self.noise_std < 0.0 || !self.noise_std.is_finite() {
            return Err(Error::Config("noise_std must be finite and >= 0".into()));
        }
        let m = &self.motion;
        for (name, (lo, hi)) in [
            ("radius", m.radius),
            ("displacement", m.displacement),
            ("rotation_half_deg", m.rotation_half_deg),
            ("rotation_full_deg", m.rotation_full_deg),
            ("scale_rate", m.scale_rate),
        ] {
            if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi < lo {
                return Err(Error::Config(format!("invalid motion range {name}: ({lo}, {hi})")));
            }
        }
        if m.jitter_max < 0.0 {
            return Err(Error::Config("jitter_max must be >= 0".into()));
        }
        // The canvas must fit sprite + cue + motion for every class family.
        for class in MotionClass::all().iter().take(self.num_classes) {
            let margin = motion::start_margin(*class, m);
            let (w, h) = (self.width as f64, self.height as f64);
            if margin >= w - 1.0 - margin || margin >= h - 1.0 - margin {
                return Err(Error::Config(format!(
                    "degenerate config: {}x{} canvas too small for sprite and motion of class {}",
                    self.width,
                    self.height,
                    class.name()
                )));
            }
        }
        Ok(())
    }

    /// Names of the K enabled classes.
    pub fn class_names(&self) -> Vec<String> {
        MotionClass::all()
            .iter()
            .take(self.num_classes)
            .map(|c| c.name().to_string())
            .collect()
    }

    /// Short hash of the TOML serialization, stamped into manifests.
    pub fn config_hash(&self) -> String {
        let text = toml::to_string(self).expect("generator config serializes");
        crate::hashing::short_hash(text.as_bytes())
    }
}

/// Dataset split identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn all() -> [Split; 3] {
        [Split::Train, Split::Val, Split::Test]
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Format(format!("unknown split: {other}"))),
        }
    }
}

/// Manifest of one split: header metadata plus one record per clip file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub split: Split,
    pub class_names: Vec<String>,
    pub generator_config_hash: String,
    pub records: Vec<ManifestRecord>,
}
