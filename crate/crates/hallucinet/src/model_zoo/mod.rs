//! Model architectures: 3D clip teacher, 2D frame student (with
//! hallucination and task heads), and the recurrent sequence aggregator.
//!
//! All models are plain parameter structs with explicit forward/backward
//! passes; they are immutable during inference and safe to share read-only.

mod aggregator;
mod checkpoint;
mod student;
mod teacher;

pub use aggregator::{AggregatorCache, AggregatorConfig, SequenceAggregator};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, load_student, load_teacher,
    save_checkpoint, CheckpointRef, ModelCheckpoint,
};
pub use student::{StudentCache, StudentConfig, StudentHeadGrads, StudentModel, StudentOutput};
pub use teacher::{TeacherCache, TeacherConfig, TeacherModel};

use ndarray::{Array1, Array3, Array4, ArrayView3};

/// A D-dimensional embedding; finite values are enforced at the loss
/// boundary.
pub type FeatureVector = Array1<f64>;

/// Convert clip frames `[T, C, H, W]` (f32 pixels) to the teacher's
/// channels-first f64 input `[C, T, H, W]`.
pub fn clip_to_input(frames: &Array4<f32>) -> Array4<f64> {
    let (t, c, h, w) = frames.dim();
    Array4::from_shape_fn((c, t, h, w), |(ci, ti, y, x)| f64::from(frames[[ti, ci, y, x]]))
}

/// Convert a 16-frame window starting at `start` to teacher input.
pub fn window_to_input(frames: &Array4<f32>, start: usize, len: usize) -> Array4<f64> {
    let (_, c, h, w) = frames.dim();
    Array4::from_shape_fn((c, len, h, w), |(ci, ti, y, x)| {
        f64::from(frames[[start + ti, ci, y, x]])
    })
}

/// Convert a single frame `[C, H, W]` to student input.
pub fn frame_to_input(frame: &ArrayView3<f32>) -> Array3<f64> {
    frame.mapv(f64::from)
}
