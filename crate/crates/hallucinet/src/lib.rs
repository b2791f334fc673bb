//! Teacher-student spatiotemporal feature hallucination on synthetic video.
//!
//! A frozen 3D-convolutional teacher computes clip-level features; a 2D
//! single-frame student is trained to regress ("hallucinate") those features
//! as an auxiliary task next to its main action task. The crate bundles the
//! synthetic clip generator, the model zoo, the losses, the training loops,
//! the evaluation metrics, and a cost profiler behind one CLI.
//!
//! Modules:
//! - [`synthvid`] — deterministic procedural clip generator and dataset files
//! - [`model_zoo`] — teacher, student, sequence aggregator, checkpoints
//! - [`losses`] — hallucination loss, task losses, multitask combination
//! - [`trainer`] — training loops, configs, logs
//! - [`evaluator`] — metrics and comparative reports
//! - [`profiler`] — parameter counts, FLOP estimates, latency measurement
//! - [`cli`] — the `hallucinet` command-line entry point

pub mod cli;
pub mod error;
pub mod evaluator;
pub mod hashing;
pub mod losses;
pub mod model_zoo;
pub mod nn;
pub mod profiler;
pub mod rng;
pub mod synthvid;
pub mod trainer;

pub use error::{Error, Result};

/// Code version stamped into provenance headers.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
