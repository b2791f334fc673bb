//! Cost accounting: exact parameter counts, analytic FLOP estimates, and
//! measured wall-clock per single-input inference.
//!
//! FLOP conventions (stated in every report): one multiply-accumulate counts
//! as 2 FLOPs; a convolution contributes 2 · output_elements ·
//! kernel_volume · in_channels; an affine map 2·in·out; pooling and
//! elementwise ops 1 FLOP per output element; recurrent cells are counted
//! per unrolled step. Latency covers the forward pass only, batch size 1,
//! single-threaded, on the monotonic clock.

use crate::error::{Error, Result};
use crate::model_zoo::{
    AggregatorConfig, SequenceAggregator, StudentConfig, StudentModel, TeacherConfig, TeacherModel,
};
use crate::nn::Params;
use ndarray::{Array1, Array3, Array4};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

/// One layer's contribution to the analytic cost estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerCost {
    pub name: String,
    pub flops: u64,
    pub params: u64,
}

/// Whole-model estimate = sum of per-layer estimates.
pub fn estimate_flops(layers: &[LayerCost]) -> u64 {
    layers.iter().map(|l| l.flops).sum()
}

pub fn total_params(layers: &[LayerCost]) -> u64 {
    layers.iter().map(|l| l.params).sum()
}

/// Exact count of scalar trainable parameters.
pub fn count_parameters(model: &dyn Params) -> u64 {
    model.num_params()
}

/// Teacher per-layer costs at its configured clip length.
pub fn teacher_cost(cfg: &TeacherConfig) -> Vec<LayerCost> {
    teacher_cost_with_len(cfg, cfg.clip_len)
}

/// Teacher per-layer costs for an arbitrary clip length (input
/// `[C, t, H, W]`); the conv portion scales linearly in t.
pub fn teacher_cost_with_len(cfg: &TeacherConfig, t_len: usize) -> Vec<LayerCost> {
    let k3 = (cfg.kernel * cfg.kernel * cfg.kernel) as u64;
    let mut layers = Vec::new();
    let (mut t, mut h, mut w) = (t_len, cfg.height, cfg.width);
    let mut c_in = cfg.in_channels;
    for (i, &c_out) in cfg.channels.iter().enumerate() {
        let out_elems = (c_out * t * h * w) as u64;
        layers.push(LayerCost {
            name: format!("block{i}.conv3d"),
            flops: 2 * out_elems * k3 * c_in as u64,
            params: (c_out * c_in) as u64 * k3 + c_out as u64,
        });
        layers.push(LayerCost {
            name: format!("block{i}.relu"),
            flops: out_elems,
            params: 0,
        });
        t /= 2;
        h /= 2;
        w /= 2;
        layers.push(LayerCost {
            name: format!("block{i}.pool"),
            flops: (c_out * t * h * w) as u64,
            params: 0,
        });
        c_in = c_out;
    }
    layers.push(LayerCost {
        name: "global_pool".into(),
        flops: c_in as u64,
        params: 0,
    });
    layers.push(LayerCost {
        name: "classifier".into(),
        flops: 2 * (c_in * cfg.num_classes) as u64,
        params: (c_in * cfg.num_classes + cfg.num_classes) as u64,
    });
    layers
}

/// Student per-layer costs. The full architecture is counted — backbone plus
/// every head — so variants that only re-wire head inputs (e.g. the direct
/// classifier at D_t == D_s) share identical cost columns.
pub fn student_cost(cfg: &StudentConfig) -> Vec<LayerCost> {
    let k2 = (cfg.kernel * cfg.kernel) as u64;
    let mut layers = Vec::new();
    let (mut h, mut w) = (cfg.height, cfg.width);
    let mut c_in = cfg.in_channels;
    let frames = if cfg.multiframe { 2u64 } else { 1 };
    for (i, &c_out) in cfg.channels.iter().enumerate() {
        let out_elems = (c_out * h * w) as u64 * frames;
        layers.push(LayerCost {
            name: format!("block{i}.conv2d"),
            flops: 2 * out_elems * k2 * c_in as u64,
            params: (c_out * c_in) as u64 * k2 + c_out as u64,
        });
        layers.push(LayerCost {
            name: format!("block{i}.relu"),
            flops: out_elems,
            params: 0,
        });
        h /= 2;
        w /= 2;
        layers.push(LayerCost {
            name: format!("block{i}.pool"),
            flops: (c_out * h * w) as u64 * frames,
            params: 0,
        });
        c_in = c_out;
    }
    layers.push(LayerCost {
        name: "global_pool".into(),
        flops: c_in as u64 * frames,
        params: 0,
    });
    let head_in = cfg.head_in() as u64;
    let cls_in = if cfg.direct { cfg.teacher_dim as u64 } else { head_in };
    layers.push(LayerCost {
        name: "hallucination".into(),
        flops: 2 * head_in * cfg.teacher_dim as u64,
        params: head_in * cfg.teacher_dim as u64 + cfg.teacher_dim as u64,
    });
    layers.push(LayerCost {
        name: "classifier".into(),
        flops: 2 * cls_in * cfg.num_classes as u64,
        params: cls_in * cfg.num_classes as u64 + cfg.num_classes as u64,
    });
    for (g, &a) in cfg.attribute_arities.iter().enumerate() {
        layers.push(LayerCost {
            name: format!("attr{g}"),
            flops: 2 * head_in * a as u64,
            params: head_in * a as u64 + a as u64,
        });
    }
    layers.push(LayerCost {
        name: "quality".into(),
        flops: 2 * head_in,
        params: head_in + 1,
    });
    layers
}

/// Aggregator costs for a sequence of `steps` inputs: two gate gemms per
/// unrolled step plus 9·H elementwise ops (4 gate activations, 3 for the
/// cell update, tanh, and the output product), then the heads once.
pub fn aggregator_cost(cfg: &AggregatorConfig, steps: usize) -> Vec<LayerCost> {
    let (d, hd) = (cfg.input_dim as u64, cfg.hidden_dim as u64);
    let mut layers = Vec::new();
    let per_step = 2 * (4 * hd) * d + 2 * (4 * hd) * hd + 9 * hd;
    layers.push(LayerCost {
        name: format!("lstm[{steps} steps]"),
        flops: per_step * steps as u64,
        params: 4 * hd * d + 4 * hd * hd + 4 * hd,
    });
    for (g, &a) in cfg.attribute_arities.iter().enumerate() {
        layers.push(LayerCost {
            name: format!("attr{g}"),
            flops: 2 * hd * a as u64,
            params: hd * a as u64 + a as u64,
        });
    }
    layers.push(LayerCost {
        name: "quality".into(),
        flops: 2 * hd,
        params: hd + 1,
    });
    layers
}

/// Latency measurement result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_secs: f64,
    pub stddev_secs: f64,
    /// One entry per timed run, nanoseconds.
    pub runs_ns: Vec<u64>,
    pub warmups: usize,
    pub hardware: String,
}

fn hardware_string() -> String {
    format!(
        "{}-{} single-threaded",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

fn summarize(runs_ns: Vec<u64>, warmups: usize) -> LatencyStats {
    let n = runs_ns.len() as f64;
    let mean = runs_ns.iter().map(|&v| v as f64).sum::<f64>() / n / 1e9;
    let var = runs_ns
        .iter()
        .map(|&v| (v as f64 / 1e9 - mean).powi(2))
        .sum::<f64>()
        / n;
    LatencyStats {
        mean_secs: mean,
        stddev_secs: var.sqrt(),
        runs_ns,
        warmups,
        hardware: hardware_string(),
    }
}

fn check_counts(n: usize, w: usize) -> Result<()> {
    if n < 10 {
        return Err(Error::InvalidArgument(format!("latency runs N={n} must be >= 10")));
    }
    if w < 3 {
        return Err(Error::InvalidArgument(format!("latency warmups W={w} must be >= 3")));
    }
    Ok(())
}

/// W untimed warmups, then N timed single-input forward passes on the
/// monotonic clock.
pub fn measure_teacher_latency(model: &TeacherModel, n: usize, w: usize) -> Result<LatencyStats> {
    check_counts(n, w)?;
    let cfg = &model.config;
    let x = Array4::from_elem((cfg.in_channels, cfg.clip_len, cfg.height, cfg.width), 0.5);
    for _ in 0..w {
        let _ = model.forward(&x)?;
    }
    let mut runs = Vec::with_capacity(n);
    for _ in 0..n {
        let t0 = Instant::now();
        let _ = model.forward(&x)?;
        runs.push(t0.elapsed().as_nanos() as u64);
    }
    Ok(summarize(runs, w))
}

pub fn measure_student_latency(model: &StudentModel, n: usize, w: usize) -> Result<LatencyStats> {
    check_counts(n, w)?;
    let cfg = &model.config;
    let x = Array3::from_elem((cfg.in_channels, cfg.height, cfg.width), 0.5);
    let run = |m: &StudentModel| -> Result<()> {
        if m.config.multiframe {
            m.forward_pair(&x, &x)?;
        } else {
            m.forward(&x)?;
        }
        Ok(())
    };
    for _ in 0..w {
        run(model)?;
    }
    let mut runs = Vec::with_capacity(n);
    for _ in 0..n {
        let t0 = Instant::now();
        run(model)?;
        runs.push(t0.elapsed().as_nanos() as u64);
    }
    Ok(summarize(runs, w))
}

pub fn measure_aggregator_latency(
    model: &SequenceAggregator,
    steps: usize,
    n: usize,
    w: usize,
) -> Result<LatencyStats> {
    check_counts(n, w)?;
    let xs: Vec<Array1<f64>> = (0..steps)
        .map(|_| Array1::from_elem(model.config.input_dim, 0.5))
        .collect();
    for _ in 0..w {
        let _ = model.forward(&xs)?;
    }
    let mut runs = Vec::with_capacity(n);
    for _ in 0..n {
        let t0 = Instant::now();
        let _ = model.forward(&xs)?;
        runs.push(t0.elapsed().as_nanos() as u64);
    }
    Ok(summarize(runs, w))
}

/// Write the raw timing file: one nanosecond integer per line.
pub fn write_timing_file(stats: &LatencyStats, path: &Path) -> Result<()> {
    let mut out = String::new();
    for ns in &stats.runs_ns {
        out.push_str(&ns.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Cost summary for one model (the Table-3-style row material).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostReport {
    pub model_name: String,
    pub parameter_count: u64,
    /// Analytic FLOPs per single inference (MAC = 2 FLOPs).
    pub flops: u64,
    pub latency: LatencyStats,
    pub input_shape: Vec<usize>,
    pub flop_convention: String,
}

pub const FLOP_CONVENTION: &str =
    "MAC=2 FLOPs; conv 2*out_elems*kvol*cin; affine 2*in*out; pool/elementwise 1 per output";

pub fn student_cost_report(model: &StudentModel, name: &str, n: usize, w: usize) -> Result<CostReport> {
    let layers = student_cost(&model.config);
    Ok(CostReport {
        model_name: name.to_string(),
        parameter_count: count_parameters(model),
        flops: estimate_flops(&layers),
        latency: measure_student_latency(model, n, w)?,
        input_shape: vec![model.config.in_channels, model.config.height, model.config.width],
        flop_convention: FLOP_CONVENTION.to_string(),
    })
}

pub fn teacher_cost_report(model: &TeacherModel, name: &str, n: usize, w: usize) -> Result<CostReport> {
    let layers = teacher_cost(&model.config);
    Ok(CostReport {
        model_name: name.to_string(),
        parameter_count: count_parameters(model),
        flops: estimate_flops(&layers),
        latency: measure_teacher_latency(model, n, w)?,
        input_shape: vec![
            model.config.in_channels,
            model.config.clip_len,
            model.config.height,
            model.config.width,
        ],
        flop_convention: FLOP_CONVENTION.to_string(),
    })
}

/// One row of the cost/accuracy table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostAccuracyRow {
    pub model: String,
    /// split name → top-1 accuracy.
    pub accuracy: std::collections::BTreeMap<String, f64>,
    pub time_per_inference_secs: f64,
    pub flops: u64,
    pub params: u64,
}

/// The combined cost-vs-accuracy report: rows for the vanilla 2D student,
/// the direct-mode student, and the 3D teacher, plus the student/teacher
/// time ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostAccuracyTable {
    pub rows: Vec<CostAccuracyRow>,
    /// student time / teacher time (the "fraction of 3D cost" headline).
    pub student_over_teacher_time: f64,
    pub flop_convention: String,
    pub hardware: String,
}

/// Evaluate and time the three models on the given split(s).
pub fn cost_accuracy_table(
    vanilla: &StudentModel,
    direct: &StudentModel,
    teacher: &TeacherModel,
    splits: &[(&str, &crate::trainer::ClipDataset)],
    n: usize,
    w: usize,
) -> Result<CostAccuracyTable> {
    use crate::trainer::argmax_of;
    let mut rows = Vec::new();
    let mut student_time = 0.0;
    let teacher_time;
    for (name, model) in [("vanilla 2D-CNN", vanilla), ("direct 2D-CNN", direct)] {
        let mut accuracy = std::collections::BTreeMap::new();
        for (split, ds) in splits {
            let report = crate::evaluator::evaluate_classification(model, None, ds, split)?;
            accuracy.insert(split.to_string(), report.metric("top1").unwrap());
        }
        let cost = student_cost_report(model, name, n, w)?;
        if name.starts_with("vanilla") {
            student_time = cost.latency.mean_secs;
        }
        rows.push(CostAccuracyRow {
            model: name.to_string(),
            accuracy,
            time_per_inference_secs: cost.latency.mean_secs,
            flops: cost.flops,
            params: cost.parameter_count,
        });
    }
    {
        let mut accuracy = std::collections::BTreeMap::new();
        for (split, ds) in splits {
            let mut preds = Vec::new();
            let mut labels = Vec::new();
            for clip in &ds.clips {
                let (_, logits) = teacher.forward(&crate::model_zoo::clip_to_input(&clip.frames))?;
                preds.push(argmax_of(&logits));
                labels.push(clip.class_id);
            }
            accuracy.insert(split.to_string(), crate::evaluator::top1_accuracy(&preds, &labels)?);
        }
        let cost = teacher_cost_report(teacher, "teacher 3D-CNN", n, w)?;
        teacher_time = cost.latency.mean_secs;
        rows.push(CostAccuracyRow {
            model: "teacher 3D-CNN".to_string(),
            accuracy,
            time_per_inference_secs: cost.latency.mean_secs,
            flops: cost.flops,
            params: cost.parameter_count,
        });
    }
    Ok(CostAccuracyTable {
        rows,
        student_over_teacher_time: student_time / teacher_time,
        flop_convention: FLOP_CONVENTION.to_string(),
        hardware: hardware_string(),
    })
}
