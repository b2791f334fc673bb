//! Metrics and comparative reports: top-1 accuracy, per-attribute accuracy,
//! Spearman rank correlation, held-out hallucination error, and the
//! single-frame vs two-frame comparison.

pub mod tables;

use crate::error::{Error, Result};
use crate::losses;
use crate::model_zoo::{clip_to_input, SequenceAggregator, StudentModel, TeacherModel};
use crate::synthvid::{sparse_indices, VideoClip};
use crate::trainer::{self, ClipDataset, SequenceTask, TrainConfig};
use ndarray::Array3;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Fraction of exact matches.
pub fn top1_accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("top1_accuracy: empty input".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "top1_accuracy: {} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let correct = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / predictions.len() as f64)
}

/// Average ranks with ties sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ranks are 1-based; tied entries get the mean of their rank span
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average-rank vectors.
/// A constant input has no rank variance and is an error, not NaN.
pub fn spearman_correlation(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "spearman: {} vs {} entries",
            pred.len(),
            truth.len()
        )));
    }
    if pred.len() < 2 {
        return Err(Error::InvalidArgument("spearman needs at least 2 samples".into()));
    }
    if pred.iter().chain(truth).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spearman inputs must be finite".into()));
    }
    let ra = average_ranks(pred);
    let rb = average_ranks(truth);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (a, b) in ra.iter().zip(rb.iter()) {
        cov += (a - ma) * (b - mb);
        va += (a - ma) * (a - ma);
        vb += (b - mb) * (b - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::InvalidArgument(
            "spearman undefined for a constant input (zero rank variance)".into(),
        ));
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

/// Per-group top-1 accuracy over the 5 attribute groups.
pub fn attribute_accuracies(preds: &[[usize; 5]], labels: &[[u8; 5]]) -> Result<[f64; 5]> {
    if preds.is_empty() {
        return Err(Error::InvalidArgument("attribute_accuracies: empty input".into()));
    }
    if preds.len() != labels.len() {
        return Err(Error::Shape("attribute_accuracies: length mismatch".into()));
    }
    let mut out = [0.0; 5];
    for k in 0..5 {
        let correct = preds
            .iter()
            .zip(labels)
            .filter(|(p, l)| p[k] == l[k] as usize)
            .count();
        out[k] = correct as f64 / preds.len() as f64;
    }
    Ok(out)
}

/// Student input frames chosen by its configured mode.
fn student_inputs(student: &StudentModel, clip: &VideoClip) -> Result<Vec<Array3<f64>>> {
    let mode = if student.config.multiframe {
        trainer::TrainMode::Multiframe
    } else {
        trainer::TrainMode::Hallucinet
    };
    trainer::student_input_frames(clip, mode, student.config.frame_gap)
}

fn student_forward(
    student: &StudentModel,
    frames: &[Array3<f64>],
) -> Result<crate::model_zoo::StudentOutput> {
    let (out, _) = if student.config.multiframe {
        student.forward_pair(&frames[0], &frames[1])?
    } else {
        student.forward(&frames[0])?
    };
    Ok(out)
}

/// Mean hallucination loss over a split: the student hallucinates from its
/// configured frames, the frozen teacher supplies clip-feature targets.
pub fn hallucination_error(
    student: &StudentModel,
    teacher: &TeacherModel,
    clips: &[VideoClip],
) -> Result<f64> {
    if clips.is_empty() {
        return Err(Error::InvalidArgument("hallucination_error: empty split".into()));
    }
    if !teacher.frozen() {
        return Err(Error::InvalidArgument("hallucination_error: teacher must be frozen".into()));
    }
    if student.config.teacher_dim != teacher.feature_dim() {
        return Err(Error::Shape(format!(
            "student teacher_dim {} != teacher feature dim {}",
            student.config.teacher_dim,
            teacher.feature_dim()
        )));
    }
    let mut acc = 0.0;
    for clip in clips {
        let (phi_t, _) = teacher.forward(&clip_to_input(&clip.frames))?;
        let out = student_forward(student, &student_inputs(student, clip)?)?;
        acc += losses::hallucination_loss(&out.hallucinated, &phi_t)?;
    }
    Ok(acc / clips.len() as f64)
}

/// Evaluation results for one split. Machine-readable reports built from
/// this struct are the source of truth for downstream tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub metrics: BTreeMap<String, f64>,
    /// confusion[true_class][predicted_class]; empty if not applicable.
    pub confusion: Vec<Vec<usize>>,
    pub sample_count: usize,
    pub checkpoint_hash: String,
    pub code_version: String,
}

impl EvalReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }
}

/// Center-frame (or frame-pair) classification evaluation, with held-out
/// hallucination error when a teacher is supplied.
pub fn evaluate_classification(
    student: &StudentModel,
    teacher: Option<&TeacherModel>,
    ds: &ClipDataset,
    split: &str,
) -> Result<EvalReport> {
    use crate::nn::Params;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("evaluate_classification: empty split".into()));
    }
    let k = ds.num_classes();
    let mut confusion = vec![vec![0usize; k]; k];
    let mut preds = Vec::with_capacity(ds.len());
    let mut labels = Vec::with_capacity(ds.len());
    for clip in &ds.clips {
        let out = student_forward(student, &student_inputs(student, clip)?)?;
        let pred = trainer::argmax_of(&out.class_logits);
        confusion[clip.class_id][pred] += 1;
        preds.push(pred);
        labels.push(clip.class_id);
    }
    let mut metrics = BTreeMap::new();
    metrics.insert("top1".to_string(), top1_accuracy(&preds, &labels)?);
    if let Some(t) = teacher {
        let err = hallucination_error(student, t, &ds.clips)?;
        metrics.insert("hallucination_error".to_string(), err);
        metrics.insert("hallucination_error_x1e3".to_string(), err * 1e3);
    }
    Ok(EvalReport {
        split: split.to_string(),
        metrics,
        confusion,
        sample_count: ds.len(),
        checkpoint_hash: student.checksum(),
        code_version: crate::CODE_VERSION.to_string(),
    })
}

/// Sequence-task evaluation: sparse-sampled frames through the student,
/// aggregated; attribute accuracies and/or quality Spearman.
pub fn evaluate_sequence(
    student: &StudentModel,
    agg: &SequenceAggregator,
    ds: &ClipDataset,
    stride: usize,
    task: SequenceTask,
) -> Result<EvalReport> {
    use crate::nn::Params;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("evaluate_sequence: empty split".into()));
    }
    let mut attr_preds = Vec::new();
    let mut attr_labels = Vec::new();
    let mut quality_pairs = Vec::new();
    for clip in &ds.clips {
        let idx = sparse_indices(clip.num_frames(), stride)?;
        let mut embeddings = Vec::with_capacity(idx.len());
        for i in idx {
            let frame = crate::model_zoo::frame_to_input(&clip.frames.index_axis(ndarray::Axis(0), i));
            let (out, _) = student.forward(&frame)?;
            embeddings.push(out.embedding);
        }
        let out = agg.forward(&embeddings)?;
        let mut p = [0usize; 5];
        for (kk, logits) in out.attribute_logits.iter().enumerate() {
            p[kk] = trainer::argmax_of(logits);
        }
        attr_preds.push(p);
        attr_labels.push(clip.attributes);
        quality_pairs.push((out.quality, clip.quality));
    }
    let mut metrics = BTreeMap::new();
    if matches!(task, SequenceTask::Attributes | SequenceTask::Both) {
        let accs = attribute_accuracies(&attr_preds, &attr_labels)?;
        for (kk, a) in accs.iter().enumerate() {
            metrics.insert(format!("attr{kk}"), *a);
        }
        metrics.insert("attr_mean".to_string(), accs.iter().sum::<f64>() / 5.0);
    }
    if matches!(task, SequenceTask::Quality | SequenceTask::Both) {
        let preds: Vec<f64> = quality_pairs.iter().map(|p| p.0).collect();
        let trues: Vec<f64> = quality_pairs.iter().map(|p| p.1).collect();
        metrics.insert("spearman".to_string(), spearman_correlation(&preds, &trues)?);
    }
    Ok(EvalReport {
        split: ds.name.clone(),
        metrics,
        confusion: Vec::new(),
        sample_count: ds.len(),
        checkpoint_hash: format!("{}/{}", student.checksum(), agg.checksum()),
        code_version: crate::CODE_VERSION.to_string(),
    })
}

/// Outcome of the single-frame vs two-frame comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameComparison {
    pub single: EvalReport,
    pub multi: EvalReport,
    /// 100 · (err_1f − err_2f) / err_1f.
    pub hallucination_reduction_percent: f64,
    pub single_latency_secs: f64,
    pub multi_latency_secs: f64,
}

/// Train (or reuse) the 1f and 2f variants under matched configs and compare
/// held-out hallucination error, accuracy, and per-inference time.
#[allow(clippy::too_many_arguments)]
pub fn compare_single_vs_multiframe(
    train: &ClipDataset,
    val: &ClipDataset,
    test: &ClipDataset,
    teacher: &TeacherModel,
    student_arch: &crate::model_zoo::StudentConfig,
    cfg_single: &TrainConfig,
    cfg_multi: &TrainConfig,
    pretrained: Option<(StudentModel, StudentModel)>,
) -> Result<FrameComparison> {
    let diff = trainer::config_diff(cfg_single, cfg_multi);
    if !diff.iter().all(|f| f == "mode" || f == "frame_gap") {
        return Err(Error::Config(format!(
            "single/multi configs may differ only in frame handling, got {diff:?}"
        )));
    }
    let (s1, s2) = match pretrained {
        Some(pair) => pair,
        None => {
            let (s1, _) = trainer::train_student(train, val, teacher, student_arch, cfg_single, None)?;
            let (s2, _) = trainer::train_student(train, val, teacher, student_arch, cfg_multi, None)?;
            (s1, s2)
        }
    };
    let single = evaluate_classification(&s1, Some(teacher), test, "test")?;
    let multi = evaluate_classification(&s2, Some(teacher), test, "test")?;
    let e1 = single.metric("hallucination_error").unwrap();
    let e2 = multi.metric("hallucination_error").unwrap();
    let reduction = 100.0 * (e1 - e2) / e1;

    let lat1 = crate::profiler::measure_student_latency(&s1, 10, 3)?;
    let lat2 = crate::profiler::measure_student_latency(&s2, 10, 3)?;
    Ok(FrameComparison {
        single,
        multi,
        hallucination_reduction_percent: reduction,
        single_latency_secs: lat1.mean_secs,
        multi_latency_secs: lat2.mean_secs,
    })
}

const EVAL_FORMAT: &str = "hallucinet-eval/v1";

/// Write a report as line-delimited records plus a summary block.
pub fn write_eval_report(report: &EvalReport, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(
        &serde_json::json!({
            "format": EVAL_FORMAT,
            "split": report.split,
            "checkpoint_hash": report.checkpoint_hash,
            "code_version": report.code_version,
        })
        .to_string(),
    );
    out.push('\n');
    for (name, value) in &report.metrics {
        out.push_str(&serde_json::json!({"metric": name, "value": value}).to_string());
        out.push('\n');
    }
    out.push_str(&serde_json::json!({"summary": report}).to_string());
    out.push('\n');
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parse a report written by [`write_eval_report`] (the summary block is the
/// source of truth). Never panics on malformed text.
pub fn parse_eval_report(text: &str) -> Result<EvalReport> {
    let last = text
        .lines()
        .rev()
        .find(|l| !l.is_empty())
        .ok_or_else(|| Error::Format("empty eval report".into()))?;
    let value: serde_json::Value =
        serde_json::from_str(last).map_err(|e| Error::Format(format!("eval report: {e}")))?;
    let summary = value
        .get("summary")
        .ok_or_else(|| Error::Format("eval report missing summary block".into()))?;
    serde_json::from_value(summary.clone()).map_err(|e| Error::Format(format!("eval report: {e}")))
}

pub fn read_eval_report(path: &Path) -> Result<EvalReport> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_eval_report(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top1_examples() {
        assert_eq!(top1_accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(top1_accuracy(&[0, 0, 0], &[1, 2, 3]).unwrap(), 0.0);
        assert_eq!(top1_accuracy(&[1, 2, 3, 4, 5], &[1, 2, 0, 4, 0]).unwrap(), 0.6);
        assert!(top1_accuracy(&[], &[]).is_err());
        assert!(top1_accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman_correlation(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let rev = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman_correlation(&x, &rev).unwrap() + 1.0).abs() < 1e-12);
        // ranks (1,2,3,4) vs (1,2,4,3): 1 - 6*2/(4*15) = 0.8
        let y = [1.0, 2.0, 4.0, 3.0];
        assert!((spearman_correlation(&x, &y).unwrap() - 0.8).abs() < 1e-12);
        assert!(spearman_correlation(&[1.0, 1.0, 1.0], &x[..3]).is_err());
        assert!(spearman_correlation(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn spearman_is_invariant_under_monotone_transforms() {
        let x = [0.3, 1.9, -2.0, 0.7, 5.5];
        let y = [1.0, 0.2, 0.4, 2.2, -0.3];
        let base = spearman_correlation(&x, &y).unwrap();
        let tx: Vec<f64> = x.iter().map(|v| (v * 0.5).exp()).collect();
        let ty: Vec<f64> = y.iter().map(|v| v.powi(3) * 2.0 + 1.0).collect();
        assert!((spearman_correlation(&tx, &ty).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn spearman_handles_ties_with_average_ranks() {
        // hand check: x = (1,1,2), ranks (1.5, 1.5, 3)
        let r = average_ranks(&[1.0, 1.0, 2.0]);
        assert_eq!(r, vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn attribute_accuracy_examples() {
        let preds = [[0usize, 1, 2, 0, 1], [0, 1, 0, 0, 1]];
        let labels = [[0u8, 1, 2, 0, 1], [0, 1, 2, 0, 0]];
        let acc = attribute_accuracies(&preds, &labels).unwrap();
        assert_eq!(acc, [1.0, 1.0, 0.5, 1.0, 0.5]);
        assert!(attribute_accuracies(&[], &[]).is_err());
    }
}
