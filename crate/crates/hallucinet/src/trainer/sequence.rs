//! Long-sequence training: sparse-sample every stride-th frame, encode each
//! sampled frame with the student, aggregate with the LSTM, and apply the
//! attribute and/or quality losses — plus, in hallucinet mode, the
//! hallucination loss per sampled frame against teacher features of the
//! clip-length window starting at that frame.

use super::{argmax, mean, model_init_seed, shuffled_indices, ClipDataset, TrainConfig, TrainMode, TrainingLog};
use crate::error::{Error, Result};
use crate::losses::{self, LossBundle};
use crate::model_zoo::{
    frame_to_input, window_to_input, AggregatorConfig, CheckpointRef, SequenceAggregator,
    StudentHeadGrads, StudentModel, TeacherModel,
};
use crate::nn::{scale_grads, Adam, Grads};
use crate::rng::derive_seed;
use crate::synthvid::sparse_indices;
use ndarray::{Array1, Array3};
use std::path::Path;
use std::time::Instant;

/// Which head losses the sequence task applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceTask {
    Attributes,
    Quality,
    Both,
}

impl SequenceTask {
    pub fn as_str(self) -> &'static str {
        match self {
            SequenceTask::Attributes => "attributes",
            SequenceTask::Quality => "quality",
            SequenceTask::Both => "both",
        }
    }
}

impl std::str::FromStr for SequenceTask {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attributes" => Ok(SequenceTask::Attributes),
            "quality" => Ok(SequenceTask::Quality),
            "both" => Ok(SequenceTask::Both),
            other => Err(Error::InvalidArgument(format!("unknown sequence task {other}"))),
        }
    }
}

/// Per-clip, per-sampled-index teacher features. `None` where the window
/// starting at the sampled index would run past the sequence end.
pub type SequenceTargets = Vec<Vec<Option<Array1<f64>>>>;

/// Teacher features of the `teacher.config.clip_len`-frame window beginning
/// at each sampled frame index.
pub fn compute_sequence_targets(
    teacher: &TeacherModel,
    ds: &ClipDataset,
    stride: usize,
) -> Result<SequenceTargets> {
    let win = teacher.config.clip_len;
    let mut out = Vec::with_capacity(ds.len());
    for clip in &ds.clips {
        let len = clip.num_frames();
        let indices = sparse_indices(len, stride)?;
        let mut per_clip = Vec::with_capacity(indices.len());
        for &i in &indices {
            if i + win <= len {
                let x = window_to_input(&clip.frames, i, win);
                per_clip.push(Some(teacher.forward(&x)?.0));
            } else {
                per_clip.push(None);
            }
        }
        out.push(per_clip);
    }
    Ok(out)
}

struct ClipPass {
    l_mt: f64,
    l_hallu: f64,
    n_hallu: usize,
    attr_correct: [usize; 5],
    quality_pred: f64,
}

#[allow(clippy::too_many_arguments)]
fn clip_forward_backward(
    student: &StudentModel,
    agg: &SequenceAggregator,
    clip: &crate::synthvid::VideoClip,
    frames: &[Array3<f64>],
    targets: Option<&Vec<Option<Array1<f64>>>>,
    task: SequenceTask,
    lambda: f64,
    grads: Option<(&mut Grads, &mut Grads)>,
) -> Result<ClipPass> {
    let mut caches = Vec::with_capacity(frames.len());
    let mut embeddings = Vec::with_capacity(frames.len());
    for f in frames {
        let (out, cache) = student.forward(f)?;
        embeddings.push(out.embedding);
        caches.push((cache, out.hallucinated));
    }
    let agg_out = agg.forward(&embeddings)?;

    let use_attr = matches!(task, SequenceTask::Attributes | SequenceTask::Both);
    let use_quality = matches!(task, SequenceTask::Quality | SequenceTask::Both);

    let mut l_mt = 0.0;
    let mut g_attr = None;
    let mut g_quality = None;
    let mut attr_correct = [0usize; 5];
    if use_attr {
        let (l, g) = losses::attribute_loss_grad(&agg_out.attribute_logits, &clip.attributes)?;
        l_mt += l;
        g_attr = Some(g);
        for (k, logits) in agg_out.attribute_logits.iter().enumerate() {
            if argmax(logits) == clip.attributes[k] as usize {
                attr_correct[k] = 1;
            }
        }
    }
    if use_quality {
        let (l, g) = losses::quality_loss_grad(agg_out.quality, clip.quality)?;
        l_mt += l;
        g_quality = Some(g);
    }

    // Hallucination targets per sampled frame.
    let mut l_hallu = 0.0;
    let mut n_hallu = 0usize;
    let mut hallu_grads: Vec<Option<Array1<f64>>> = vec![None; frames.len()];
    if lambda > 0.0 {
        let targets = targets.ok_or_else(|| {
            Error::InvalidArgument("hallucinet sequence training needs teacher targets".into())
        })?;
        for (i, target) in targets.iter().enumerate() {
            if let Some(t) = target {
                let (l, g) = losses::hallucination_loss_grad(&caches[i].1, t)?;
                l_hallu += l;
                n_hallu += 1;
                hallu_grads[i] = Some(g);
            }
        }
        if n_hallu > 0 {
            l_hallu /= n_hallu as f64;
        }
    } else if let Some(targets) = targets {
        // still report the loss for bookkeeping when targets are available
        for (i, target) in targets.iter().enumerate() {
            if let Some(t) = target {
                l_hallu += losses::hallucination_loss(&caches[i].1, t)?;
                n_hallu += 1;
            }
        }
        if n_hallu > 0 {
            l_hallu /= n_hallu as f64;
        }
    }

    if let Some((g_student, g_agg)) = grads {
        let g_embs = agg.backward(&agg_out, g_attr.as_deref(), g_quality, g_agg);
        for (i, (cache, _)) in caches.iter().enumerate() {
            let head_grads = StudentHeadGrads {
                embedding: Some(g_embs[i].clone()),
                hallucinated: hallu_grads[i]
                    .take()
                    .filter(|_| lambda > 0.0 && n_hallu > 0)
                    .map(|g| g.mapv(|v| v * lambda / n_hallu as f64)),
                ..Default::default()
            };
            student.backward(cache, &head_grads, g_student);
        }
    }

    Ok(ClipPass {
        l_mt,
        l_hallu,
        n_hallu,
        attr_correct,
        quality_pred: agg_out.quality,
    })
}

/// Train the aggregator end-to-end with the student encoder.
///
/// Returns (aggregator, finetuned student, log). In hallucinet mode `teacher`
/// (or precomputed `targets`) must be provided; vanilla mode ignores them for
/// the objective but still logs the hallucination loss when targets exist.
#[allow(clippy::too_many_arguments)]
pub fn train_sequence_model(
    train: &ClipDataset,
    val: &ClipDataset,
    student: StudentModel,
    teacher: Option<&TeacherModel>,
    agg_arch: &AggregatorConfig,
    config: &TrainConfig,
    task: SequenceTask,
    stride: usize,
    precomputed: Option<(&SequenceTargets, &SequenceTargets)>,
    ckpt_dir: Option<&Path>,
) -> Result<(SequenceAggregator, StudentModel, TrainingLog)> {
    config.validate()?;
    if !matches!(config.mode, TrainMode::Vanilla | TrainMode::Hallucinet) {
        return Err(Error::Config(format!(
            "sequence training supports vanilla/hallucinet modes, got {}",
            config.mode.as_str()
        )));
    }
    if train.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if student.config.multiframe {
        return Err(Error::Config("sequence training uses the single-frame student".into()));
    }
    let seq_len = train.clip_len()?;
    if seq_len < stride {
        return Err(Error::InvalidArgument(format!(
            "sequences of length {seq_len} are shorter than stride {stride}"
        )));
    }
    let lambda = config.effective_lambda();

    let mut agg_arch = agg_arch.clone();
    agg_arch.input_dim = student.config.head_in();
    agg_arch.init_seed = derive_seed(model_init_seed(config.seed), 1);
    let mut agg = SequenceAggregator::new(agg_arch)?;
    let mut student = student;

    let owned_targets: Option<(SequenceTargets, SequenceTargets)> = match (precomputed, teacher) {
        (Some(_), _) => None,
        (None, Some(t)) => Some((
            compute_sequence_targets(t, train, stride)?,
            compute_sequence_targets(t, val, stride)?,
        )),
        (None, None) if lambda > 0.0 => {
            return Err(Error::InvalidArgument(
                "hallucinet sequence training needs a teacher or precomputed targets".into(),
            ))
        }
        (None, None) => None,
    };
    let (train_targets, val_targets) = match (&precomputed, &owned_targets) {
        (Some((a, b)), _) => (Some(*a), Some(*b)),
        (None, Some((a, b))) => (Some(a), Some(b)),
        (None, None) => (None, None),
    };

    let frame_inputs = |ds: &ClipDataset| -> Result<Vec<Vec<Array3<f64>>>> {
        ds.clips
            .iter()
            .map(|clip| {
                let idx = sparse_indices(clip.num_frames(), stride)?;
                Ok(idx
                    .into_iter()
                    .map(|i| frame_to_input(&clip.frames.index_axis(ndarray::Axis(0), i)))
                    .collect())
            })
            .collect()
    };
    let train_frames = frame_inputs(train)?;
    let val_frames = frame_inputs(val)?;

    let mut adam_student = Adam::new();
    let mut adam_agg = Adam::new();
    let mut log = TrainingLog::new(config.config_hash(), config.mode.as_str(), lambda, config.seed);

    for epoch in 0..config.epochs {
        let t0 = Instant::now();
        let order = shuffled_indices(train.len(), config.seed, epoch);
        let lr = config.lr_at_epoch(epoch);
        let (mut mt_sum, mut hallu_sum, mut hallu_batches) = (0.0, 0.0, 0usize);
        let mut attr_correct = [0usize; 5];
        for batch in order.chunks(config.batch_size) {
            let mut g_student = Grads::new();
            let mut g_agg = Grads::new();
            for &i in batch {
                let pass = clip_forward_backward(
                    &student,
                    &agg,
                    &train.clips[i],
                    &train_frames[i],
                    train_targets.map(|t| &t[i]),
                    task,
                    lambda,
                    Some((&mut g_student, &mut g_agg)),
                )?;
                mt_sum += pass.l_mt;
                if pass.n_hallu > 0 {
                    hallu_sum += pass.l_hallu;
                    hallu_batches += 1;
                }
                for k in 0..5 {
                    attr_correct[k] += pass.attr_correct[k];
                }
            }
            scale_grads(&mut g_student, 1.0 / batch.len() as f64);
            scale_grads(&mut g_agg, 1.0 / batch.len() as f64);
            adam_student.step(&mut student, &g_student, lr);
            adam_agg.step(&mut agg, &g_agg, lr);
        }

        // validation
        let (mut v_mt, mut v_h, mut v_h_n) = (0.0, 0.0, 0usize);
        let mut v_attr = [0usize; 5];
        let mut quality_pairs: Vec<(f64, f64)> = Vec::new();
        for (i, frames) in val_frames.iter().enumerate() {
            let pass = clip_forward_backward(
                &student,
                &agg,
                &val.clips[i],
                frames,
                val_targets.map(|t| &t[i]),
                task,
                0.0,
                None,
            )?;
            v_mt += pass.l_mt;
            if pass.n_hallu > 0 {
                v_h += pass.l_hallu;
                v_h_n += 1;
            }
            for k in 0..5 {
                v_attr[k] += pass.attr_correct[k];
            }
            quality_pairs.push((pass.quality_pred, val.clips[i].quality));
        }

        let mut metrics = std::collections::BTreeMap::new();
        if matches!(task, SequenceTask::Attributes | SequenceTask::Both) {
            let mut acc_sum = 0.0;
            for k in 0..5 {
                let acc = mean(v_attr[k] as f64, val.len());
                metrics.insert(format!("val_attr{k}"), acc);
                acc_sum += acc;
            }
            metrics.insert("val_attr_mean".to_string(), acc_sum / 5.0);
            let train_mean: f64 =
                attr_correct.iter().map(|&c| mean(c as f64, train.len())).sum::<f64>() / 5.0;
            metrics.insert("train_attr_mean".to_string(), train_mean);
        }
        if matches!(task, SequenceTask::Quality | SequenceTask::Both) {
            let preds: Vec<f64> = quality_pairs.iter().map(|p| p.0).collect();
            let trues: Vec<f64> = quality_pairs.iter().map(|p| p.1).collect();
            if let Ok(rho) = crate::evaluator::spearman_correlation(&preds, &trues) {
                metrics.insert("val_spearman".to_string(), rho);
            }
        }

        let train_bundle =
            LossBundle::new(mean(mt_sum, train.len()), mean(hallu_sum, hallu_batches), lambda)?;
        let val_bundle = LossBundle::new(mean(v_mt, val.len()), mean(v_h, v_h_n), lambda)?;
        log.records.push(super::EpochRecord {
            epoch,
            train_l_mt: train_bundle.l_mt,
            train_l_hallu: train_bundle.l_hallu,
            train_l_mtl: train_bundle.l_mtl,
            val_l_mt: val_bundle.l_mt,
            val_l_hallu: val_bundle.l_hallu,
            val_l_mtl: val_bundle.l_mtl,
            metrics,
            wall_secs: t0.elapsed().as_secs_f64(),
        });
    }

    if let Some(dir) = ckpt_dir {
        let spath = dir.join("student_final.hnck");
        crate::model_zoo::save_checkpoint(&spath, &CheckpointRef::Student(&student))?;
        let apath = dir.join("aggregator_final.hnck");
        crate::model_zoo::save_checkpoint(&apath, &CheckpointRef::Aggregator(&agg))?;
        log.final_checkpoint = Some(apath);
    }
    Ok((agg, student, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_zoo::StudentConfig;
    use crate::synthvid::{generate_split, GeneratorConfig, Split};

    fn long_world() -> (ClipDataset, ClipDataset) {
        let cfg = GeneratorConfig {
            name: "seq".into(),
            frames: 24,
            height: 20,
            width: 20,
            num_classes: 4,
            train_clips: 6,
            val_clips: 3,
            test_clips: 3,
            master_seed: 20,
            motion: crate::synthvid::MotionRanges {
                radius: (2.0, 2.5),
                displacement: (1.0, 1.5),
                jitter_max: 0.5,
                ..Default::default()
            },
            ..Default::default()
        };
        let names = cfg.class_names();
        (
            ClipDataset::new("train", names.clone(), generate_split(&cfg, Split::Train).unwrap()),
            ClipDataset::new("val", names, generate_split(&cfg, Split::Val).unwrap()),
        )
    }

    fn fresh_student() -> StudentModel {
        StudentModel::new(StudentConfig {
            height: 20,
            width: 20,
            channels: vec![2, 4],
            teacher_dim: 4,
            init_seed: 31,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn vanilla_sequence_training_runs_and_logs() {
        let (train, val) = long_world();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 3,
            mode: TrainMode::Vanilla,
            ..Default::default()
        };
        let (_, _, log) = train_sequence_model(
            &train,
            &val,
            fresh_student(),
            None,
            &AggregatorConfig { hidden_dim: 8, ..Default::default() },
            &cfg,
            SequenceTask::Both,
            8,
            None,
            None,
        )
        .unwrap();
        assert_eq!(log.records.len(), 2);
        assert!(log.records[0].metrics.contains_key("val_attr_mean"));
    }

    #[test]
    fn hallucinet_mode_without_teacher_is_rejected() {
        let (train, val) = long_world();
        let cfg = TrainConfig { epochs: 1, mode: TrainMode::Hallucinet, ..Default::default() };
        let err = train_sequence_model(
            &train,
            &val,
            fresh_student(),
            None,
            &AggregatorConfig::default(),
            &cfg,
            SequenceTask::Attributes,
            8,
            None,
            None,
        );
        assert!(err.is_err());
    }

    #[test]
    fn stride_longer_than_sequence_is_rejected() {
        let (train, val) = long_world();
        let cfg = TrainConfig { epochs: 1, mode: TrainMode::Vanilla, ..Default::default() };
        let err = train_sequence_model(
            &train,
            &val,
            fresh_student(),
            None,
            &AggregatorConfig::default(),
            &cfg,
            SequenceTask::Attributes,
            100,
            None,
            None,
        );
        assert!(err.is_err());
    }
}
