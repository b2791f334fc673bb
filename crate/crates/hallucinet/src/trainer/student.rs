//! Student multitask training on center frames (or ordered frame pairs),
//! regressing frozen-teacher clip features as the auxiliary task.

use super::{argmax, mean, model_init_seed, shuffled_indices, ClipDataset, TrainConfig, TrainMode, TrainingLog};
use crate::error::{Error, Result};
use crate::losses::{self, LossBundle};
use crate::model_zoo::{
    clip_to_input, frame_to_input, CheckpointRef, StudentConfig, StudentHeadGrads, StudentModel,
    TeacherModel,
};
use crate::synthvid::center_frame;
use crate::nn::{scale_grads, Adam, Grads, Params};
use ndarray::{Array1, Array3};
use std::path::Path;
use std::time::Instant;

/// Frozen-teacher features for every clip of a dataset, in order.
pub fn compute_clip_targets(teacher: &TeacherModel, ds: &ClipDataset) -> Result<Vec<Array1<f64>>> {
    ds.clips
        .iter()
        .map(|c| Ok(teacher.forward(&clip_to_input(&c.frames))?.0))
        .collect()
}

/// Pick the student input frames for a clip under the configured mode:
/// the center frame, or the (center, center+k) pair in multiframe mode.
pub fn student_input_frames(
    clip: &crate::synthvid::VideoClip,
    mode: TrainMode,
    frame_gap: usize,
) -> Result<Vec<Array3<f64>>> {
    let t = clip.num_frames();
    let center = t / 2;
    match mode {
        TrainMode::Multiframe => {
            let second = center + frame_gap;
            if second >= t {
                return Err(Error::Config(format!(
                    "frame gap {frame_gap} puts the second frame past the clip (T={t})"
                )));
            }
            Ok(vec![
                frame_to_input(&clip.frames.index_axis(ndarray::Axis(0), center)),
                frame_to_input(&clip.frames.index_axis(ndarray::Axis(0), second)),
            ])
        }
        _ => Ok(vec![frame_to_input(&center_frame(clip))]),
    }
}

fn forward_for_mode(
    student: &StudentModel,
    frames: &[Array3<f64>],
) -> Result<(crate::model_zoo::StudentOutput, crate::model_zoo::StudentCache)> {
    if student.config.multiframe {
        student.forward_pair(&frames[0], &frames[1])
    } else {
        student.forward(&frames[0])
    }
}

/// Train a student against a frozen teacher.
///
/// Per batch: the teacher's clip features are the hallucination targets (no
/// gradient reaches the teacher), the student reads the center frame (or the
/// (center, center+k) pair in multiframe mode), and the Adam step minimizes
/// `L_mt + λ·L_hallu` with λ forced to 0 in vanilla mode.
pub fn train_student(
    train: &ClipDataset,
    val: &ClipDataset,
    teacher: &TeacherModel,
    arch: &StudentConfig,
    config: &TrainConfig,
    ckpt_dir: Option<&Path>,
) -> Result<(StudentModel, TrainingLog)> {
    config.validate()?;
    if !teacher.frozen() {
        return Err(Error::InvalidArgument(
            "train_student requires a frozen teacher".into(),
        ));
    }
    if train.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let mut arch = arch.clone();
    arch.init_seed = model_init_seed(config.seed);
    arch.num_classes = train.num_classes();
    arch.direct = config.mode == TrainMode::Direct;
    arch.multiframe = config.mode == TrainMode::Multiframe;
    arch.frame_gap = config.frame_gap;
    if arch.teacher_dim != teacher.feature_dim() {
        return Err(Error::Shape(format!(
            "student teacher_dim {} != teacher feature dim {}",
            arch.teacher_dim,
            teacher.feature_dim()
        )));
    }
    let mut student = StudentModel::new(arch)?;
    let mut adam = Adam::new();
    let lambda = config.effective_lambda();
    let mut log = TrainingLog::new(config.config_hash(), config.mode.as_str(), lambda, config.seed);

    let teacher_checksum = teacher.checksum();
    let train_targets = compute_clip_targets(teacher, train)?;
    let val_targets = compute_clip_targets(teacher, val)?;
    let train_frames: Vec<Vec<Array3<f64>>> = train
        .clips
        .iter()
        .map(|c| student_input_frames(c, config.mode, config.frame_gap))
        .collect::<Result<_>>()?;
    let val_frames: Vec<Vec<Array3<f64>>> = val
        .clips
        .iter()
        .map(|c| student_input_frames(c, config.mode, config.frame_gap))
        .collect::<Result<_>>()?;

    for epoch in 0..config.epochs {
        let t0 = Instant::now();
        let order = shuffled_indices(train.len(), config.seed, epoch);
        let lr = config.lr_at_epoch(epoch);
        let (mut mt_sum, mut hallu_sum, mut correct) = (0.0, 0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            let mut grads = Grads::new();
            for &i in batch {
                let (out, cache) = forward_for_mode(&student, &train_frames[i])?;
                let label = train.clips[i].class_id;
                let (l_mt, g_cls) = losses::classification_loss_grad(&out.class_logits, label)?;
                let (l_h, g_h) = losses::hallucination_loss_grad(&out.hallucinated, &train_targets[i])?;
                mt_sum += l_mt;
                hallu_sum += l_h;
                if argmax(&out.class_logits) == label {
                    correct += 1;
                }
                let head_grads = StudentHeadGrads {
                    class_logits: Some(g_cls),
                    // λ=0 contributes nothing; skip it so the vanilla and
                    // λ=0 arithmetic is identical instruction for
                    // instruction.
                    hallucinated: if lambda > 0.0 {
                        Some(g_h.mapv(|v| v * lambda))
                    } else {
                        None
                    },
                    ..Default::default()
                };
                student.backward(&cache, &head_grads, &mut grads);
            }
            scale_grads(&mut grads, 1.0 / batch.len() as f64);
            adam.step(&mut student, &grads, lr);
        }

        let (mut v_mt, mut v_h, mut v_correct) = (0.0, 0.0, 0usize);
        for (i, frames) in val_frames.iter().enumerate() {
            let (out, _) = forward_for_mode(&student, frames)?;
            v_mt += losses::classification_loss(&out.class_logits, val.clips[i].class_id)?;
            v_h += losses::hallucination_loss(&out.hallucinated, &val_targets[i])?;
            if argmax(&out.class_logits) == val.clips[i].class_id {
                v_correct += 1;
            }
        }

        let train_bundle =
            LossBundle::new(mean(mt_sum, train.len()), mean(hallu_sum, train.len()), lambda)?;
        let val_bundle = LossBundle::new(mean(v_mt, val.len()), mean(v_h, val.len()), lambda)?;
        log.records.push(super::EpochRecord {
            epoch,
            train_l_mt: train_bundle.l_mt,
            train_l_hallu: train_bundle.l_hallu,
            train_l_mtl: train_bundle.l_mtl,
            val_l_mt: val_bundle.l_mt,
            val_l_hallu: val_bundle.l_hallu,
            val_l_mtl: val_bundle.l_mtl,
            metrics: [
                ("train_top1".to_string(), mean(correct as f64, train.len())),
                ("val_top1".to_string(), mean(v_correct as f64, val.len())),
            ]
            .into(),
            wall_secs: t0.elapsed().as_secs_f64(),
        });

        if let Some(dir) = ckpt_dir {
            if config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0 {
                crate::model_zoo::save_checkpoint(
                    &dir.join(format!("ckpt_epoch{:03}.hnck", epoch + 1)),
                    &CheckpointRef::Student(&student),
                )?;
            }
        }
    }

    if teacher.checksum() != teacher_checksum {
        return Err(Error::InvalidArgument(
            "teacher parameters changed during student training".into(),
        ));
    }
    if let Some(dir) = ckpt_dir {
        let path = dir.join("final.hnck");
        crate::model_zoo::save_checkpoint(&path, &CheckpointRef::Student(&student))?;
        log.final_checkpoint = Some(path);
    }
    Ok((student, log))
}
