//! Teacher pretraining: classification on full clips. The returned model is
//! marked frozen.

use super::{argmax, mean, model_init_seed, shuffled_indices, ClipDataset, TrainConfig, TrainingLog};
use crate::error::{Error, Result};
use crate::losses;
use crate::model_zoo::{clip_to_input, CheckpointRef, TeacherConfig, TeacherModel};
use crate::nn::{scale_grads, Adam, Grads};
use std::path::Path;
use std::time::Instant;

/// Train a teacher on clip-level class labels.
///
/// `arch.init_seed` is overridden with a stream of `config.seed` so the whole
/// run is a function of one seed. Writes checkpoints into `ckpt_dir` when
/// given (per cadence, plus `final.hnck`).
pub fn train_teacher(
    train: &ClipDataset,
    val: &ClipDataset,
    arch: &TeacherConfig,
    config: &TrainConfig,
    ckpt_dir: Option<&Path>,
) -> Result<(TeacherModel, TrainingLog)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let mut arch = arch.clone();
    arch.init_seed = model_init_seed(config.seed);
    arch.num_classes = train.num_classes();
    let mut model = TeacherModel::new(arch)?;
    let mut adam = Adam::new();
    let mut log = TrainingLog::new(config.config_hash(), config.mode.as_str(), 0.0, config.seed);

    let inputs: Vec<_> = train.clips.iter().map(|c| clip_to_input(&c.frames)).collect();
    let val_inputs: Vec<_> = val.clips.iter().map(|c| clip_to_input(&c.frames)).collect();

    for epoch in 0..config.epochs {
        let t0 = Instant::now();
        let order = shuffled_indices(train.len(), config.seed, epoch);
        let lr = config.lr_at_epoch(epoch);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let mut grads = Grads::new();
            for &i in batch {
                let cache = model.forward_cached(&inputs[i])?;
                let label = train.clips[i].class_id;
                let (loss, g_logits) = losses::classification_loss_grad(&cache.logits, label)?;
                loss_sum += loss;
                if argmax(&cache.logits) == label {
                    correct += 1;
                }
                model.backward(None, &cache, Some(&g_logits), None, &mut grads);
            }
            scale_grads(&mut grads, 1.0 / batch.len() as f64);
            adam.step(&mut model, &grads, lr);
        }

        // validation pass
        let mut val_loss_sum = 0.0;
        let mut val_correct = 0usize;
        for (i, x) in val_inputs.iter().enumerate() {
            let (_, logits) = model.forward(x)?;
            val_loss_sum += losses::classification_loss(&logits, val.clips[i].class_id)?;
            if argmax(&logits) == val.clips[i].class_id {
                val_correct += 1;
            }
        }

        let train_l_mt = mean(loss_sum, train.len());
        let val_l_mt = mean(val_loss_sum, val.len());
        log.records.push(super::EpochRecord {
            epoch,
            train_l_mt,
            train_l_hallu: 0.0,
            train_l_mtl: train_l_mt,
            val_l_mt,
            val_l_hallu: 0.0,
            val_l_mtl: val_l_mt,
            metrics: [
                ("train_top1".to_string(), mean(correct as f64, train.len())),
                ("val_top1".to_string(), mean(val_correct as f64, val.len())),
            ]
            .into(),
            wall_secs: t0.elapsed().as_secs_f64(),
        });

        if let Some(dir) = ckpt_dir {
            if config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0 {
                crate::model_zoo::save_checkpoint(
                    &dir.join(format!("ckpt_epoch{:03}.hnck", epoch + 1)),
                    &CheckpointRef::Teacher(&model),
                )?;
            }
        }
    }

    model.set_frozen(true);
    if let Some(dir) = ckpt_dir {
        let path = dir.join("final.hnck");
        crate::model_zoo::save_checkpoint(&path, &CheckpointRef::Teacher(&model))?;
        log.final_checkpoint = Some(path);
    }
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Params;
    use crate::synthvid::{generate_split, GeneratorConfig, Split};

    fn tiny_dataset() -> (ClipDataset, ClipDataset) {
        let cfg = GeneratorConfig {
            name: "tt".into(),
            frames: 4,
            height: 20,
            width: 20,
            num_classes: 2,
            train_clips: 4,
            val_clips: 2,
            test_clips: 2,
            master_seed: 3,
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

    fn tiny_arch() -> TeacherConfig {
        TeacherConfig {
            clip_len: 4,
            height: 20,
            width: 20,
            channels: vec![2, 4],
            num_classes: 2,
            ..Default::default()
        }
    }

    #[test]
    fn one_epoch_yields_one_log_record_and_a_frozen_model() {
        let (train, val) = tiny_dataset();
        let cfg = TrainConfig { epochs: 1, batch_size: 2, ..Default::default() };
        let (model, log) = train_teacher(&train, &val, &tiny_arch(), &cfg, None).unwrap();
        assert_eq!(log.records.len(), 1);
        assert!(model.frozen());
        assert!(log.records[0].metrics.contains_key("train_top1"));
    }

    #[test]
    fn training_is_seed_deterministic() {
        let (train, val) = tiny_dataset();
        let cfg = TrainConfig { epochs: 2, batch_size: 2, seed: 5, ..Default::default() };
        let (m1, _) = train_teacher(&train, &val, &tiny_arch(), &cfg, None).unwrap();
        let (m2, _) = train_teacher(&train, &val, &tiny_arch(), &cfg, None).unwrap();
        assert_eq!(m1.checksum(), m2.checksum());
        let other = TrainConfig { seed: 6, ..cfg };
        let (m3, _) = train_teacher(&train, &val, &tiny_arch(), &other, None).unwrap();
        assert_ne!(m1.checksum(), m3.checksum());
    }
}
