//! The 2x2 pretrain/finetune grid: students pretrained on the short-clip
//! classification task with and without the hallucination objective, each
//! finetuned on the long-sequence attribute task with and without it, all
//! under matched seeds.

use super::{
    compute_sequence_targets, train_sequence_model, train_student, ClipDataset, SequenceTask,
    TrainConfig, TrainMode, TrainingLog,
};
use crate::error::{Error, Result};
use crate::model_zoo::{AggregatorConfig, StudentConfig, TeacherModel};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridCell {
    pub pretrain_hallucination: bool,
    pub finetune_hallucination: bool,
    /// Final-epoch validation metrics of the finetuned model.
    pub metrics: BTreeMap<String, f64>,
    pub student_checkpoint: Option<PathBuf>,
    pub aggregator_checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PretrainFinetuneReport {
    /// Cells in order (pre -, fine -), (pre -, fine +), (pre +, fine -),
    /// (pre +, fine +).
    pub cells: Vec<GridCell>,
    /// Config fields differing between the two pretrain runs.
    pub pretrain_config_diff: Vec<String>,
    /// Config fields differing between the two finetune runs.
    pub finetune_config_diff: Vec<String>,
    pub seed: u64,
}

/// Field-level diff of two TOML-serializable configs.
pub fn config_diff(a: &TrainConfig, b: &TrainConfig) -> Vec<String> {
    let ta: toml::Value = toml::Value::try_from(a).expect("config serializes");
    let tb: toml::Value = toml::Value::try_from(b).expect("config serializes");
    let (ta, tb) = (ta.as_table().unwrap(), tb.as_table().unwrap());
    ta.iter()
        .filter(|(k, v)| tb.get(*k) != Some(v))
        .map(|(k, _)| k.clone())
        .collect()
}

/// Run the four-cell grid. Datasets must share frame geometry. Returns the
/// per-cell final metrics; checkpoints are written when `out_dir` is given.
#[allow(clippy::too_many_arguments)]
pub fn pretrain_then_finetune(
    pre_train: &ClipDataset,
    pre_val: &ClipDataset,
    fine_train: &ClipDataset,
    fine_val: &ClipDataset,
    teacher: &TeacherModel,
    student_arch: &StudentConfig,
    agg_arch: &AggregatorConfig,
    cfg_pre: &TrainConfig,
    cfg_fine: &TrainConfig,
    stride: usize,
    out_dir: Option<&Path>,
) -> Result<(PretrainFinetuneReport, Vec<TrainingLog>)> {
    if pre_train.frame_geometry()? != fine_train.frame_geometry()? {
        return Err(Error::Shape(format!(
            "pretrain {:?} and finetune {:?} datasets must share frame geometry",
            pre_train.frame_geometry()?,
            fine_train.frame_geometry()?
        )));
    }

    let pre_cfg = |hallu: bool| TrainConfig {
        mode: if hallu { TrainMode::Hallucinet } else { TrainMode::Vanilla },
        ..cfg_pre.clone()
    };
    let fine_cfg = |hallu: bool| TrainConfig {
        mode: if hallu { TrainMode::Hallucinet } else { TrainMode::Vanilla },
        ..cfg_fine.clone()
    };

    // Two pretrained students, shared across the finetune cells.
    let (student_plain, _) =
        train_student(pre_train, pre_val, teacher, student_arch, &pre_cfg(false), None)?;
    let (student_hallu, _) =
        train_student(pre_train, pre_val, teacher, student_arch, &pre_cfg(true), None)?;

    let fine_targets_train = compute_sequence_targets(teacher, fine_train, stride)?;
    let fine_targets_val = compute_sequence_targets(teacher, fine_val, stride)?;

    let mut cells = Vec::new();
    let mut logs = Vec::new();
    for pre_hallu in [false, true] {
        for fine_hallu in [false, true] {
            let student = if pre_hallu { student_hallu.clone() } else { student_plain.clone() };
            let cell_dir = out_dir.map(|d| {
                d.join(format!(
                    "cell_pre{}_fine{}",
                    u8::from(pre_hallu),
                    u8::from(fine_hallu)
                ))
            });
            if let Some(d) = &cell_dir {
                std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
            }
            let (_, _, log) = train_sequence_model(
                fine_train,
                fine_val,
                student,
                Some(teacher),
                agg_arch,
                &fine_cfg(fine_hallu),
                SequenceTask::Attributes,
                stride,
                Some((&fine_targets_train, &fine_targets_val)),
                cell_dir.as_deref(),
            )?;
            let metrics = log
                .records
                .last()
                .map(|r| r.metrics.clone())
                .unwrap_or_default();
            cells.push(GridCell {
                pretrain_hallucination: pre_hallu,
                finetune_hallucination: fine_hallu,
                metrics,
                student_checkpoint: cell_dir.as_ref().map(|d| d.join("student_final.hnck")),
                aggregator_checkpoint: cell_dir.as_ref().map(|d| d.join("aggregator_final.hnck")),
            });
            logs.push(log);
        }
    }

    let report = PretrainFinetuneReport {
        cells,
        pretrain_config_diff: config_diff(&pre_cfg(false), &pre_cfg(true)),
        finetune_config_diff: config_diff(&fine_cfg(false), &fine_cfg(true)),
        seed: cfg_fine.seed,
    };
    Ok((report, logs))
}
