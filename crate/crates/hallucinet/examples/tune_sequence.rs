//! Scratch harness for the long-sequence tasks: sparse-sampled LSTM
//! aggregation for attributes and quality. Not part of the test suite.

use hallucinet::model_zoo::{AggregatorConfig, StudentConfig, StudentModel};
use hallucinet::synthvid::{generate_split, GeneratorConfig, Split};
use hallucinet::trainer::{train_sequence_model, ClipDataset, SequenceTask, TrainConfig, TrainMode};
use std::time::Instant;

fn env_or<T: std::str::FromStr>(key: &str, default: T) -> T {
    std::env::var(key)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

fn main() {
    let seed: u64 = env_or("SEED", 1);
    let epochs: usize = env_or("EPOCHS", 30);
    let train_clips: usize = env_or("TRAIN", 120);
    let batch: usize = env_or("BATCH", 2);
    let k: usize = env_or("K", 8);
    let hidden: usize = env_or("HIDDEN", 64);
    let task_sel: String = std::env::var("TASK").unwrap_or_else(|_| "attributes".into());

    let gen = GeneratorConfig {
        name: "seqbench".into(),
        frames: 96,
        height: 32,
        width: 32,
        num_classes: k,
        noise_std: 0.0,
        cue_strength: 1.0,
        train_clips,
        val_clips: 40,
        test_clips: 40,
        master_seed: seed,
        ..Default::default()
    };
    let names = gen.class_names();
    let train = ClipDataset::new("train", names.clone(), generate_split(&gen, Split::Train).unwrap());
    let val = ClipDataset::new("val", names, generate_split(&gen, Split::Val).unwrap());

    let student = StudentModel::new(StudentConfig {
        init_seed: hallucinet::rng::derive_seed(seed, 7),
        ..Default::default()
    })
    .unwrap();
    let task = match task_sel.as_str() {
        "quality" => SequenceTask::Quality,
        "both" => SequenceTask::Both,
        _ => SequenceTask::Attributes,
    };
    let cfg = TrainConfig {
        epochs,
        batch_size: batch,
        mode: TrainMode::Vanilla,
        seed,
        ..Default::default()
    };
    let t0 = Instant::now();
    let (_, _, log) = train_sequence_model(
        &train,
        &val,
        student,
        None,
        &AggregatorConfig { hidden_dim: hidden, ..Default::default() },
        &cfg,
        task,
        16,
        None,
        None,
    )
    .unwrap();
    println!("trained in {:.1}s", t0.elapsed().as_secs_f64());
    for r in log.records.iter().rev().take(1) {
        println!("epoch {}: metrics {:?}", r.epoch, r.metrics);
    }
    // trajectory every 10 epochs
    for r in log.records.iter().step_by(10) {
        let m = &r.metrics;
        let attr: Vec<String> = (0..5)
            .map(|k| {
                m.get(&format!("val_attr{k}"))
                    .map(|v| format!("{v:.2}"))
                    .unwrap_or_else(|| "-".into())
            })
            .collect();
        println!(
            "  ep{:>3} l_mt={:.3} train_attr={:.3} val_attr_mean={:.3} [{}] spearman={:.3}",
            r.epoch,
            r.train_l_mt,
            m.get("train_attr_mean").copied().unwrap_or(f64::NAN),
            m.get("val_attr_mean").copied().unwrap_or(f64::NAN),
            attr.join(","),
            m.get("val_spearman").copied().unwrap_or(f64::NAN),
        );
    }
}
