//! Scratch harness for sizing the ambiguity benchmark: trains the teacher
//! and the student variants on one seed and prints the numbers the
//! acceptance thresholds depend on. Not part of the test suite.

use hallucinet::evaluator::{evaluate_classification, hallucination_error};
use hallucinet::model_zoo::{clip_to_input, StudentConfig, StudentModel, TeacherConfig};
use hallucinet::synthvid::{generate_split, GeneratorConfig, MotionRanges, Split};
use hallucinet::trainer::{train_student, train_teacher, ClipDataset, TrainConfig, TrainMode};
use std::time::Instant;

fn env_or<T: std::str::FromStr>(key: &str, default: T) -> T {
    std::env::var(key)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

fn main() {
    let seed: u64 = env_or("SEED", 1);
    let teacher_epochs: usize = env_or("TEACHER_EPOCHS", 30);
    let student_epochs: usize = env_or("STUDENT_EPOCHS", 40);
    let train_clips: usize = env_or("TRAIN", 120);
    let batch: usize = env_or("BATCH", 8);
    let noise: f64 = env_or("NOISE", 0.02);
    let cue: f64 = env_or("CUE", 0.9);
    let contrast: f64 = env_or("CONTRAST", 1.0);
    let k: usize = env_or("K", 6);

    let gen = GeneratorConfig {
        name: "bench".into(),
        frames: 16,
        height: 32,
        width: 32,
        num_classes: k,
        noise_std: noise,
        cue_strength: cue,
        cue_contrast: contrast,
        train_clips,
        val_clips: 36,
        test_clips: 120,
        master_seed: seed,
        motion: MotionRanges::default(),
        ..Default::default()
    };
    let names = gen.class_names();
    let t0 = Instant::now();
    let train = ClipDataset::new("train", names.clone(), generate_split(&gen, Split::Train).unwrap());
    let val = ClipDataset::new("val", names.clone(), generate_split(&gen, Split::Val).unwrap());
    let test = ClipDataset::new("test", names, generate_split(&gen, Split::Test).unwrap());
    println!("dataset built in {:.1}s", t0.elapsed().as_secs_f64());

    let teacher_arch = TeacherConfig {
        num_classes: k,
        ..Default::default()
    };
    let tcfg = TrainConfig {
        epochs: teacher_epochs,
        batch_size: batch,
        mode: TrainMode::Vanilla,
        seed,
        ..Default::default()
    };
    let t0 = Instant::now();
    let (teacher, tlog) = train_teacher(&train, &val, &teacher_arch, &tcfg, None).unwrap();
    let last = tlog.records.last().unwrap();
    println!(
        "teacher: {:.1}s  train_top1={:.3} val_top1={:.3} train_ce={:.3}",
        t0.elapsed().as_secs_f64(),
        last.metrics["train_top1"],
        last.metrics["val_top1"],
        last.train_l_mt
    );
    // feature magnitude stats
    let mut mags = Vec::new();
    for c in test.clips.iter().take(24) {
        let (f, _) = teacher.forward(&clip_to_input(&c.frames)).unwrap();
        mags.push(f.iter().map(|v| v.abs()).sum::<f64>() / f.len() as f64);
    }
    println!(
        "teacher feature mean|.|: {:.4}",
        mags.iter().sum::<f64>() / mags.len() as f64
    );

    let arch = StudentConfig::default();
    let scfg = |mode: TrainMode| TrainConfig {
        epochs: student_epochs,
        batch_size: batch,
        mode,
        seed,
        ..Default::default()
    };
    let mut students = Vec::new();
    for mode in [TrainMode::Vanilla, TrainMode::Hallucinet, TrainMode::Direct, TrainMode::Multiframe] {
        let t0 = Instant::now();
        let (student, slog) = train_student(&train, &val, &teacher, &arch, &scfg(mode), None).unwrap();
        let report = evaluate_classification(&student, Some(&teacher), &test, "test").unwrap();
        let top1 = report.metric("top1").unwrap();
        let err = report.metric("hallucination_error").unwrap();
        let last = slog.records.last().unwrap();
        println!(
            "{:<11} {:>5.1}s  test_top1={:.3}  hallu_err={:.5}  val_top1={:.3} ep1_val_Lh={:.5} last_val_Lh={:.5}",
            format!("{:?}", mode),
            t0.elapsed().as_secs_f64(),
            top1,
            err,
            last.metrics["val_top1"],
            slog.records[0].val_l_hallu,
            last.val_l_hallu,
        );
        students.push((mode, student));
    }

    // untrained-head baseline for criterion 5's second clause
    let vanilla = &students.iter().find(|(m, _)| *m == TrainMode::Vanilla).unwrap().1;
    let hallu = &students.iter().find(|(m, _)| *m == TrainMode::Hallucinet).unwrap().1;
    let multi = &students.iter().find(|(m, _)| *m == TrainMode::Multiframe).unwrap().1;
    let e_vanilla = hallucination_error(vanilla, &teacher, &test.clips).unwrap();
    let e_hallu = hallucination_error(hallu, &teacher, &test.clips).unwrap();
    let e_multi = hallucination_error(multi, &teacher, &test.clips).unwrap();
    println!(
        "hallu_err: vanilla(untrained head)={:.5}  hallucinet={:.5} (ratio {:.3})  2f={:.5} (reduction {:.2}%)",
        e_vanilla,
        e_hallu,
        e_hallu / e_vanilla,
        e_multi,
        100.0 * (e_hallu - e_multi) / e_hallu
    );
}
