//! The `hallucinet` command-line tool: dataset build, training, evaluation,
//! profiling, report generation, and a full-pipeline `run`.
//!
//! Every command exits 0 on success, 2 on missing inputs, 3 on config parse
//! errors, and 1 on other failures. Machine-readable outputs carry a
//! provenance header (config hash, seed, code version); wall-clock numbers
//! live only in `*.timing.json` / `timings.ns` sidecars so that metric files
//! are byte-reproducible under a fixed seed.

use crate::error::{Error, Result};
use crate::evaluator::{self, tables};
use crate::model_zoo::{
    load_checkpoint, load_student, load_teacher, AggregatorConfig, ModelCheckpoint, StudentConfig,
    TeacherConfig,
};
use crate::profiler;
use crate::rng::{derive_seed, toml_safe_seed};
use crate::synthvid::{build_dataset, GeneratorConfig};
use crate::trainer::{
    self, ClipDataset, SequenceTask, TrainConfig, TrainMode, TrainingLog,
};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "hallucinet", version, about = "Teacher-student feature hallucination on synthetic video benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic dataset commands.
    Synthvid {
        #[command(subcommand)]
        cmd: SynthvidCmd,
    },
    /// Train the 3D clip teacher on class labels.
    TrainTeacher(TrainTeacherArgs),
    /// Train the 2D student against a frozen teacher.
    TrainStudent(TrainStudentArgs),
    /// Train the sparse-frame sequence model (student + LSTM aggregator).
    TrainSequence(TrainSequenceArgs),
    /// Evaluate a checkpoint on a manifest split.
    Eval(EvalArgs),
    /// Parameter/FLOP/latency profile of a checkpoint.
    Profile(ProfileArgs),
    /// Render result tables from stored machine-readable outputs.
    Report(ReportArgs),
    /// Full pipeline: build data, train teacher + students, evaluate,
    /// profile, and render tables.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum SynthvidCmd {
    /// Generate train/val/test splits and manifests.
    Build(SynthvidBuildArgs),
}

#[derive(Args)]
struct SynthvidBuildArgs {
    /// Generator config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Replace existing outputs.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct TrainTeacherArgs {
    /// Training-split manifest.
    #[arg(long)]
    data: PathBuf,
    /// Validation-split manifest.
    #[arg(long)]
    val: PathBuf,
    /// Train config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (checkpoints + train_log.jsonl).
    #[arg(long)]
    out: PathBuf,
    /// Conv block widths, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![8usize, 16, 64])]
    channels: Vec<usize>,
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct TrainStudentArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    val: PathBuf,
    /// Frozen teacher checkpoint.
    #[arg(long)]
    teacher: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Conv block widths, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![8usize, 16, 32, 64])]
    channels: Vec<usize>,
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct TrainSequenceArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    val: PathBuf,
    /// Student checkpoint to finetune (a fresh student is created when
    /// omitted).
    #[arg(long)]
    student: Option<PathBuf>,
    /// Teacher checkpoint (required in hallucinet mode).
    #[arg(long)]
    teacher: Option<PathBuf>,
    #[arg(long)]
    config: PathBuf,
    /// Task: attributes | quality | both.
    #[arg(long, default_value = "attributes")]
    task: String,
    /// Sparse-sampling stride.
    #[arg(long, default_value_t = 16)]
    stride: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Model checkpoint (student, or student + --aggregator for sequence
    /// tasks).
    #[arg(long)]
    checkpoint: PathBuf,
    /// Manifest of the split to evaluate.
    #[arg(long)]
    manifest: PathBuf,
    /// Metrics to compute, comma-separated: top1, hallucination,
    /// attributes, quality.
    #[arg(long, value_delimiter = ',', default_values_t = vec!["top1".to_string()])]
    metrics: Vec<String>,
    /// Teacher checkpoint (needed for the hallucination metric).
    #[arg(long)]
    teacher: Option<PathBuf>,
    /// Aggregator checkpoint (needed for attributes/quality metrics).
    #[arg(long)]
    aggregator: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    stride: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Timed runs (>= 10).
    #[arg(long, default_value_t = 30)]
    runs: usize,
    /// Untimed warmups (>= 3).
    #[arg(long, default_value_t = 5)]
    warmup: usize,
    /// Unrolled steps for aggregator checkpoints.
    #[arg(long, default_value_t = 6)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Experiment root holding eval_*/ and *.metrics.json outputs.
    #[arg(long)]
    root: PathBuf,
    /// Table output directory (default: <root>/tables).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output root.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    overwrite: bool,
}

/// Experiment description consumed by `run`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    /// Paths relative to this config file.
    pub generator: PathBuf,
    pub teacher_train: PathBuf,
    pub student_train: PathBuf,
    #[serde(default)]
    pub with_multiframe: bool,
    #[serde(default)]
    pub teacher_channels: Option<Vec<usize>>,
    #[serde(default)]
    pub student_channels: Option<Vec<usize>>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<(ExperimentConfig, PathBuf)> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("experiment config: {e}")))?;
        let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        for rel in [&cfg.generator, &cfg.teacher_train, &cfg.student_train] {
            let p = base.join(rel);
            if !p.exists() {
                return Err(Error::MissingFile(p));
            }
        }
        Ok((cfg, base))
    }
}

pub fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synthvid { cmd: SynthvidCmd::Build(a) } => cmd_build_data(a),
        Command::TrainTeacher(a) => cmd_train_teacher(a),
        Command::TrainStudent(a) => cmd_train_student(a),
        Command::TrainSequence(a) => cmd_train_sequence(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Profile(a) => cmd_profile(a),
        Command::Report(a) => cmd_report(a),
        Command::Run(a) => cmd_run(a),
    }
}

fn prepare_out(dir: &Path, overwrite: bool, sentinel: &str) -> Result<()> {
    let marker = dir.join(sentinel);
    if marker.exists() && !overwrite {
        return Err(Error::AlreadyExists(marker));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Timestamp sidecar; the only place wall-clock time of day is recorded.
fn write_meta(dir: &Path) -> Result<()> {
    let ts = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({"timestamp_unix_secs": ts, "code_version": crate::CODE_VERSION});
    std::fs::write(dir.join("run.meta.json"), meta.to_string())
        .map_err(|e| Error::io(dir.join("run.meta.json"), e))
}

fn require_file(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(())
}

fn load_generator_config(path: &Path) -> Result<GeneratorConfig> {
    require_file(path)?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: GeneratorConfig =
        toml::from_str(&text).map_err(|e| Error::Config(format!("generator config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_build_data(a: SynthvidBuildArgs) -> Result<()> {
    let cfg = load_generator_config(&a.config)?;
    let built = build_dataset(&cfg, &a.out, a.overwrite)?;
    write_meta(&a.out)?;
    for m in &built.manifests {
        println!(
            "built split {}: {} clips ({} classes)",
            m.split.as_str(),
            m.records.len(),
            m.class_names.len()
        );
    }
    Ok(())
}

fn save_train_outputs(
    dir: &Path,
    config: &TrainConfig,
    log: &TrainingLog,
) -> Result<()> {
    let cfg_text = toml::to_string_pretty(config)
        .map_err(|e| Error::Config(format!("train config serialization: {e}")))?;
    std::fs::write(dir.join("config_used.toml"), cfg_text)
        .map_err(|e| Error::io(dir.join("config_used.toml"), e))?;
    log.write(&dir.join("train_log.jsonl"))?;
    write_meta(dir)
}

fn cmd_train_teacher(a: TrainTeacherArgs) -> Result<()> {
    prepare_out(&a.out, a.overwrite, "final.hnck")?;
    let train = ClipDataset::from_manifest(&a.data)?;
    let val = ClipDataset::from_manifest(&a.val)?;
    let cfg = TrainConfig::from_toml_file(&a.config)?;
    let geom = train.frame_geometry()?;
    let arch = TeacherConfig {
        clip_len: train.clip_len()?,
        in_channels: geom.0,
        height: geom.1,
        width: geom.2,
        channels: a.channels,
        ..Default::default()
    };
    let (model, log) = trainer::train_teacher(&train, &val, &arch, &cfg, Some(&a.out))?;
    save_train_outputs(&a.out, &cfg, &log)?;
    let last = log.records.last().unwrap();
    println!(
        "teacher trained: {} epochs, final train top1 {:.3}, val top1 {:.3} -> {}",
        cfg.epochs,
        last.metrics["train_top1"],
        last.metrics["val_top1"],
        a.out.join("final.hnck").display()
    );
    let _ = model;
    Ok(())
}

fn student_arch_for(train: &ClipDataset, channels: Vec<usize>, teacher_dim: usize) -> Result<StudentConfig> {
    let geom = train.frame_geometry()?;
    Ok(StudentConfig {
        in_channels: geom.0,
        height: geom.1,
        width: geom.2,
        channels,
        teacher_dim,
        ..Default::default()
    })
}

fn cmd_train_student(a: TrainStudentArgs) -> Result<()> {
    prepare_out(&a.out, a.overwrite, "final.hnck")?;
    let train = ClipDataset::from_manifest(&a.data)?;
    let val = ClipDataset::from_manifest(&a.val)?;
    let teacher = load_teacher(&a.teacher)?;
    let cfg = TrainConfig::from_toml_file(&a.config)?;
    let arch = student_arch_for(&train, a.channels, teacher.feature_dim())?;
    let (_, log) = trainer::train_student(&train, &val, &teacher, &arch, &cfg, Some(&a.out))?;
    save_train_outputs(&a.out, &cfg, &log)?;
    let last = log.records.last().unwrap();
    println!(
        "student trained ({} mode): final val top1 {:.3}, val L_hallu {:.5}",
        cfg.mode.as_str(),
        last.metrics["val_top1"],
        last.val_l_hallu
    );
    Ok(())
}

fn cmd_train_sequence(a: TrainSequenceArgs) -> Result<()> {
    prepare_out(&a.out, a.overwrite, "aggregator_final.hnck")?;
    let train = ClipDataset::from_manifest(&a.data)?;
    let val = ClipDataset::from_manifest(&a.val)?;
    let cfg = TrainConfig::from_toml_file(&a.config)?;
    let task: SequenceTask = a.task.parse()?;
    let teacher = a.teacher.as_deref().map(load_teacher).transpose()?;
    let student = match &a.student {
        Some(path) => load_student(path)?,
        None => {
            let teacher_dim = teacher.as_ref().map(|t| t.feature_dim()).unwrap_or(64);
            let mut arch = student_arch_for(&train, vec![8, 16, 32, 64], teacher_dim)?;
            arch.init_seed = crate::rng::derive_seed(cfg.seed, 7);
            crate::model_zoo::StudentModel::new(arch)?
        }
    };
    let (_, _, log) = trainer::train_sequence_model(
        &train,
        &val,
        student,
        teacher.as_ref(),
        &AggregatorConfig::default(),
        &cfg,
        task,
        a.stride,
        None,
        Some(&a.out),
    )?;
    save_train_outputs(&a.out, &cfg, &log)?;
    let last = log.records.last().unwrap();
    println!(
        "sequence model trained ({} / {}): final metrics {:?}",
        cfg.mode.as_str(),
        task.as_str(),
        last.metrics
    );
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    prepare_out(&a.out, a.overwrite, "report.metrics.jsonl")?;
    let ds = ClipDataset::from_manifest(&a.manifest)?;
    let student = load_student(&a.checkpoint)?;
    let teacher = a.teacher.as_deref().map(load_teacher).transpose()?;
    let want = |m: &str| a.metrics.iter().any(|x| x == m);

    let report = if let Some(agg_path) = &a.aggregator {
        let agg = match load_checkpoint(agg_path)? {
            ModelCheckpoint::Aggregator(agg) => agg,
            other => {
                return Err(Error::Format(format!(
                    "expected an aggregator checkpoint, found {}",
                    other.kind_name()
                )))
            }
        };
        let task = match (want("attributes"), want("quality")) {
            (true, false) => SequenceTask::Attributes,
            (false, true) => SequenceTask::Quality,
            _ => SequenceTask::Both,
        };
        evaluator::evaluate_sequence(&student, &agg, &ds, a.stride, task)?
    } else {
        let mut report = evaluator::evaluate_classification(
            &student,
            if want("hallucination") { teacher.as_ref() } else { None },
            &ds,
            &ds.name.clone(),
        )?;
        if want("hallucination") && teacher.is_none() {
            return Err(Error::InvalidArgument(
                "hallucination metric needs --teacher".into(),
            ));
        }
        if !want("top1") {
            report.metrics.remove("top1");
        }
        report
    };

    evaluator::write_eval_report(&report, &a.out.join("report.metrics.jsonl"))?;
    let mut txt = format!("split: {}\nsamples: {}\n", report.split, report.sample_count);
    for (k, v) in &report.metrics {
        txt.push_str(&format!("{k}: {v:.6}\n"));
    }
    std::fs::write(a.out.join("report.txt"), txt).map_err(|e| Error::io(a.out.join("report.txt"), e))?;
    write_meta(&a.out)?;
    println!("eval metrics: {:?}", report.metrics);
    Ok(())
}

fn cmd_profile(a: ProfileArgs) -> Result<()> {
    prepare_out(&a.out, a.overwrite, "cost_static.metrics.json")?;
    let (report, layers) = match load_checkpoint(&a.checkpoint)? {
        ModelCheckpoint::Teacher(t) => (
            profiler::teacher_cost_report(&t, "teacher", a.runs, a.warmup)?,
            profiler::teacher_cost(&t.config),
        ),
        ModelCheckpoint::Student(s) => (
            profiler::student_cost_report(&s, "student", a.runs, a.warmup)?,
            profiler::student_cost(&s.config),
        ),
        ModelCheckpoint::Aggregator(g) => {
            let layers = profiler::aggregator_cost(&g.config, a.steps);
            let stats = profiler::measure_aggregator_latency(&g, a.steps, a.runs, a.warmup)?;
            (
                profiler::CostReport {
                    model_name: "aggregator".into(),
                    parameter_count: profiler::total_params(&layers),
                    flops: profiler::estimate_flops(&layers),
                    latency: stats,
                    input_shape: vec![a.steps, g.config.input_dim],
                    flop_convention: profiler::FLOP_CONVENTION.to_string(),
                },
                layers,
            )
        }
    };

    let static_part = serde_json::json!({
        "model": report.model_name,
        "parameter_count": report.parameter_count,
        "flops": report.flops,
        "input_shape": report.input_shape,
        "flop_convention": report.flop_convention,
        "layers": layers,
        "code_version": crate::CODE_VERSION,
    });
    std::fs::write(
        a.out.join("cost_static.metrics.json"),
        serde_json::to_string_pretty(&static_part).unwrap(),
    )
    .map_err(|e| Error::io(a.out.join("cost_static.metrics.json"), e))?;
    let timing = serde_json::json!({
        "mean_secs": report.latency.mean_secs,
        "stddev_secs": report.latency.stddev_secs,
        "runs": report.latency.runs_ns.len(),
        "warmups": report.latency.warmups,
        "hardware": report.latency.hardware,
    });
    std::fs::write(a.out.join("latency.timing.json"), serde_json::to_string_pretty(&timing).unwrap())
        .map_err(|e| Error::io(a.out.join("latency.timing.json"), e))?;
    profiler::write_timing_file(&report.latency, &a.out.join("timings.ns"))?;
    let txt = format!(
        "model: {}\nparams: {}\nflops: {}\nmean: {:.6} ms  stddev: {:.6} ms  (N={}, W={})\nhardware: {}\nconvention: {}\n",
        report.model_name,
        report.parameter_count,
        report.flops,
        report.latency.mean_secs * 1e3,
        report.latency.stddev_secs * 1e3,
        report.latency.runs_ns.len(),
        report.latency.warmups,
        report.latency.hardware,
        report.flop_convention,
    );
    std::fs::write(a.out.join("cost.txt"), txt).map_err(|e| Error::io(a.out.join("cost.txt"), e))?;
    write_meta(&a.out)?;
    println!(
        "profiled {}: {} params, {} FLOPs, {:.3} ms/inference",
        report.model_name,
        report.parameter_count,
        report.flops,
        report.latency.mean_secs * 1e3
    );
    Ok(())
}

fn write_table(dir: &Path, name: &str, json: &serde_json::Value, txt: &str) -> Result<()> {
    std::fs::write(dir.join(format!("{name}.table.json")), serde_json::to_string_pretty(json).unwrap())
        .map_err(|e| Error::io(dir, e))?;
    std::fs::write(dir.join(format!("{name}.txt")), txt).map_err(|e| Error::io(dir, e))
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    require_file(&a.root)?;
    let out = a.out.unwrap_or_else(|| a.root.join("tables"));
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let mut wrote = 0usize;

    // classification-style eval reports
    let mut class_rows = Vec::new();
    let mut attr_rows = Vec::new();
    let mut aqa_rows = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(&a.root)
        .map_err(|e| Error::io(&a.root, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .collect();
    entries.sort();
    for path in entries {
        let Some(dirname) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(name) = dirname.strip_prefix("eval_") else { continue };
        let report_path = path.join("report.metrics.jsonl");
        if !report_path.exists() {
            continue;
        }
        let report = evaluator::read_eval_report(&report_path)?;
        if report.metric("top1").is_some() {
            class_rows.push((name.to_string(), report.clone()));
        }
        if report.metric("attr_mean").is_some() {
            attr_rows.push((name.to_string(), report.clone()));
        }
        if report.metric("spearman").is_some() {
            aqa_rows.push((name.to_string(), report));
        }
    }
    if !class_rows.is_empty() {
        let (json, txt) = tables::classification_table(&class_rows);
        write_table(&out, "classification", &json, &txt)?;
        wrote += 1;
    }
    if !attr_rows.is_empty() {
        let (json, txt) = tables::attribute_table(&attr_rows);
        write_table(&out, "attributes", &json, &txt)?;
        wrote += 1;
    }
    if !aqa_rows.is_empty() {
        let (json, txt) = tables::aqa_table(&aqa_rows);
        write_table(&out, "aqa", &json, &txt)?;
        wrote += 1;
    }

    let cost_path = a.root.join("cost_accuracy.timing.json");
    if cost_path.exists() {
        let table: profiler::CostAccuracyTable = serde_json::from_str(
            &std::fs::read_to_string(&cost_path).map_err(|e| Error::io(&cost_path, e))?,
        )
        .map_err(|e| Error::Format(format!("cost table: {e}")))?;
        let (static_json, timing_json, txt) = tables::cost_accuracy_tables(&table);
        write_table(&out, "cost_accuracy", &static_json, &txt)?;
        std::fs::write(
            out.join("cost_accuracy.table.timing.json"),
            serde_json::to_string_pretty(&timing_json).unwrap(),
        )
        .map_err(|e| Error::io(&out, e))?;
        wrote += 1;
    }

    let two_frame_path = a.root.join("two_frame.timing.json");
    if two_frame_path.exists() {
        let cmp: evaluator::FrameComparison = serde_json::from_str(
            &std::fs::read_to_string(&two_frame_path).map_err(|e| Error::io(&two_frame_path, e))?,
        )
        .map_err(|e| Error::Format(format!("two-frame comparison: {e}")))?;
        let (json, txt) = tables::two_frame_table(&cmp);
        write_table(&out, "two_frame", &json, &txt)?;
        wrote += 1;
    }

    let grid_path = a.root.join("pretrain_grid.metrics.json");
    if grid_path.exists() {
        let grid: trainer::PretrainFinetuneReport = serde_json::from_str(
            &std::fs::read_to_string(&grid_path).map_err(|e| Error::io(&grid_path, e))?,
        )
        .map_err(|e| Error::Format(format!("pretrain grid: {e}")))?;
        let (json, txt) = tables::pretraining_table(&grid);
        write_table(&out, "pretraining", &json, &txt)?;
        wrote += 1;
    }

    println!("wrote {wrote} tables to {}", out.display());
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let (exp, base) = ExperimentConfig::load(&a.config)?;
    prepare_out(&a.out, a.overwrite, "data")?;

    // 1. data
    let mut gen = load_generator_config(&base.join(&exp.generator))?;
    gen.master_seed = exp.seed;
    let data_dir = a.out.join("data");
    build_dataset(&gen, &data_dir, a.overwrite)?;
    let train = ClipDataset::from_manifest(&data_dir.join("train.manifest.tsv"))?;
    let val = ClipDataset::from_manifest(&data_dir.join("val.manifest.tsv"))?;
    let test = ClipDataset::from_manifest(&data_dir.join("test.manifest.tsv"))?;
    println!("data: {} train / {} val / {} test", train.len(), val.len(), test.len());

    // 2. teacher
    let mut teacher_cfg = TrainConfig::from_toml_file(&base.join(&exp.teacher_train))?;
    teacher_cfg.seed = toml_safe_seed(derive_seed(exp.seed, 101));
    let geom = train.frame_geometry()?;
    let teacher_arch = TeacherConfig {
        clip_len: train.clip_len()?,
        in_channels: geom.0,
        height: geom.1,
        width: geom.2,
        channels: exp.teacher_channels.clone().unwrap_or(vec![8, 16, 64]),
        ..Default::default()
    };
    let teacher_dir = a.out.join("teacher");
    std::fs::create_dir_all(&teacher_dir).map_err(|e| Error::io(&teacher_dir, e))?;
    let (teacher, tlog) = trainer::train_teacher(&train, &val, &teacher_arch, &teacher_cfg, Some(&teacher_dir))?;
    save_train_outputs(&teacher_dir, &teacher_cfg, &tlog)?;
    println!(
        "teacher: val top1 {:.3}",
        tlog.records.last().unwrap().metrics["val_top1"]
    );

    // 3. students under matched seeds
    let base_student_cfg = TrainConfig::from_toml_file(&base.join(&exp.student_train))?;
    let student_seed = toml_safe_seed(derive_seed(exp.seed, 102));
    let arch = student_arch_for(
        &train,
        exp.student_channels.clone().unwrap_or(vec![8, 16, 32, 64]),
        teacher.feature_dim(),
    )?;
    let mut students = Vec::new();
    let mut modes = vec![
        (TrainMode::Vanilla, "vanilla"),
        (TrainMode::Hallucinet, "hallucinet"),
        (TrainMode::Direct, "direct"),
    ];
    if exp.with_multiframe {
        modes.push((TrainMode::Multiframe, "multiframe"));
    }
    for (mode, name) in &modes {
        let cfg = TrainConfig { mode: *mode, seed: student_seed, ..base_student_cfg.clone() };
        let dir = a.out.join(format!("student_{name}"));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let (student, slog) = trainer::train_student(&train, &val, &teacher, &arch, &cfg, Some(&dir))?;
        save_train_outputs(&dir, &cfg, &slog)?;
        println!(
            "student {name}: val top1 {:.3}, val L_hallu {:.5}",
            slog.records.last().unwrap().metrics["val_top1"],
            slog.records.last().unwrap().val_l_hallu
        );
        students.push((*mode, name.to_string(), student));
    }

    // 4. evals on the test split
    for (_, name, student) in &students {
        let dir = a.out.join(format!("eval_{name}"));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let report = evaluator::evaluate_classification(student, Some(&teacher), &test, "test")?;
        evaluator::write_eval_report(&report, &dir.join("report.metrics.jsonl"))?;
        write_meta(&dir)?;
    }

    // 5. cost/accuracy table (vanilla + direct + teacher)
    let vanilla = &students.iter().find(|(m, _, _)| *m == TrainMode::Vanilla).unwrap().2;
    let direct = &students.iter().find(|(m, _, _)| *m == TrainMode::Direct).unwrap().2;
    let cost = profiler::cost_accuracy_table(vanilla, direct, &teacher, &[("test", &test)], 10, 3)?;
    std::fs::write(
        a.out.join("cost_accuracy.timing.json"),
        serde_json::to_string_pretty(&cost).unwrap(),
    )
    .map_err(|e| Error::io(&a.out, e))?;
    let static_rows: Vec<_> = cost
        .rows
        .iter()
        .map(|r| serde_json::json!({"model": r.model, "accuracy": r.accuracy, "flops": r.flops, "params": r.params}))
        .collect();
    std::fs::write(
        a.out.join("cost_accuracy.metrics.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "rows": static_rows,
            "flop_convention": cost.flop_convention,
            "code_version": crate::CODE_VERSION,
            "seed": exp.seed,
        }))
        .unwrap(),
    )
    .map_err(|e| Error::io(&a.out, e))?;

    // 6. optional two-frame comparison against the single-frame run
    if exp.with_multiframe {
        let single = &students.iter().find(|(m, _, _)| *m == TrainMode::Hallucinet).unwrap().2;
        let multi = &students.iter().find(|(m, _, _)| *m == TrainMode::Multiframe).unwrap().2;
        let cfg1 = TrainConfig {
            mode: TrainMode::Hallucinet,
            seed: student_seed,
            ..base_student_cfg.clone()
        };
        let cfg2 = TrainConfig { mode: TrainMode::Multiframe, ..cfg1.clone() };
        let cmp = evaluator::compare_single_vs_multiframe(
            &train,
            &val,
            &test,
            &teacher,
            &arch,
            &cfg1,
            &cfg2,
            Some((single.clone(), multi.clone())),
        )?;
        std::fs::write(
            a.out.join("two_frame.timing.json"),
            serde_json::to_string_pretty(&cmp).unwrap(),
        )
        .map_err(|e| Error::io(&a.out, e))?;
        let static_part = serde_json::json!({
            "single_hallucination_error": cmp.single.metric("hallucination_error"),
            "multi_hallucination_error": cmp.multi.metric("hallucination_error"),
            "reduction_percent": cmp.hallucination_reduction_percent,
            "single_top1": cmp.single.metric("top1"),
            "multi_top1": cmp.multi.metric("top1"),
            "seed": exp.seed,
        });
        std::fs::write(
            a.out.join("two_frame.metrics.json"),
            serde_json::to_string_pretty(&static_part).unwrap(),
        )
        .map_err(|e| Error::io(&a.out, e))?;
    }

    // 7. tables
    cmd_report(ReportArgs { root: a.out.clone(), out: None })?;
    write_meta(&a.out)?;
    println!("run complete: {}", a.out.display());
    Ok(())
}
