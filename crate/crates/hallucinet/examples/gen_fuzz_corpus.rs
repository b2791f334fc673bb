//! Regenerates the checked-in fuzz corpus seeds under fuzz/corpus/.
//! Run from the workspace root: `cargo run --example gen_fuzz_corpus`.

use hallucinet::model_zoo::{encode_checkpoint, CheckpointRef, TeacherConfig, TeacherModel};
use hallucinet::synthvid::{encode_clip, GeneratorConfig};
use ndarray::Array4;
use std::fs;
use std::path::Path;

fn write(dir: &Path, name: &str, bytes: &[u8]) {
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join(name), bytes).unwrap();
    println!("wrote {}", dir.join(name).display());
}

fn main() {
    let root = Path::new("fuzz/corpus");

    // clip files: a tiny valid clip plus a truncated variant
    let frames = Array4::from_shape_fn((2, 1, 4, 4), |(t, _, y, x)| {
        ((t + y + x) as f32 * 0.11).fract()
    });
    let clip = encode_clip(&frames);
    write(&root.join("clip_file"), "valid_tiny.svid", &clip);
    write(&root.join("clip_file"), "truncated.svid", &clip[..clip.len() - 5]);

    // checkpoint: a minimal teacher
    let teacher = TeacherModel::new(TeacherConfig {
        clip_len: 2,
        height: 4,
        width: 4,
        channels: vec![2],
        num_classes: 2,
        init_seed: 1,
        ..Default::default()
    })
    .unwrap();
    let ckpt = encode_checkpoint(&CheckpointRef::Teacher(&teacher));
    write(&root.join("checkpoint"), "teacher_tiny.hnck", &ckpt);
    write(&root.join("checkpoint"), "truncated.hnck", &ckpt[..64]);

    // manifest
    let manifest = "svid-manifest v1 name=seed split=train config=0011223344556677 classes=translate-east,translate-west\n\
seed-train-00000\tclips/train/seed-train-00000.svid\t0\t1,0,0,0,1\t0.625\t42\n";
    write(&root.join("manifest"), "valid.tsv", manifest.as_bytes());

    // train config
    let train = "epochs = 3\nbatch_size = 4\nlambda = 50.0\nmode = \"hallucinet\"\nseed = 7\n";
    write(&root.join("train_config"), "valid.toml", train.as_bytes());

    // generator config
    let gen = toml::to_string_pretty(&GeneratorConfig::default()).unwrap();
    write(&root.join("generator_config"), "default.toml", gen.as_bytes());

    // training log
    let log = "{\"format\":\"hallucinet-train-log/v1\",\"config_hash\":\"abc\",\"code_version\":\"0.1.0\",\"mode\":\"hallucinet\",\"lambda\":50.0,\"seed\":7}\n\
{\"epoch\":0,\"train_l_mt\":1.8,\"train_l_hallu\":0.01,\"train_l_mtl\":2.3,\"val_l_mt\":1.9,\"val_l_hallu\":0.01,\"val_l_mtl\":2.4,\"metrics\":{\"val_top1\":0.25},\"wall_secs\":1.5}\n";
    write(&root.join("training_log"), "valid.jsonl", log.as_bytes());

    // eval report
    let report = "{\"format\":\"hallucinet-eval/v1\",\"split\":\"test\",\"checkpoint_hash\":\"aa\",\"code_version\":\"0.1.0\"}\n\
{\"metric\":\"top1\",\"value\":0.5}\n\
{\"summary\":{\"split\":\"test\",\"metrics\":{\"top1\":0.5},\"confusion\":[[1,0],[0,1]],\"sample_count\":2,\"checkpoint_hash\":\"aa\",\"code_version\":\"0.1.0\"}}\n";
    write(&root.join("eval_report"), "valid.jsonl", report.as_bytes());
}
