//! Clip generation and dataset assembly.

use super::manifest::{write_manifest, ManifestRecord};
use super::motion::{attributes_for, draw_motion_params, quality_for, MotionClass};
use super::render::render_frame;
use super::{DatasetManifest, GeneratorConfig, Split, VideoClip};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use ndarray::Array4;
use rand_distr::{Distribution, Normal};
use std::fs;
use std::path::Path;

/// RNG streams hanging off a clip seed.
const STREAM_PARAMS: u64 = 0;
const STREAM_CUE: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// Generate one clip. Bit-identical for identical (class, seed, config).
pub fn generate_clip(class_id: usize, rng_seed: u64, config: &GeneratorConfig) -> Result<VideoClip> {
    config.validate()?;
    let class = MotionClass::from_id(class_id)
        .filter(|_| class_id < config.num_classes)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "class_id {class_id} out of range [0, {})",
                config.num_classes
            ))
        })?;

    let mut params_rng = rng_from_seed(derive_seed(rng_seed, STREAM_PARAMS));
    let mut cue_rng = rng_from_seed(derive_seed(rng_seed, STREAM_CUE));
    let params = draw_motion_params(class, &mut params_rng, &mut cue_rng, config);

    let (t_len, c, h, w) = (config.frames, config.channels, config.height, config.width);
    let mut frames = Array4::<f32>::zeros((t_len, c, h, w));
    if config.noise_std > 0.0 {
        let mut noise_rng = rng_from_seed(derive_seed(rng_seed, STREAM_NOISE));
        let normal = Normal::new(0.0f64, config.noise_std).expect("validated noise_std");
        for t in 0..t_len {
            let base = render_frame(&params, t, t_len, h, w, config.cue_contrast);
            for ci in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        let v = (base[[y, x]] + normal.sample(&mut noise_rng)).clamp(0.0, 1.0);
                        frames[[t, ci, y, x]] = v as f32;
                    }
                }
            }
        }
    } else {
        for t in 0..t_len {
            let base = render_frame(&params, t, t_len, h, w, config.cue_contrast);
            for ci in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        frames[[t, ci, y, x]] = base[[y, x]] as f32;
                    }
                }
            }
        }
    }

    Ok(VideoClip {
        frames,
        class_id,
        attributes: attributes_for(&params),
        quality: quality_for(&params, &config.motion),
        clip_id: format!("clip-{rng_seed:016x}"),
        seed: rng_seed,
    })
}

fn split_sizes(config: &GeneratorConfig) -> [(Split, usize); 3] {
    [
        (Split::Train, config.train_clips),
        (Split::Val, config.val_clips),
        (Split::Test, config.test_clips),
    ]
}

/// Generate one split in memory. Splits draw from disjoint seed streams of
/// the master seed (global clip index), and classes are assigned round-robin
/// so per-class counts differ by at most one.
pub fn generate_split(config: &GeneratorConfig, split: Split) -> Result<Vec<VideoClip>> {
    config.validate()?;
    let mut offset = 0usize;
    let mut size = 0usize;
    for (s, n) in split_sizes(config) {
        if s == split {
            size = n;
            break;
        }
        offset += n;
    }
    let mut clips = Vec::with_capacity(size);
    for i in 0..size {
        let seed = derive_seed(config.master_seed, (offset + i) as u64);
        let class_id = i % config.num_classes;
        let mut clip = generate_clip(class_id, seed, config)?;
        clip.clip_id = format!("{}-{}-{:05}", config.name, split.as_str(), i);
        clips.push(clip);
    }
    Ok(clips)
}

/// A dataset written to disk: per-split manifests (clips are on disk).
pub struct BuiltDataset {
    pub manifests: Vec<DatasetManifest>,
}

/// Build all three splits under `out_dir`:
///
/// ```text
/// out_dir/
///   train.manifest.tsv  val.manifest.tsv  test.manifest.tsv
///   generator.toml
///   clips/<split>/<clip_id>.svid
/// ```
pub fn build_dataset(config: &GeneratorConfig, out_dir: &Path, overwrite: bool) -> Result<BuiltDataset> {
    config.validate()?;
    if out_dir.exists() && out_dir.join("train.manifest.tsv").exists() && !overwrite {
        return Err(Error::AlreadyExists(out_dir.to_path_buf()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let config_text = toml::to_string_pretty(config)
        .map_err(|e| Error::Config(format!("generator config serialization: {e}")))?;
    fs::write(out_dir.join("generator.toml"), config_text)
        .map_err(|e| Error::io(out_dir.join("generator.toml"), e))?;

    let hash = config.config_hash();
    let mut manifests = Vec::new();
    for (split, _) in split_sizes(config) {
        let clips = generate_split(config, split)?;
        let clip_dir = out_dir.join("clips").join(split.as_str());
        fs::create_dir_all(&clip_dir).map_err(|e| Error::io(&clip_dir, e))?;
        let mut records = Vec::with_capacity(clips.len());
        for clip in &clips {
            let rel = format!("clips/{}/{}.svid", split.as_str(), clip.clip_id);
            super::write_clip_file(&out_dir.join(&rel), &clip.frames)?;
            records.push(ManifestRecord {
                clip_id: clip.clip_id.clone(),
                relative_path: rel,
                class_id: clip.class_id,
                attributes: clip.attributes,
                quality: clip.quality,
                seed: clip.seed,
            });
        }
        let manifest = DatasetManifest {
            name: config.name.clone(),
            split,
            class_names: config.class_names(),
            generator_config_hash: hash.clone(),
            records,
        };
        write_manifest(&manifest, &out_dir.join(format!("{}.manifest.tsv", split.as_str())))?;
        manifests.push(manifest);
    }
    Ok(BuiltDataset { manifests })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> GeneratorConfig {
        GeneratorConfig {
            name: "tiny".into(),
            train_clips: 8,
            val_clips: 4,
            test_clips: 4,
            num_classes: 4,
            master_seed: 99,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_class_is_bit_identical() {
        let cfg = GeneratorConfig::default();
        let a = generate_clip(2, 1234, &cfg).unwrap();
        let b = generate_clip(2, 1234, &cfg).unwrap();
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.attributes, b.attributes);
        assert_eq!(a.quality, b.quality);
    }

    #[test]
    fn static_class_frames_are_identical() {
        let cfg = GeneratorConfig::default();
        let static_id = MotionClass::Static.id();
        let clip = generate_clip(static_id, 7, &cfg).unwrap();
        let first = clip.frames.index_axis(ndarray::Axis(0), 0);
        for t in 1..clip.num_frames() {
            assert_eq!(clip.frames.index_axis(ndarray::Axis(0), t), first);
        }
    }

    #[test]
    fn out_of_range_class_is_rejected() {
        let cfg = tiny_config();
        assert!(generate_clip(4, 1, &cfg).is_err());
        assert!(generate_clip(99, 1, &cfg).is_err());
    }

    #[test]
    fn degenerate_canvas_is_rejected() {
        let cfg = GeneratorConfig { height: 8, width: 8, ..Default::default() };
        assert!(matches!(generate_clip(0, 1, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn splits_are_balanced_and_disjoint() {
        let cfg = tiny_config();
        let train = generate_split(&cfg, Split::Train).unwrap();
        assert_eq!(train.len(), 8);
        let mut counts = [0usize; 4];
        for c in &train {
            counts[c.class_id] += 1;
        }
        assert_eq!(counts, [2, 2, 2, 2]);
        let val = generate_split(&cfg, Split::Val).unwrap();
        let train_seeds: std::collections::HashSet<u64> = train.iter().map(|c| c.seed).collect();
        assert!(val.iter().all(|c| !train_seeds.contains(&c.seed)));
    }
}
