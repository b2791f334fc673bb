//! Line-delimited UTF-8 dataset manifest.
//!
//! Header line:
//! `svid-manifest v1 name=<name> split=<split> config=<hash> classes=<a,b,...>`
//!
//! Record lines, tab-separated, in this order:
//! `clip_id  relative_path  class_id  attr0,..,attr4  quality  seed`

use super::{DatasetManifest, Split};
use crate::error::{Error, Result};
use std::collections::HashSet;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub clip_id: String,
    pub relative_path: String,
    pub class_id: usize,
    pub attributes: [u8; 5],
    pub quality: f64,
    pub seed: u64,
}

pub fn manifest_to_string(m: &DatasetManifest) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "svid-manifest v1 name={} split={} config={} classes={}\n",
        m.name,
        m.split.as_str(),
        m.generator_config_hash,
        m.class_names.join(",")
    ));
    for r in &m.records {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.clip_id,
            r.relative_path,
            r.class_id,
            r.attributes.map(|a| a.to_string()).join(","),
            r.quality,
            r.seed
        ));
    }
    out
}

pub fn write_manifest(m: &DatasetManifest, path: &Path) -> Result<()> {
    fs::write(path, manifest_to_string(m)).map_err(|e| Error::io(path, e))
}

fn header_field<'a>(tokens: &[(&'a str, &'a str)], key: &str) -> Result<&'a str> {
    tokens
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Format(format!("manifest header missing {key}=")))
}

/// Parse a manifest from text. Rejects duplicate clip ids and malformed
/// lines; never panics on arbitrary input.
pub fn parse_manifest(text: &str) -> Result<DatasetManifest> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty manifest".into()))?;
    let mut parts = header.split(' ');
    if parts.next() != Some("svid-manifest") || parts.next() != Some("v1") {
        return Err(Error::Format("manifest header must start with 'svid-manifest v1'".into()));
    }
    let tokens: Vec<(&str, &str)> = parts
        .filter(|t| !t.is_empty())
        .map(|t| t.split_once('=').ok_or_else(|| Error::Format(format!("bad header token: {t}"))))
        .collect::<Result<_>>()?;
    let name = header_field(&tokens, "name")?.to_string();
    let split: Split = header_field(&tokens, "split")?.parse()?;
    let config = header_field(&tokens, "config")?.to_string();
    let classes: Vec<String> = header_field(&tokens, "classes")?
        .split(',')
        .map(str::to_string)
        .collect();

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(Error::Format(format!(
                "manifest line {}: expected 6 tab-separated fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| Error::Format(format!("manifest line {}: bad {what}", lineno + 2));
        let class_id: usize = fields[2].parse().map_err(|_| bad("class_id"))?;
        let attr_vec: Vec<u8> = fields[3]
            .split(',')
            .map(|a| a.parse().map_err(|_| bad("attributes")))
            .collect::<Result<_>>()?;
        let attributes: [u8; 5] = attr_vec.try_into().map_err(|_| bad("attribute count"))?;
        let quality: f64 = fields[4].parse().map_err(|_| bad("quality"))?;
        let seed: u64 = fields[5].parse().map_err(|_| bad("seed"))?;
        if !seen.insert(fields[0].to_string()) {
            return Err(Error::Format(format!("duplicate clip_id {}", fields[0])));
        }
        records.push(ManifestRecord {
            clip_id: fields[0].to_string(),
            relative_path: fields[1].to_string(),
            class_id,
            attributes,
            quality,
            seed,
        });
    }
    Ok(DatasetManifest {
        name,
        split,
        class_names: classes,
        generator_config_hash: config,
        records,
    })
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}

/// Check that every record's clip file exists, decodes, and has pixel values
/// in [0, 1] with the labels' declared class in range.
pub fn verify_manifest(m: &DatasetManifest, root: &Path) -> Result<()> {
    for r in &m.records {
        let path = root.join(&r.relative_path);
        let clip = super::read_clip_file(&path, r)?;
        if clip.frames.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Format(format!("clip {} has out-of-range pixels", r.clip_id)));
        }
        if r.class_id >= m.class_names.len() {
            return Err(Error::Format(format!(
                "clip {} class_id {} out of range",
                r.clip_id, r.class_id
            )));
        }
    }
    Ok(())
}

/// Load every clip of a manifest into memory.
pub fn load_clips(m: &DatasetManifest, root: &Path) -> Result<Vec<super::VideoClip>> {
    m.records
        .iter()
        .map(|r| super::read_clip_file(&root.join(&r.relative_path), r))
        .collect()
}
