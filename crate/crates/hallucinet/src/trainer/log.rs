//! Machine-parseable training log: a JSON header line naming config hash and
//! code version, then one JSON record per epoch.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const LOG_FORMAT: &str = "hallucinet-train-log/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub config_hash: String,
    pub code_version: String,
    pub mode: String,
    pub lambda: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_l_mt: f64,
    pub train_l_hallu: f64,
    pub train_l_mtl: f64,
    pub val_l_mt: f64,
    pub val_l_hallu: f64,
    pub val_l_mtl: f64,
    /// Accuracy-style metrics, e.g. train_top1 / val_top1 / val_spearman.
    pub metrics: BTreeMap<String, f64>,
    pub wall_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingLog {
    pub header: LogHeader,
    pub records: Vec<EpochRecord>,
    pub final_checkpoint: Option<PathBuf>,
}

impl TrainingLog {
    pub fn new(config_hash: String, mode: &str, lambda: f64, seed: u64) -> Self {
        TrainingLog {
            header: LogHeader {
                format: LOG_FORMAT.to_string(),
                config_hash,
                code_version: crate::CODE_VERSION.to_string(),
                mode: mode.to_string(),
                lambda,
                seed,
            },
            records: Vec::new(),
            final_checkpoint: None,
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).unwrap();
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).unwrap());
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    /// Parse a log, checking the format tag and monotone epoch indices.
    pub fn parse(text: &str) -> Result<TrainingLog> {
        let mut lines = text.lines();
        let header: LogHeader = serde_json::from_str(
            lines.next().ok_or_else(|| Error::Format("empty training log".into()))?,
        )
        .map_err(|e| Error::Format(format!("log header: {e}")))?;
        if header.format != LOG_FORMAT {
            return Err(Error::Format(format!("unknown log format {}", header.format)));
        }
        let mut records = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let rec: EpochRecord =
                serde_json::from_str(line).map_err(|e| Error::Format(format!("log record: {e}")))?;
            if let Some(prev) = records.last() {
                let prev: &EpochRecord = prev;
                if rec.epoch <= prev.epoch {
                    return Err(Error::Format("non-monotone epoch indices in log".into()));
                }
            }
            records.push(rec);
        }
        Ok(TrainingLog {
            header,
            records,
            final_checkpoint: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_monotonicity() {
        let mut log = TrainingLog::new("abc".into(), "hallucinet", 50.0, 7);
        for epoch in 0..3 {
            log.records.push(EpochRecord {
                epoch,
                train_l_mt: 1.0 / (epoch + 1) as f64,
                train_l_hallu: 0.01,
                train_l_mtl: 0.0,
                val_l_mt: 0.9,
                val_l_hallu: 0.02,
                val_l_mtl: 0.0,
                metrics: [("val_top1".to_string(), 0.5)].into(),
                wall_secs: 0.1,
            });
        }
        let text = log.to_jsonl();
        let back = TrainingLog::parse(&text).unwrap();
        assert_eq!(back.records.len(), 3);
        assert_eq!(back.header.config_hash, "abc");

        let mut swapped = log.clone();
        swapped.records[2].epoch = 0;
        assert!(TrainingLog::parse(&swapped.to_jsonl()).is_err());
    }
}
