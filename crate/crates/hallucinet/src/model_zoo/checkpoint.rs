//! Checkpoint codec.
//!
//! Layout (little-endian): magic `HNCK`, version u16, model-kind u8
//! (1 teacher / 2 student / 3 aggregator), flags u8 (bit 0 = teacher
//! frozen), config blob (u32 length + JSON of the exact architecture
//! config), parameter count u32, then per parameter: name (u16 length +
//! UTF-8), dtype u8 (2 = f64), ndim u8, dims as u32 each, then the data.
//! Loading a checkpoint whose tensors disagree with its config is an error.

use super::{AggregatorConfig, SequenceAggregator, StudentConfig, StudentModel, TeacherConfig, TeacherModel};
use crate::error::{Error, Result};
use crate::nn::Params;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::ArrayD;
use std::collections::BTreeMap;
use std::io::{Cursor, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"HNCK";
const VERSION: u16 = 1;
const DTYPE_F64: u8 = 2;
const KIND_TEACHER: u8 = 1;
const KIND_STUDENT: u8 = 2;
const KIND_AGGREGATOR: u8 = 3;
const MAX_TENSOR_ELEMS: u64 = 1 << 26;
const MAX_CONFIG_BYTES: u32 = 1 << 20;

/// Borrowed model for saving.
pub enum CheckpointRef<'a> {
    Teacher(&'a TeacherModel),
    Student(&'a StudentModel),
    Aggregator(&'a SequenceAggregator),
}

/// Owned model produced by loading.
pub enum ModelCheckpoint {
    Teacher(TeacherModel),
    Student(StudentModel),
    Aggregator(SequenceAggregator),
}

impl ModelCheckpoint {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelCheckpoint::Teacher(_) => "teacher",
            ModelCheckpoint::Student(_) => "student",
            ModelCheckpoint::Aggregator(_) => "aggregator",
        }
    }
}

fn write_params(out: &mut Vec<u8>, model: &dyn Params) {
    let map = model.to_map();
    out.write_u32::<LittleEndian>(map.len() as u32).unwrap();
    for (name, tensor) in &map {
        out.write_u16::<LittleEndian>(name.len() as u16).unwrap();
        out.extend_from_slice(name.as_bytes());
        out.write_u8(DTYPE_F64).unwrap();
        out.write_u8(tensor.ndim() as u8).unwrap();
        for d in tensor.shape() {
            out.write_u32::<LittleEndian>(*d as u32).unwrap();
        }
        for v in tensor.iter() {
            out.write_f64::<LittleEndian>(*v).unwrap();
        }
    }
}

pub fn encode_checkpoint(model: &CheckpointRef<'_>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.write_u16::<LittleEndian>(VERSION).unwrap();
    let (kind, flags, config_json, params): (u8, u8, String, &dyn Params) = match model {
        CheckpointRef::Teacher(t) => (
            KIND_TEACHER,
            u8::from(t.frozen()),
            serde_json::to_string(&t.config).unwrap(),
            *t,
        ),
        CheckpointRef::Student(s) => (
            KIND_STUDENT,
            0,
            serde_json::to_string(&s.config).unwrap(),
            *s,
        ),
        CheckpointRef::Aggregator(a) => (
            KIND_AGGREGATOR,
            0,
            serde_json::to_string(&a.config).unwrap(),
            *a,
        ),
    };
    out.write_u8(kind).unwrap();
    out.write_u8(flags).unwrap();
    out.write_u32::<LittleEndian>(config_json.len() as u32).unwrap();
    out.extend_from_slice(config_json.as_bytes());
    write_params(&mut out, params);
    out
}

fn truncated(what: &str) -> Error {
    Error::Format(format!("checkpoint truncated at {what}"))
}

fn read_params(cur: &mut Cursor<&[u8]>) -> Result<BTreeMap<String, ArrayD<f64>>> {
    let count = cur.read_u32::<LittleEndian>().map_err(|_| truncated("param count"))?;
    if count > 4096 {
        return Err(Error::Format(format!("implausible parameter count {count}")));
    }
    let mut map = BTreeMap::new();
    for _ in 0..count {
        let name_len = cur.read_u16::<LittleEndian>().map_err(|_| truncated("name length"))?;
        let mut name_bytes = vec![0u8; name_len as usize];
        cur.read_exact(&mut name_bytes).map_err(|_| truncated("name"))?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| Error::Format("parameter name is not UTF-8".into()))?;
        let dtype = cur.read_u8().map_err(|_| truncated("dtype"))?;
        if dtype != DTYPE_F64 {
            return Err(Error::Format(format!("unsupported tensor dtype {dtype}")));
        }
        let ndim = cur.read_u8().map_err(|_| truncated("ndim"))?;
        if ndim == 0 || ndim > 8 {
            return Err(Error::Format(format!("implausible tensor rank {ndim}")));
        }
        let mut dims = Vec::with_capacity(ndim as usize);
        for _ in 0..ndim {
            dims.push(cur.read_u32::<LittleEndian>().map_err(|_| truncated("dims"))? as usize);
        }
        let n = dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d as u64));
        let n = match n {
            Some(n) if n <= MAX_TENSOR_ELEMS => n as usize,
            _ => return Err(Error::Format(format!("tensor {name} shape {dims:?} too large"))),
        };
        let available = cur.get_ref().len() - cur.position() as usize;
        if available < n * 8 {
            return Err(truncated(&format!("tensor {name} data")));
        }
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(cur.read_f64::<LittleEndian>().unwrap());
        }
        let tensor = ArrayD::from_shape_vec(ndarray::IxDyn(&dims), data)
            .map_err(|e| Error::Format(format!("tensor {name}: {e}")))?;
        if map.insert(name.clone(), tensor).is_some() {
            return Err(Error::Format(format!("duplicate tensor {name}")));
        }
    }
    Ok(map)
}

/// Decode a checkpoint from bytes; never panics on malformed input.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<ModelCheckpoint> {
    let mut cur = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic).map_err(|_| truncated("magic"))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad checkpoint magic (want HNCK)".into()));
    }
    let version = cur.read_u16::<LittleEndian>().map_err(|_| truncated("version"))?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let kind = cur.read_u8().map_err(|_| truncated("kind"))?;
    let flags = cur.read_u8().map_err(|_| truncated("flags"))?;
    let config_len = cur.read_u32::<LittleEndian>().map_err(|_| truncated("config length"))?;
    if config_len > MAX_CONFIG_BYTES {
        return Err(Error::Format("config blob too large".into()));
    }
    let mut config_bytes = vec![0u8; config_len as usize];
    cur.read_exact(&mut config_bytes).map_err(|_| truncated("config"))?;
    let params = read_params(&mut cur)?;

    let bad_config = |e: serde_json::Error| Error::Format(format!("checkpoint config: {e}"));
    match kind {
        KIND_TEACHER => {
            let config: TeacherConfig = serde_json::from_slice(&config_bytes).map_err(bad_config)?;
            let mut model = TeacherModel::new(config).map_err(|e| match e {
                Error::Config(m) => Error::Format(format!("checkpoint config: {m}")),
                other => other,
            })?;
            model.load_map(&params)?;
            model.set_frozen(flags & 1 != 0);
            Ok(ModelCheckpoint::Teacher(model))
        }
        KIND_STUDENT => {
            let config: StudentConfig = serde_json::from_slice(&config_bytes).map_err(bad_config)?;
            let mut model = StudentModel::new(config).map_err(|e| match e {
                Error::Config(m) => Error::Format(format!("checkpoint config: {m}")),
                other => other,
            })?;
            model.load_map(&params)?;
            Ok(ModelCheckpoint::Student(model))
        }
        KIND_AGGREGATOR => {
            let config: AggregatorConfig =
                serde_json::from_slice(&config_bytes).map_err(bad_config)?;
            let mut model = SequenceAggregator::new(config).map_err(|e| match e {
                Error::Config(m) => Error::Format(format!("checkpoint config: {m}")),
                other => other,
            })?;
            model.load_map(&params)?;
            Ok(ModelCheckpoint::Aggregator(model))
        }
        other => Err(Error::Format(format!("unknown model kind {other}"))),
    }
}

pub fn save_checkpoint(path: &Path, model: &CheckpointRef<'_>) -> Result<()> {
    let bytes = encode_checkpoint(model);
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelCheckpoint> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

/// Load a checkpoint that must be a teacher.
pub fn load_teacher(path: &Path) -> Result<TeacherModel> {
    match load_checkpoint(path)? {
        ModelCheckpoint::Teacher(t) => Ok(t),
        other => Err(Error::Format(format!(
            "expected a teacher checkpoint, found {}",
            other.kind_name()
        ))),
    }
}

/// Load a checkpoint that must be a student.
pub fn load_student(path: &Path) -> Result<StudentModel> {
    match load_checkpoint(path)? {
        ModelCheckpoint::Student(s) => Ok(s),
        other => Err(Error::Format(format!(
            "expected a student checkpoint, found {}",
            other.kind_name()
        ))),
    }
}
