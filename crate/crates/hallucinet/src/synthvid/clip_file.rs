//! Clip file codec.
//!
//! Layout (little-endian): magic `SVID`, version u16, dtype code u8
//! (1 = f32), shape as four u32 `[T, C, H, W]`, then row-major f32 data.

use crate::error::{Error, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array4;
use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"SVID";
const VERSION: u16 = 1;
const DTYPE_F32: u8 = 1;
/// Upper bound on element count accepted when decoding (256 Mi elements);
/// rejects absurd shapes before allocating.
const MAX_ELEMS: u64 = 1 << 28;

pub fn encode_clip(frames: &Array4<f32>) -> Vec<u8> {
    let dims = frames.shape();
    let mut out = Vec::with_capacity(15 + frames.len() * 4);
    out.extend_from_slice(MAGIC);
    out.write_u16::<LittleEndian>(VERSION).unwrap();
    out.write_u8(DTYPE_F32).unwrap();
    for d in dims {
        out.write_u32::<LittleEndian>(*d as u32).unwrap();
    }
    for v in frames.iter() {
        out.write_f32::<LittleEndian>(*v).unwrap();
    }
    out
}

/// Decode a clip from bytes. Tolerates no format deviations; never panics on
/// malformed input.
pub fn decode_clip(bytes: &[u8]) -> Result<Array4<f32>> {
    let mut cur = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    cur.read_exact(&mut magic)
        .map_err(|_| Error::Format("clip file truncated before magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad clip magic (want SVID)".into()));
    }
    let version = cur
        .read_u16::<LittleEndian>()
        .map_err(|_| Error::Format("clip file truncated at version".into()))?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported clip version {version}")));
    }
    let dtype = cur
        .read_u8()
        .map_err(|_| Error::Format("clip file truncated at dtype".into()))?;
    if dtype != DTYPE_F32 {
        return Err(Error::Format(format!("unsupported clip dtype code {dtype}")));
    }
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = cur
            .read_u32::<LittleEndian>()
            .map_err(|_| Error::Format("clip file truncated in shape".into()))? as usize;
    }
    let n = dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d as u64));
    let n = match n {
        Some(n) if n <= MAX_ELEMS => n as usize,
        _ => return Err(Error::Format(format!("clip shape {dims:?} too large"))),
    };
    let remaining = bytes.len() - cur.position() as usize;
    if remaining != n * 4 {
        return Err(Error::Format(format!(
            "clip data length {remaining} does not match shape {dims:?}"
        )));
    }
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        data.push(cur.read_f32::<LittleEndian>().unwrap());
    }
    Array4::from_shape_vec((dims[0], dims[1], dims[2], dims[3]), data)
        .map_err(|e| Error::Format(format!("clip shape error: {e}")))
}

pub fn write_clip_file(path: &Path, frames: &Array4<f32>) -> Result<()> {
    let bytes = encode_clip(frames);
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Read raw frames from a clip file.
pub fn read_clip_frames(path: &Path) -> Result<Array4<f32>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_clip(&bytes)
}

/// Read a clip file and attach labels from a manifest record.
pub fn read_clip_file(path: &Path, record: &super::ManifestRecord) -> Result<super::VideoClip> {
    let frames = read_clip_frames(path)?;
    Ok(super::VideoClip {
        frames,
        class_id: record.class_id,
        attributes: record.attributes,
        quality: record.quality,
        clip_id: record.clip_id.clone(),
        seed: record.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let frames = Array4::from_shape_fn((2, 1, 3, 4), |(t, _, y, x)| {
            (t * 100 + y * 10 + x) as f32 / 250.0
        });
        let bytes = encode_clip(&frames);
        let back = decode_clip(&bytes).unwrap();
        assert_eq!(frames, back);
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(decode_clip(b"").is_err());
        assert!(decode_clip(b"SVIDxxxxx").is_err());
        let frames = Array4::zeros((1, 1, 2, 2));
        let mut bytes = encode_clip(&frames);
        bytes[4] = 9; // version
        assert!(decode_clip(&bytes).is_err());
        let mut truncated = encode_clip(&frames);
        truncated.pop();
        assert!(decode_clip(&truncated).is_err());
        // absurd shape
        let mut huge = encode_clip(&frames);
        huge[7..11].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_clip(&huge).is_err());
    }
}
