//! Content hashing for configs and parameter stores.

use sha2::{Digest, Sha256};

/// Hex SHA-256 of arbitrary bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Short (16 hex chars) hash used in provenance headers and manifests.
pub fn short_hash(bytes: &[u8]) -> String {
    sha256_hex(bytes)[..16].to_string()
}

/// Incremental hasher for parameter checksums.
pub struct Hasher(Sha256);

impl Hasher {
    pub fn new() -> Self {
        Hasher(Sha256::new())
    }

    pub fn update(&mut self, bytes: &[u8]) {
        self.0.update(bytes);
    }

    pub fn update_f64s<'a>(&mut self, values: impl Iterator<Item = &'a f64>) {
        for v in values {
            self.0.update(v.to_le_bytes());
        }
    }

    pub fn finish_hex(self) -> String {
        let out = self.0.finalize();
        let mut s = String::with_capacity(64);
        for b in out {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}

impl Default for Hasher {
    fn default() -> Self {
        Self::new()
    }
}
