//! Binary field snapshots (`.gspc`).
//!
//! Layout, all little-endian:
//!
//! | bytes  | content                     |
//! |--------|-----------------------------|
//! | 0..4   | magic `GSPC`                |
//! | 4..8   | format version (`u32`)      |
//! | 8..12  | `n1` (`u32`)                |
//! | 12..16 | `n2` (`u32`)                |
//! | 16..24 | coefficient count (`u64`)   |
//! | 24..32 | reserved, zero              |
//! | 32..   | `count` × `f64` coefficients |
//!
//! Coefficients cover every slot of the mode box in canonical order
//! (lexicographic in `(l1, l2)`). A JSON sidecar `<file>.json` lists that
//! order together with the admissibility flag of each slot.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ModeIndex, SpectralField, Truncation};
use crate::fsutil::write_atomic;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GSPC";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SidecarMode {
    pub l1: i32,
    pub l2: i32,
    pub admissible: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Sidecar {
    pub format: String,
    pub version: u32,
    pub n1: usize,
    pub n2: usize,
    pub order: String,
    pub modes: Vec<SidecarMode>,
}

impl Sidecar {
    pub fn for_truncation(trunc: &Truncation) -> Self {
        Self {
            format: "gspc".into(),
            version: VERSION,
            n1: trunc.n1,
            n2: trunc.n2,
            order: "lexicographic (l1 ascending, then l2 ascending); all slots".into(),
            modes: trunc
                .all_modes()
                .map(|m: ModeIndex| SidecarMode {
                    l1: m.l1,
                    l2: m.l2,
                    admissible: m.is_admissible(),
                })
                .collect(),
        }
    }
}

pub fn encode(u: &SpectralField) -> Vec<u8> {
    let values = u.to_flat();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(u.trunc().n1 as u32).to_le_bytes());
    out.extend_from_slice(&(u.trunc().n2 as u32).to_le_bytes());
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    out.extend_from_slice(&0u64.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decode a snapshot. The result uses the default collocation grid for its
/// mode box; call [`SpectralField::regrid`] to move it elsewhere.
pub fn decode(bytes: &[u8]) -> Result<SpectralField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic, not a GSPC snapshot".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported snapshot version {version} (expected {VERSION})"
        )));
    }
    let (n1, n2, count) = (u32_at(8) as usize, u32_at(12) as usize, u64_at(16) as usize);
    let trunc = Truncation::new(n1, n2)?;
    if count != trunc.slots() {
        return Err(Error::Format(format!(
            "header count {count} does not match (n1={n1}, n2={n2}) with {} slots",
            trunc.slots()
        )));
    }
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != 8 * count {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            8 * count
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    SpectralField::from_flat(trunc, &values)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write the snapshot and its sidecar atomically.
pub fn write(path: &Path, u: &SpectralField) -> Result<()> {
    write_atomic(path, &encode(u))?;
    let sidecar = serde_json::to_vec_pretty(&Sidecar::for_truncation(u.trunc()))?;
    write_atomic(&sidecar_path(path), &sidecar)
}

pub fn read(path: &Path) -> Result<SpectralField> {
    decode(&std::fs::read(path)?)
}
