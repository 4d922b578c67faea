//! Raw `SDFV` signed distance volumes.

use std::path::Path;

use peps_core::signals::SdfVolume;

use crate::error::{read, write, Error, Result};

/// File magic.
pub const VOLUME_MAGIC: [u8; 4] = *b"SDFV";
/// Version written by [`save_volume`].
pub const VOLUME_VERSION: u32 = 1;
const HEADER: usize = 16;

/// Read a volume: 16-byte header (magic, version, `N`, reserved) and `N^3` `f32` values, little endian.
pub fn load_volume(path: &Path) -> Result<SdfVolume> {
    let bytes = read(path)?;
    decode_volume(&bytes).map_err(|e| Error::in_file(path, e))
}

pub fn save_volume(path: &Path, vol: &SdfVolume) -> Result<()> {
    write(path, &encode_volume(vol))
}

fn format_err(offset: usize, reason: impl Into<String>) -> peps_core::Error {
    peps_core::Error::Format {
        offset,
        reason: reason.into(),
    }
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn decode_volume(bytes: &[u8]) -> peps_core::Result<SdfVolume> {
    if bytes.len() < HEADER {
        return Err(format_err(bytes.len(), format!("header needs {HEADER} bytes, file has {}", bytes.len())));
    }
    if bytes[..4] != VOLUME_MAGIC {
        return Err(format_err(0, "bad magic, not an SDFV volume"));
    }
    match u32_at(bytes, 4) {
        0 => return Err(format_err(4, "version 0 is not a valid volume version")),
        VOLUME_VERSION => {}
        found => {
            return Err(peps_core::Error::UnsupportedVersion {
                found,
                expected: VOLUME_VERSION,
            })
        }
    }
    let n = u32_at(bytes, 8) as usize;
    let payload = &bytes[HEADER..];
    let expected = n.checked_pow(3).and_then(|c| c.checked_mul(4));
    if n == 0 || expected != Some(payload.len()) {
        return Err(format_err(
            8,
            format!("header says N = {n} but the payload holds {} bytes", payload.len()),
        ));
    }
    let mut values = Vec::with_capacity(n * n * n);
    for (i, c) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(c.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(format_err(HEADER + 4 * i, format!("non-finite distance {v}")));
        }
        values.push(f64::from(v));
    }
    SdfVolume::new(n, values)
}

/// Values are written as `f32`.
pub fn encode_volume(vol: &SdfVolume) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 4 * vol.values().len());
    out.extend_from_slice(&VOLUME_MAGIC);
    out.extend_from_slice(&VOLUME_VERSION.to_le_bytes());
    out.extend_from_slice(&(vol.resolution() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for &v in vol.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}
