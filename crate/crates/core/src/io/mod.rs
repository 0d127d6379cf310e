//! Readers and writers for every interchange format.
//!
//! Custom binary formats (`CGFL`, `CGGM`, `CGFS`) start with a 4-byte magic
//! followed by little-endian `u32` dimensions and little-endian `f32`
//! payloads, row-major, top-left origin.

mod binary;
mod json;
mod pfm;
mod png;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use binary::{
    read_features, read_flow, read_guidance, write_features, write_flow, write_guidance,
    FEATURES_MAGIC, FLOW_MAGIC, GUIDANCE_MAGIC,
};
pub use json::{
    read_manifest, read_pose_file, read_rank_sidecar, write_json_atomic, FrameRanks, Manifest,
    ManifestEntry, RankSidecar,
};
pub use pfm::{read_pfm, read_pfm_depth, write_pfm, write_pfm_big_endian, PfmImage};
pub use png::{
    decode_depth_png16, decode_image, decode_mask_png, encode_image_png, encode_mask_png,
    encode_order_png, encode_rgb_png, ORDER_PALETTE,
};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("truncated data at byte offset {offset}: {needed} bytes required in total")]
    Truncated { offset: usize, needed: usize },

    #[error("non-finite value at byte offset {offset}")]
    NonFinite { offset: usize },

    #[error("invalid value at byte offset {offset}: {message}")]
    InvalidValue { offset: usize, message: String },

    #[error("malformed header: {0}")]
    Header(String),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl FormatError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Reads a whole file, attaching the path to any error.
pub fn read_file(path: &Path) -> Result<Vec<u8>, FormatError> {
    std::fs::read(path).map_err(|e| FormatError::io(path, e))
}

/// Writes `bytes` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    use std::io::Write;

    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| FormatError::io(dir, e))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| FormatError::io(tmp.path(), e))?;
    tmp.persist(path)
        .map_err(|e| FormatError::io(path, e.error))?;
    Ok(())
}
