use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_file, write_atomic, FormatError};
use crate::depth_order::CharacterRank;
use crate::error::Result;
use crate::pose::PoseSequence;

pub fn read_pose_file(path: &Path) -> Result<PoseSequence> {
    PoseSequence::parse(&read_file(path)?)
}

/// Pretty-printed JSON with a trailing newline, written atomically.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRanks {
    pub frame: usize,
    pub ranks: Vec<CharacterRank>,
}

/// Per-frame ranks, mean depths and level values written beside depth-order
/// maps. Also the input format for reference ranks at inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSidecar {
    pub frames: Vec<FrameRanks>,
}

pub fn read_rank_sidecar(path: &Path) -> Result<RankSidecar, FormatError> {
    Ok(serde_json::from_slice(&read_file(path)?)?)
}

/// One clip in an analysis manifest. `clip` is a directory of PNG frames or
/// of CGFL flow files; relative paths resolve against the manifest's folder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(default)]
    pub id: Option<String>,
    pub clip: PathBuf,
    pub pose: PathBuf,
}

impl ManifestEntry {
    /// Explicit id, or the clip directory's final component.
    pub fn clip_id(&self) -> String {
        self.id.clone().unwrap_or_else(|| {
            self.clip
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.clip.display().to_string())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Manifest {
    pub clips: Vec<ManifestEntry>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest, FormatError> {
    let mut manifest: Manifest = serde_json::from_slice(&read_file(path)?)?;
    let base = path.parent().unwrap_or(Path::new(""));
    for e in &mut manifest.clips {
        if e.clip.is_relative() {
            e.clip = base.join(&e.clip);
        }
        if e.pose.is_relative() {
            e.pose = base.join(&e.pose);
        }
    }
    Ok(manifest)
}
