//! Reading inputs and writing outputs with CLI-flavored errors.

use std::path::{Path, PathBuf};

use condguide::io::{decode_depth_png16, decode_image, read_file, read_pfm_depth, write_atomic};
use condguide::pose::PoseSequence;
use condguide::{DepthConvention, DepthRaster, Raster};

use crate::error::{CliError, CliResult};

/// Files in `dir` whose extension matches one of `extensions`
/// (case-insensitive), sorted by file name.
pub fn list_files(dir: &Path, extensions: &[&str]) -> CliResult<Vec<PathBuf>> {
    let entries =
        std::fs::read_dir(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?
            .path();
        let matches = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| extensions.iter().any(|x| x.eq_ignore_ascii_case(e)));
        if matches && path.is_file() {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Explicit clip id, or the pose file's stem.
pub fn clip_id(explicit: Option<&str>, pose: &Path) -> String {
    explicit.map(str::to_owned).unwrap_or_else(|| {
        pose.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "clip".to_owned())
    })
}

pub fn load_pose(path: &Path) -> CliResult<PoseSequence> {
    condguide::io::read_pose_file(path).map_err(|e| CliError::from(e).context_if_data(path))
}

pub fn load_image(path: &Path) -> CliResult<Raster<f32>> {
    decode_image(&read_file(path)?).map_err(|e| CliError::from(e).context_if_data(path))
}

/// Depth from a `.pfm` file or a 16-bit `.png` scaled by `png_scale`.
pub fn load_depth(
    path: &Path,
    convention: DepthConvention,
    png_scale: f32,
) -> CliResult<DepthRaster> {
    let bytes = read_file(path)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase();
    let depth = match ext.as_str() {
        "pfm" => read_pfm_depth(&bytes, convention),
        "png" => decode_depth_png16(&bytes, png_scale, convention),
        _ => {
            return Err(CliError::usage(format!(
                "{}: depth files must be .pfm or .png",
                path.display()
            )))
        }
    };
    depth.map_err(|e| CliError::from(e).context_if_data(path))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))
}

pub fn write_output(path: &Path, bytes: &[u8]) -> CliResult<()> {
    write_atomic(path, bytes)?;
    Ok(())
}

impl CliError {
    /// Data errors get the offending path prepended; I/O errors already carry it.
    pub fn context_if_data(self, path: &Path) -> Self {
        match self.category {
            crate::error::Category::Io => self,
            _ => self.context(path.display()),
        }
    }
}
