//! Overlap-window planning and blending for long-video inference.
//!
//! A long pose sequence is cut into fixed-length windows advancing by a
//! stride; frames produced by more than one window are averaged.

use serde::{Deserialize, Serialize};

use crate::error::{BoxError, Error, Result};
use crate::pose::{PoseFrame, PoseSequence};
use crate::raster::Raster;

pub const DEFAULT_WINDOW: usize = 16;
pub const DEFAULT_STRIDE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub length: usize,
}

impl Window {
    pub fn end(&self) -> usize {
        self.start + self.length
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub total: usize,
    pub windows: Vec<Window>,
    /// Number of windows covering each frame.
    pub coverage: Vec<u32>,
}

/// Windows start at multiples of `stride`; the last one is pulled back to
/// `total - window` so it ends exactly at `total`. A sequence shorter than
/// `window` gets one window covering all of it.
pub fn plan_windows(total: usize, window: usize, stride: usize) -> Result<WindowPlan> {
    if total == 0 || window == 0 || stride == 0 {
        return Err(Error::InvalidArgument(format!(
            "total, window and stride must be positive (got {total}, {window}, {stride})"
        )));
    }
    if stride > window {
        return Err(Error::InvalidArgument(format!(
            "stride {stride} exceeds window {window}; frames would be skipped"
        )));
    }
    let length = window.min(total);
    let last_start = total - length;
    let mut starts: Vec<usize> = (0..=last_start).step_by(stride).collect();
    if *starts.last().expect("0 is always a start") != last_start {
        starts.push(last_start);
    }
    let windows: Vec<Window> = starts
        .into_iter()
        .map(|start| Window { start, length })
        .collect();
    let mut coverage = vec![0u32; total];
    for w in &windows {
        for c in &mut coverage[w.start..w.end()] {
            *c += 1;
        }
    }
    Ok(WindowPlan {
        total,
        windows,
        coverage,
    })
}

/// Averages window outputs frame by frame. `outputs[i]` belongs to
/// `plan.windows[i]`.
pub fn blend_windows(plan: &WindowPlan, outputs: &[Vec<Raster<f32>>]) -> Result<Vec<Raster<f32>>> {
    if outputs.len() != plan.windows.len() {
        return Err(Error::shape(
            format!("{} window outputs", plan.windows.len()),
            format!("{} window outputs", outputs.len()),
        ));
    }
    let pairs: Vec<(Window, &[Raster<f32>])> = plan
        .windows
        .iter()
        .copied()
        .zip(outputs.iter().map(Vec::as_slice))
        .collect();
    blend_window_outputs(plan.total, &pairs)
}

/// Blends `(window, frames)` pairs given in any order. Contributions to a
/// frame are summed in ascending window-start order, so the result does not
/// depend on the order of `pairs`. Frames covered once are passed through
/// untouched.
pub fn blend_window_outputs(
    total: usize,
    pairs: &[(Window, &[Raster<f32>])],
) -> Result<Vec<Raster<f32>>> {
    let mut sorted: Vec<&(Window, &[Raster<f32>])> = pairs.iter().collect();
    sorted.sort_by_key(|(w, _)| (w.start, w.length));

    let mut sums: Vec<Option<Raster<f32>>> = vec![None; total];
    let mut counts = vec![0u32; total];
    let mut reference: Option<&Raster<f32>> = None;
    for (i, (window, frames)) in sorted.iter().enumerate() {
        if frames.len() != window.length {
            return Err(Error::shape(
                format!("{} frames for window {i}", window.length),
                format!("{} frames", frames.len()),
            ));
        }
        if window.end() > total {
            return Err(Error::InvalidArgument(format!(
                "window {}..{} exceeds {total} frames",
                window.start,
                window.end()
            )));
        }
        for (offset, frame) in frames.iter().enumerate() {
            let r = *reference.get_or_insert(frame);
            if !r.same_shape(frame) {
                return Err(Error::shape(r.shape_string(), frame.shape_string()));
            }
            let t = window.start + offset;
            counts[t] += 1;
            match &mut sums[t] {
                None => sums[t] = Some(frame.clone()),
                Some(acc) => {
                    for (a, b) in acc.data_mut().iter_mut().zip(frame.data()) {
                        *a += b;
                    }
                }
            }
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(t, (sum, n))| {
            let mut frame =
                sum.ok_or_else(|| Error::InvalidArgument(format!("frame {t} is not covered")))?;
            if n > 1 {
                let n = n as f32;
                for v in frame.data_mut() {
                    *v /= n;
                }
            }
            Ok(frame)
        })
        .collect()
}

/// Plans windows over `pose`, calls `generator(window_index, frames)` once
/// per window in plan order, and blends the results.
pub fn run_windowed<E>(
    pose: &PoseSequence,
    window: usize,
    stride: usize,
    mut generator: impl FnMut(usize, &[PoseFrame]) -> std::result::Result<Vec<Raster<f32>>, E>,
) -> Result<Vec<Raster<f32>>>
where
    E: Into<BoxError>,
{
    let plan = plan_windows(pose.len(), window, stride)?;
    let mut outputs = Vec::with_capacity(plan.windows.len());
    for (i, w) in plan.windows.iter().enumerate() {
        let frames =
            generator(i, &pose.frames()[w.start..w.end()]).map_err(|e| Error::Generator {
                window: i,
                source: e.into(),
            })?;
        if frames.len() != w.length {
            return Err(Error::Generator {
                window: i,
                source: format!("expected {} frames, got {}", w.length, frames.len()).into(),
            });
        }
        outputs.push(frames);
    }
    blend_windows(&plan, &outputs)
}
