//! Skeletal dilation maps: a character's rendered skeleton, grown by a
//! Euclidean disk, used as a rough character-region mask.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pose::{skeleton_coverage, CharacterPose, PoseFrame, RenderParams, SkeletonTopology};
use crate::raster::{mask_union, BinaryMask};

pub const DEFAULT_RADIUS_FRACTION: f64 = 0.06;
pub const DEFAULT_RADIUS_FLOOR: f64 = 3.0;

/// Radius of the disk structuring element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DilationRadius {
    /// `max(fraction * diagonal, floor)` where the diagonal is that of the
    /// bounding box of the character's visible joints.
    BoundingBoxFraction { fraction: f64, floor: f64 },
    /// Fixed radius in pixels.
    Fixed { pixels: f64 },
}

impl Default for DilationRadius {
    fn default() -> Self {
        DilationRadius::BoundingBoxFraction {
            fraction: DEFAULT_RADIUS_FRACTION,
            floor: DEFAULT_RADIUS_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DilationParams {
    pub stroke: RenderParams,
    pub radius: DilationRadius,
}

impl DilationParams {
    pub fn with_fixed_radius(pixels: f64) -> Self {
        DilationParams {
            radius: DilationRadius::Fixed { pixels },
            ..Default::default()
        }
    }

    /// Radius in pixels for `character`, or `None` if it has no visible joint.
    pub fn radius_for(&self, character: &CharacterPose) -> Option<f64> {
        let (x0, y0, x1, y1) = character.visible_bounds(self.stroke.confidence_threshold)?;
        Some(match self.radius {
            DilationRadius::Fixed { pixels } => pixels,
            DilationRadius::BoundingBoxFraction { fraction, floor } => {
                (fraction * (x1 - x0).hypot(y1 - y0)).max(floor)
            }
        })
    }
}

/// A character's dilation map.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterMask {
    pub character_id: u32,
    pub mask: BinaryMask,
    /// Set when the character had no joint above the confidence threshold;
    /// the mask is then empty.
    pub degenerate: bool,
}

const FAR: f64 = 1e20;

/// Lower envelope of parabolas rooted at `f` (Felzenszwalb & Huttenlocher),
/// written into `out`. `v`/`z` are scratch buffers of length `n` / `n + 1`.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let intersect = |q: usize, p: usize| {
        let (qf, pf) = (q as f64, p as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf)
    };
    for q in 1..n {
        // z[0] is -inf, so k never underflows.
        let mut s = intersect(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance from every pixel to the nearest set pixel.
/// Values are `>= 1e20` when the mask is empty.
pub fn squared_distance_to_mask(mask: &BinaryMask) -> Vec<f64> {
    let (w, h) = (mask.width(), mask.height());
    let n = w.max(h);
    let mut v = vec![0usize; n];
    let mut z = vec![0f64; n + 1];
    let mut col_in = vec![0f64; h];
    let mut col_out = vec![0f64; h];
    let mut dist = vec![0f64; w * h];

    for x in 0..w {
        for (y, c) in col_in.iter_mut().enumerate() {
            *c = if mask.get(x, y) { 0.0 } else { FAR };
        }
        edt_1d(&col_in, &mut col_out, &mut v, &mut z);
        for (y, &d) in col_out.iter().enumerate() {
            dist[y * w + x] = d;
        }
    }
    let mut row_out = vec![0f64; w];
    for y in 0..h {
        let row = &dist[y * w..(y + 1) * w];
        edt_1d(row, &mut row_out, &mut v, &mut z);
        dist[y * w..(y + 1) * w].copy_from_slice(&row_out);
    }
    dist
}

/// Morphological dilation by a Euclidean disk of `radius` pixels: a pixel is
/// set iff some set pixel lies within distance `radius`.
pub fn dilate_disk(mask: &BinaryMask, radius: f64) -> BinaryMask {
    if radius < 1.0 {
        // Only the zero offset fits in the structuring element.
        return mask.clone();
    }
    let r2 = radius * radius;
    let dist = squared_distance_to_mask(mask);
    let mut out = mask.clone();
    for (o, &d) in out.bits_mut().iter_mut().zip(&dist) {
        *o = (d <= r2) as u8;
    }
    out
}

/// Dilation map of one character on a `width`×`height` raster.
pub fn skeletal_dilation(
    character: &CharacterPose,
    topology: &SkeletonTopology,
    width: usize,
    height: usize,
    params: &DilationParams,
) -> Result<CharacterMask> {
    let Some(radius) = params.radius_for(character) else {
        log::warn!(
            "character {} has no joint above confidence {}; dilation map is empty",
            character.character_id,
            params.stroke.confidence_threshold
        );
        return Ok(CharacterMask {
            character_id: character.character_id,
            mask: BinaryMask::empty(width, height)?,
            degenerate: true,
        });
    };
    let skeleton = skeleton_coverage(character, topology, &params.stroke, width, height)?;
    Ok(CharacterMask {
        character_id: character.character_id,
        mask: dilate_disk(&skeleton, radius),
        degenerate: false,
    })
}

/// One dilation map per character, in frame order.
pub fn frame_dilation_maps(
    frame: &PoseFrame,
    topology: &SkeletonTopology,
    params: &DilationParams,
) -> Result<Vec<CharacterMask>> {
    frame
        .characters
        .iter()
        .map(|c| skeletal_dilation(c, topology, frame.width, frame.height, params))
        .collect()
}

/// Union of every character's dilation map in `frame`; empty when the frame
/// has no characters. This is the character region excluded from flow.
pub fn frame_character_mask(
    frame: &PoseFrame,
    topology: &SkeletonTopology,
    params: &DilationParams,
) -> Result<BinaryMask> {
    let maps: Vec<BinaryMask> = frame_dilation_maps(frame, topology, params)?
        .into_iter()
        .map(|m| m.mask)
        .collect();
    if maps.is_empty() {
        return BinaryMask::empty(frame.width, frame.height);
    }
    mask_union(&maps)
}
