//! Background optical-flow guidance maps.
//!
//! Character regions (the union of skeletal dilation maps) are replaced by a
//! constant sentinel so that only background momentum reaches the guider. At
//! inference the background momentum is zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, FlowField, Raster};

/// Value written into both flow channels inside character regions.
pub const CHARACTER_SENTINEL: f32 = 1.0;

/// Background flow means below this are visually static.
pub const STABLE_FLOW_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockMatchParams {
    /// Block edge length in pixels.
    pub block: usize,
    /// Maximum displacement searched along each axis, in pixels.
    pub search: usize,
}

impl Default for BlockMatchParams {
    fn default() -> Self {
        BlockMatchParams {
            block: 8,
            search: 4,
        }
    }
}

/// Orders candidates: lower SAD, then smaller |d|², then lexicographic (u, v).
fn better(candidate: (f64, i64, i64), best: (f64, i64, i64)) -> bool {
    let key = |(sad, u, v): (f64, i64, i64)| (sad, u * u + v * v, u, v);
    let (a, b) = (key(candidate), key(best));
    a.0 < b.0 || (a.0 == b.0 && (a.1, a.2, a.3) < (b.1, b.2, b.3))
}

/// Exhaustive block-matching motion estimation.
///
/// The frame is tiled into `block`×`block` tiles (the last row and column of
/// tiles may be narrower). For each tile of `curr` the displacement `(u, v)`
/// with `|u|, |v| <= search` minimizing the sum of absolute differences
/// `|curr(x, y) - prev(x - u, y - v)|` over all channels is chosen; candidates
/// reaching outside `prev` are skipped. The tile's vector is replicated to
/// every pixel in it.
pub fn estimate_flow_blockmatch(
    prev: &Raster<f32>,
    curr: &Raster<f32>,
    params: &BlockMatchParams,
) -> Result<FlowField> {
    if !prev.same_shape(curr) {
        return Err(Error::shape(prev.shape_string(), curr.shape_string()));
    }
    if params.block == 0 {
        return Err(Error::InvalidArgument("block size must be positive".into()));
    }
    let (w, h, ch) = (curr.width(), curr.height(), curr.channels());
    if w < params.block || h < params.block {
        return Err(Error::InvalidArgument(format!(
            "frame {w}x{h} is smaller than one {0}x{0} block",
            params.block
        )));
    }
    let search = params.search as i64;
    let (pd, cd) = (prev.data(), curr.data());
    let mut out = vec![0f32; w * h * 2];

    for by in (0..h).step_by(params.block) {
        let bh = params.block.min(h - by);
        for bx in (0..w).step_by(params.block) {
            let bw = params.block.min(w - bx);
            let mut best: Option<(f64, i64, i64)> = None;
            for v in -search..=search {
                let sy = by as i64 - v;
                if sy < 0 || sy + bh as i64 > h as i64 {
                    continue;
                }
                for u in -search..=search {
                    let sx = bx as i64 - u;
                    if sx < 0 || sx + bw as i64 > w as i64 {
                        continue;
                    }
                    let mut sad = 0f64;
                    for row in 0..bh {
                        let c0 = ((by + row) * w + bx) * ch;
                        let p0 = ((sy as usize + row) * w + sx as usize) * ch;
                        for (a, b) in cd[c0..c0 + bw * ch].iter().zip(&pd[p0..p0 + bw * ch]) {
                            sad += (a - b).abs() as f64;
                        }
                    }
                    let cand = (sad, u, v);
                    if best.is_none_or(|b| better(cand, b)) {
                        best = Some(cand);
                    }
                }
            }
            // The zero displacement is always in bounds.
            let (_, u, v) = best.expect("zero displacement is a candidate");
            for y in by..by + bh {
                for x in bx..bx + bw {
                    let i = (y * w + x) * 2;
                    out[i] = u as f32;
                    out[i + 1] = v as f32;
                }
            }
        }
    }
    FlowField::new(Raster::new(w, h, 2, out)?)
}

/// Two-channel guidance map plus the character mask it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGuidanceMap {
    map: Raster<f32>,
    mask: BinaryMask,
}

impl FlowGuidanceMap {
    /// Reassembles a map read from disk, checking the sentinel invariant.
    pub fn from_parts(map: Raster<f32>, mask: BinaryMask) -> Result<Self> {
        if map.channels() != 2 || map.width() != mask.width() || map.height() != mask.height() {
            return Err(Error::shape(
                format!("{}x{}x2", mask.width(), mask.height()),
                map.shape_string(),
            ));
        }
        for (i, (px, &m)) in map.data().chunks_exact(2).zip(mask.bits()).enumerate() {
            if px.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("pixel {i} is not finite")));
            }
            if m == 1 && px != [CHARACTER_SENTINEL; 2] {
                return Err(Error::InvalidArgument(format!(
                    "masked pixel {i} does not carry the sentinel"
                )));
            }
        }
        Ok(FlowGuidanceMap { map, mask })
    }

    pub fn map(&self) -> &Raster<f32> {
        &self.map
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.mask
    }

    pub fn width(&self) -> usize {
        self.map.width()
    }

    pub fn height(&self) -> usize {
        self.map.height()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let p = self.map.pixel(x, y);
        (p[0], p[1])
    }
}

/// Training-time map: background keeps the estimated flow, character pixels
/// become `(1.0, 1.0)`.
pub fn flow_guidance_training(
    flow: &FlowField,
    character_mask: &BinaryMask,
) -> Result<FlowGuidanceMap> {
    if flow.width() != character_mask.width() || flow.height() != character_mask.height() {
        return Err(Error::shape(
            format!("{}x{}", flow.width(), flow.height()),
            format!("{}x{}", character_mask.width(), character_mask.height()),
        ));
    }
    let data = flow
        .raster()
        .data()
        .chunks_exact(2)
        .zip(character_mask.bits())
        .flat_map(|(px, &m)| {
            if m == 1 {
                [CHARACTER_SENTINEL; 2]
            } else {
                [px[0], px[1]]
            }
        })
        .collect();
    Ok(FlowGuidanceMap {
        map: Raster::new(flow.width(), flow.height(), 2, data)?,
        mask: character_mask.clone(),
    })
}

/// Inference-time map: zero background momentum, sentinel on characters.
pub fn flow_guidance_inference(character_mask: &BinaryMask) -> Result<FlowGuidanceMap> {
    let zero = FlowField::zeros(character_mask.width(), character_mask.height())?;
    flow_guidance_training(&zero, character_mask)
}

/// Mean Euclidean flow magnitude over pixels outside `character_mask`.
pub fn background_flow_mean(flow: &FlowField, character_mask: &BinaryMask) -> Result<f64> {
    if flow.width() != character_mask.width() || flow.height() != character_mask.height() {
        return Err(Error::shape(
            format!("{}x{}", flow.width(), flow.height()),
            format!("{}x{}", character_mask.width(), character_mask.height()),
        ));
    }
    let (sum, count) = flow
        .raster()
        .data()
        .chunks_exact(2)
        .zip(character_mask.bits())
        .filter(|(_, &m)| m == 0)
        .fold((0f64, 0usize), |(s, n), (px, _)| {
            (s + (px[0] as f64).hypot(px[1] as f64), n + 1)
        });
    if count == 0 {
        return Err(Error::UndefinedStatistic(
            "character mask covers every pixel; no background to average".into(),
        ));
    }
    Ok(sum / count as f64)
}
