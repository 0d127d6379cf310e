//! Depth-order maps.
//!
//! Each character's dilation map is split into the part no other character
//! touches; the mean depth over that part ranks the characters front to
//! back. Full dilation maps are then painted back to front with evenly
//! spaced level values, so overlaps belong to the frontmost character.

use serde::{Deserialize, Serialize};

use crate::dilation::{frame_dilation_maps, CharacterMask, DilationParams};
use crate::error::{Error, Result};
use crate::pose::{PoseFrame, SkeletonTopology};
use crate::raster::{BinaryMask, DepthConvention, DepthRaster, Raster};

/// What to do when a character has no unoccluded pixels to sample depth from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OcclusionFallback {
    #[default]
    Error,
    /// Rank fully occluded characters behind all others (by id among themselves).
    RankBehind,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DepthOrderParams {
    pub dilation: DilationParams,
    pub fallback: OcclusionFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterRank {
    pub character_id: u32,
    /// Mean depth over the non-intersection region; `None` for characters
    /// placed by [`OcclusionFallback::RankBehind`].
    pub mean_depth: Option<f64>,
    /// 1 is frontmost.
    pub rank: usize,
    pub level_value: f32,
}

/// `(J - rank + 1) / J`.
pub fn level_value(rank: usize, count: usize) -> f32 {
    ((count - rank + 1) as f64 / count as f64) as f32
}

/// Single-channel map: 0 on background, the owning character's level value
/// elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthOrderMap {
    pub map: Raster<f32>,
    pub ranks: Vec<CharacterRank>,
}

/// `m_j = a_j AND NOT (OR of a_k, k != j)`; the outputs are pairwise disjoint.
pub fn non_intersection_regions(dilation_maps: &[BinaryMask]) -> Result<Vec<BinaryMask>> {
    let first = dilation_maps
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one dilation map is required".into()))?;
    let mut coverage = vec![0u32; first.width() * first.height()];
    for m in dilation_maps {
        if !m.same_extent(first) {
            return Err(Error::shape(
                format!("{}x{}", first.width(), first.height()),
                format!("{}x{}", m.width(), m.height()),
            ));
        }
        for (c, &b) in coverage.iter_mut().zip(m.bits()) {
            *c += b as u32;
        }
    }
    dilation_maps
        .iter()
        .map(|m| {
            let bits: Vec<bool> = m
                .bits()
                .iter()
                .zip(&coverage)
                .map(|(&b, &c)| b == 1 && c == 1)
                .collect();
            BinaryMask::from_bools(m.width(), m.height(), &bits)
        })
        .collect()
}

/// Ranks characters by mean depth over their regions. `regions[i]` belongs to
/// `character_ids[i]`. Ties go to the lower character id.
pub fn rank_by_depth(
    character_ids: &[u32],
    regions: &[BinaryMask],
    depth: &DepthRaster,
    fallback: OcclusionFallback,
) -> Result<Vec<CharacterRank>> {
    if character_ids.len() != regions.len() {
        return Err(Error::shape(
            format!("{} regions", character_ids.len()),
            format!("{} regions", regions.len()),
        ));
    }
    let mut measured = Vec::new();
    let mut occluded = Vec::new();
    for (&id, region) in character_ids.iter().zip(regions) {
        if region.width() != depth.width() || region.height() != depth.height() {
            return Err(Error::shape(
                format!("{}x{}", depth.width(), depth.height()),
                format!("{}x{}", region.width(), region.height()),
            ));
        }
        let (sum, n) = region
            .bits()
            .iter()
            .zip(depth.raster().data())
            .filter(|(&b, _)| b == 1)
            .fold((0f64, 0usize), |(s, n), (_, &d)| (s + d as f64, n + 1));
        if n == 0 {
            match fallback {
                OcclusionFallback::Error => {
                    return Err(Error::DegenerateRegion { character_id: id })
                }
                OcclusionFallback::RankBehind => occluded.push(id),
            }
        } else {
            measured.push((id, sum / n as f64));
        }
    }
    let convention = depth.convention();
    measured.sort_by(|a, b| {
        let nearer_first = match convention {
            DepthConvention::LargerIsCloser => b.1.total_cmp(&a.1),
            DepthConvention::SmallerIsCloser => a.1.total_cmp(&b.1),
        };
        nearer_first.then(a.0.cmp(&b.0))
    });
    occluded.sort_unstable();

    let count = character_ids.len();
    let ranks = measured
        .into_iter()
        .map(|(id, mean)| (id, Some(mean)))
        .chain(occluded.into_iter().map(|id| (id, None)))
        .enumerate()
        .map(|(i, (character_id, mean_depth))| CharacterRank {
            character_id,
            mean_depth,
            rank: i + 1,
            level_value: level_value(i + 1, count),
        })
        .collect();
    Ok(ranks)
}

/// Painter's algorithm over full dilation maps: ranks are painted from the
/// back (rank J) to the front (rank 1), each step computing
/// `out = a_j * L_j + (1 - a_j) * out`.
pub fn compose_order_map(
    dilation_maps: &[CharacterMask],
    ranks: &[CharacterRank],
    width: usize,
    height: usize,
) -> Result<DepthOrderMap> {
    let mut order: Vec<(&CharacterMask, &CharacterRank)> = dilation_maps
        .iter()
        .map(|m| {
            ranks
                .iter()
                .find(|r| r.character_id == m.character_id)
                .map(|r| (m, r))
                .ok_or(Error::IdentityMismatch {
                    character_id: m.character_id,
                })
        })
        .collect::<Result<_>>()?;
    order.sort_by_key(|o| std::cmp::Reverse(o.1.rank));

    let mut out = Raster::filled(width, height, 1, 0f32)?;
    let data = out.data_mut();
    for (m, r) in order {
        if m.mask.width() != width || m.mask.height() != height {
            return Err(Error::shape(
                format!("{width}x{height}"),
                format!("{}x{}", m.mask.width(), m.mask.height()),
            ));
        }
        for (o, &b) in data.iter_mut().zip(m.mask.bits()) {
            if b == 1 {
                *o = r.level_value;
            }
        }
    }
    Ok(DepthOrderMap {
        map: out,
        ranks: ranks.to_vec(),
    })
}

/// Ranks computed from a frame's own depth, as used for training and for
/// the reference image at inference.
pub fn frame_ranks(
    masks: &[CharacterMask],
    depth: &DepthRaster,
    fallback: OcclusionFallback,
) -> Result<Vec<CharacterRank>> {
    if masks.is_empty() {
        return Ok(Vec::new());
    }
    let ids: Vec<u32> = masks.iter().map(|m| m.character_id).collect();
    let full: Vec<BinaryMask> = masks.iter().map(|m| m.mask.clone()).collect();
    let regions = non_intersection_regions(&full)?;
    rank_by_depth(&ids, &regions, depth, fallback)
}

/// Depth-order map of a training frame from its own depth raster.
pub fn depth_order_training(
    frame: &PoseFrame,
    topology: &SkeletonTopology,
    depth: &DepthRaster,
    params: &DepthOrderParams,
) -> Result<DepthOrderMap> {
    if depth.width() != frame.width || depth.height() != frame.height {
        return Err(Error::shape(
            format!("{}x{}", frame.width, frame.height),
            format!("{}x{}", depth.width(), depth.height()),
        ));
    }
    let masks = frame_dilation_maps(frame, topology, &params.dilation)?;
    let ranks = frame_ranks(&masks, depth, params.fallback)?;
    compose_order_map(&masks, &ranks, frame.width, frame.height)
}

/// Ranks of the reference image, computed once and reused for every frame.
pub fn reference_ranks(
    reference: &PoseFrame,
    topology: &SkeletonTopology,
    depth: &DepthRaster,
    params: &DepthOrderParams,
) -> Result<Vec<CharacterRank>> {
    Ok(depth_order_training(reference, topology, depth, params)?.ranks)
}

/// Inference-time map: per-frame depth is skipped and every character keeps
/// the level value it had in the reference image.
pub fn depth_order_inference(
    reference_ranks: &[CharacterRank],
    frame: &PoseFrame,
    topology: &SkeletonTopology,
    params: &DepthOrderParams,
) -> Result<DepthOrderMap> {
    if let Some(c) = frame.characters.iter().find(|c| {
        !reference_ranks
            .iter()
            .any(|r| r.character_id == c.character_id)
    }) {
        return Err(Error::IdentityMismatch {
            character_id: c.character_id,
        });
    }
    let masks = frame_dilation_maps(frame, topology, &params.dilation)?;
    compose_order_map(&masks, reference_ranks, frame.width, frame.height)
}
