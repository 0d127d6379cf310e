//! Dataset statistics: background motion, character counts and body
//! occlusion between characters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{background_flow_mean, STABLE_FLOW_THRESHOLD};
use crate::pose::PoseSequence;
use crate::raster::{mask_intersection, mask_union, BinaryMask, FlowField};

/// Occlusion-rate bucket cuts for multi-character videos.
pub const OCCLUSION_QUARTILE_CUTS: [f64; 3] = [0.05, 0.13, 0.21];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowStability {
    Stable,
    Noisy,
}

impl FlowStability {
    pub fn classify(mean: f64, threshold: f64) -> Self {
        if mean < threshold {
            FlowStability::Stable
        } else {
            FlowStability::Noisy
        }
    }

    pub fn classify_default(mean: f64) -> Self {
        Self::classify(mean, STABLE_FLOW_THRESHOLD)
    }
}

/// Uniform mean over frame pairs of the per-pair background flow mean.
/// `flows[i]` is the motion into frame `i + 1` and `masks[i]` that frame's
/// character mask.
pub fn video_background_flow_mean(flows: &[FlowField], masks: &[BinaryMask]) -> Result<f64> {
    if flows.is_empty() {
        return Err(Error::InvalidArgument(
            "at least two frames (one flow) are required".into(),
        ));
    }
    if flows.len() != masks.len() {
        return Err(Error::shape(
            format!("{} masks", flows.len()),
            format!("{} masks", masks.len()),
        ));
    }
    let sum = flows
        .iter()
        .zip(masks)
        .map(|(f, m)| background_flow_mean(f, m))
        .sum::<Result<f64>>()?;
    Ok(sum / flows.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OcclusionVariant {
    /// Area of the intersection of all maps over the area of their union.
    #[default]
    AllIntersection,
    /// Largest intersection-over-union among character pairs.
    PairwiseMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcclusionReport {
    pub per_frame: Vec<f64>,
    pub mean: f64,
}

fn iou(masks: &[BinaryMask]) -> Result<f64> {
    let union = mask_union(masks)?.area();
    if union == 0 {
        return Err(Error::UndefinedStatistic(
            "dilation maps are all empty; occlusion rate has no denominator".into(),
        ));
    }
    Ok(mask_intersection(masks)?.area() as f64 / union as f64)
}

/// Occlusion rate of one frame. Frames with fewer than two characters
/// contribute 0.
pub fn frame_occlusion_rate(masks: &[BinaryMask], variant: OcclusionVariant) -> Result<f64> {
    if masks.len() < 2 {
        return Ok(0.0);
    }
    match variant {
        OcclusionVariant::AllIntersection => iou(masks),
        OcclusionVariant::PairwiseMax => {
            if masks.iter().all(BinaryMask::is_empty) {
                // Same error as the all-intersection variant.
                return iou(masks);
            }
            let mut best = 0f64;
            for i in 0..masks.len() {
                for j in i + 1..masks.len() {
                    // A pair of empty maps has no overlap to measure.
                    if masks[i].is_empty() && masks[j].is_empty() {
                        continue;
                    }
                    best = best.max(iou(&[masks[i].clone(), masks[j].clone()])?);
                }
            }
            Ok(best)
        }
    }
}

/// Per-frame occlusion rates and their uniform per-video mean.
pub fn body_occlusion_rate(
    frames: &[Vec<BinaryMask>],
    variant: OcclusionVariant,
) -> Result<OcclusionReport> {
    if frames.is_empty() {
        return Err(Error::InvalidArgument("video has no frames".into()));
    }
    let per_frame = frames
        .iter()
        .map(|m| frame_occlusion_rate(m, variant))
        .collect::<Result<Vec<_>>>()?;
    let mean = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
    Ok(OcclusionReport { per_frame, mean })
}

/// Most frequent per-frame character count; ties go to the smaller count.
pub fn character_count_mode(sequence: &PoseSequence) -> usize {
    let mut counts = std::collections::BTreeMap::new();
    for f in sequence.frames() {
        *counts.entry(f.characters.len()).or_insert(0usize) += 1;
    }
    counts
        .into_iter()
        .fold((0usize, 0usize), |(best_k, best_n), (k, n)| {
            if n > best_n {
                (k, n)
            } else {
                (best_k, best_n)
            }
        })
        .0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Fraction of in-range values per bin; `None` when no value fell in range.
    pub proportions: Option<Vec<f64>>,
    /// Values below the first edge.
    pub underflow: usize,
    /// Values above the last edge.
    pub overflow: usize,
}

/// Bins `values` by `edges`. Bins are `[e_i, e_{i+1})` except the last,
/// which also includes its right edge. Non-finite values count as overflow
/// or underflow by sign (NaN as overflow).
pub fn histogram(values: &[f64], edges: &[f64]) -> Result<Histogram> {
    if edges.len() < 2 {
        return Err(Error::InvalidArgument(
            "a histogram needs at least two edges".into(),
        ));
    }
    if edges
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::InvalidArgument(
            "histogram edges must be strictly increasing".into(),
        ));
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0usize; bins];
    let (mut underflow, mut overflow) = (0, 0);
    let last = edges[bins];
    for &v in values {
        if v < edges[0] {
            underflow += 1;
        } else if v == last {
            counts[bins - 1] += 1;
        } else if v > last || v.is_nan() {
            overflow += 1;
        } else {
            // Number of edges <= v, minus one, is the bin index.
            let i = edges.partition_point(|&e| e <= v) - 1;
            counts[i] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let proportions =
        (total > 0).then(|| counts.iter().map(|&c| c as f64 / total as f64).collect());
    Ok(Histogram {
        edges: edges.to_vec(),
        counts,
        proportions,
        underflow,
        overflow,
    })
}

/// Edges `[0, 0.05, 0.13, 0.21, 1]` for occlusion-rate quartile buckets.
pub fn occlusion_quartile_edges() -> Vec<f64> {
    let mut e = vec![0.0];
    e.extend(OCCLUSION_QUARTILE_CUTS);
    e.push(1.0);
    e
}
