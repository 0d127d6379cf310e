//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use condguide::dilation::CharacterMask;
use condguide::pose::{CharacterPose, Keypoint, PoseFrame, SkeletonTopology};
use condguide::{BinaryMask, DepthConvention, DepthRaster, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mask(rng: &mut impl Rng, w: usize, h: usize, density: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.random_bool(density)).unwrap()
}

/// Union of a few random disks, so that characters overlap like real ones.
pub fn blob_mask(rng: &mut impl Rng, w: usize, h: usize) -> BinaryMask {
    let blobs: Vec<(f64, f64, f64)> = (0..rng.random_range(1..=3))
        .map(|_| {
            (
                rng.random_range(0.0..w as f64),
                rng.random_range(0.0..h as f64),
                rng.random_range(2.0..(w.min(h) as f64 / 3.0)),
            )
        })
        .collect();
    BinaryMask::from_fn(w, h, |x, y| {
        blobs.iter().any(|&(cx, cy, r)| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            dx * dx + dy * dy <= r * r
        })
    })
    .unwrap()
}

pub fn random_depth(
    rng: &mut impl Rng,
    w: usize,
    h: usize,
    convention: DepthConvention,
) -> DepthRaster {
    let r = Raster::from_fn(w, h, 1, |_, _, _| rng.random_range(0.0f32..10.0)).unwrap();
    DepthRaster::new(r, convention).unwrap()
}

pub fn random_character(rng: &mut impl Rng, id: u32, w: usize, h: usize) -> CharacterPose {
    let (cx, cy) = (
        rng.random_range(0.0..w as f32),
        rng.random_range(0.0..h as f32),
    );
    let spread = w.min(h) as f32 / 3.0;
    let keypoints = (0..18)
        .map(|_| {
            let conf = if rng.random_bool(0.85) {
                rng.random_range(0.3f32..=1.0)
            } else {
                rng.random_range(0.0f32..0.3)
            };
            Keypoint::new(
                cx + rng.random_range(-spread..spread),
                cy + rng.random_range(-spread..spread),
                conf,
            )
        })
        .collect();
    CharacterPose::new(id, keypoints)
}

pub fn random_frame(rng: &mut impl Rng, w: usize, h: usize, max_chars: usize) -> PoseFrame {
    let n = rng.random_range(1..=max_chars);
    let chars = (0..n as u32)
        .map(|i| {
            let id = 10 * i + rng.random_range(0..10);
            random_character(rng, id, w, h)
        })
        .collect();
    PoseFrame::new(w, h, chars)
}

pub fn character_masks(rng: &mut impl Rng, w: usize, h: usize, count: usize) -> Vec<CharacterMask> {
    let mut ids: Vec<u32> = Vec::new();
    while ids.len() < count {
        let id = rng.random_range(0..100);
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    ids.into_iter()
        .map(|character_id| CharacterMask {
            character_id,
            mask: blob_mask(rng, w, h),
            degenerate: false,
        })
        .collect()
}

/// Per-pixel brute force: rank characters by the mean depth over pixels only
/// they cover (ties and fully covered characters ordered by id), then give
/// every pixel the level of the frontmost character covering it.
pub fn painter_oracle(masks: &[CharacterMask], depth: &DepthRaster) -> Vec<f32> {
    let (w, h) = (depth.width(), depth.height());
    let j = masks.len();
    let mut measured: Vec<(u32, f64)> = Vec::new();
    let mut hidden: Vec<u32> = Vec::new();
    for m in masks {
        let mut sum = 0f64;
        let mut n = 0usize;
        for y in 0..h {
            for x in 0..w {
                let only_me = m.mask.get(x, y)
                    && masks
                        .iter()
                        .filter(|o| o.character_id != m.character_id)
                        .all(|o| !o.mask.get(x, y));
                if only_me {
                    sum += depth.at(x, y) as f64;
                    n += 1;
                }
            }
        }
        if n == 0 {
            hidden.push(m.character_id);
        } else {
            measured.push((m.character_id, sum / n as f64));
        }
    }
    let closer = |a: f64, b: f64| match depth.convention() {
        DepthConvention::LargerIsCloser => a > b,
        DepthConvention::SmallerIsCloser => a < b,
    };
    // Selection sort with explicit comparisons, independent of the library's sort.
    let mut order = Vec::new();
    while !measured.is_empty() {
        let mut best = 0;
        for i in 1..measured.len() {
            let (id, d) = measured[i];
            let (bid, bd) = measured[best];
            if closer(d, bd) || (d == bd && id < bid) {
                best = i;
            }
        }
        order.push(measured.remove(best).0);
    }
    hidden.sort();
    order.extend(hidden);

    let mut out = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            for (r, id) in order.iter().enumerate() {
                let m = masks.iter().find(|m| m.character_id == *id).unwrap();
                if m.mask.get(x, y) {
                    out[y * w + x] = ((j - (r + 1) + 1) as f64 / j as f64) as f32;
                    break;
                }
            }
        }
    }
    out
}

/// Independent uniform noise, which makes block matching unambiguous.
pub fn textured_image(rng: &mut impl Rng, w: usize, h: usize, channels: usize) -> Raster<f32> {
    Raster::from_fn(w, h, channels, |_, _, _| rng.random_range(0.0f32..1.0)).unwrap()
}

/// `img` moved by `(dx, dy)`: `out(x, y) = img(x - dx, y - dy)`, with
/// uncovered pixels filled from `fill`.
pub fn shifted(img: &Raster<f32>, dx: i64, dy: i64, fill: &Raster<f32>) -> Raster<f32> {
    Raster::from_fn(img.width(), img.height(), img.channels(), |x, y, c| {
        let (sx, sy) = (x as i64 - dx, y as i64 - dy);
        if sx >= 0 && sy >= 0 && (sx as usize) < img.width() && (sy as usize) < img.height() {
            *img.get(sx as usize, sy as usize, c)
        } else {
            *fill.get(x, y, c)
        }
    })
    .unwrap()
}

pub fn body18() -> SkeletonTopology {
    SkeletonTopology::body18()
}
