//! Deterministic guidance-map computation for multi-character,
//! pose-driven video animation.
//!
//! * [`dilation`]: skeletal dilation masks from pose keypoints.
//! * [`flow`]: background optical-flow guidance with character regions masked.
//! * [`depth_order`]: per-character depth-order maps with front ownership of overlaps.
//! * [`pose`]: pose files and skeleton (pose map) rendering.
//! * [`scheduler`]: overlap-window planning and blending for long videos.
//! * [`analytics`]: background-motion and occlusion statistics for datasets.
//! * [`metrics`]: L1, PSNR, SSIM and Fréchet distance under one preprocessing standard.
//! * [`io`]: every on-disk format.

pub mod analytics;
pub mod depth_order;
pub mod dilation;
mod draw;
pub mod error;
pub mod flow;
pub mod io;
pub mod metrics;
pub mod pose;
pub mod raster;
pub mod scheduler;

pub use error::{BoxError, Error, Result};
pub use raster::{
    mask_intersection, mask_union, raster_hadamard, BinaryMask, ClipMeta, DepthConvention,
    DepthRaster, FlowField, Fps, Raster,
};
