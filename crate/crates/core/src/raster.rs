//! Raster containers shared by every guidance map.
//!
//! All rasters are row-major with a top-left origin and y pointing down.
//! Pixel `(x, y)` channel `c` lives at `((y * width) + x) * channels + c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense row-major raster of `T` with interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T> Raster<T> {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::InvalidArgument(format!(
                "raster dimensions must be positive, got {width}x{height}x{channels}"
            )));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(Error::shape(
                format!("{expected} values for {width}x{height}x{channels}"),
                format!("{} values", data.len()),
            ));
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds a raster by evaluating `f(x, y, channel)` in storage order.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Raster::new(width, height, channels, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    fn index(&self, x: usize, y: usize, c: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> &T {
        &self.data[self.index(x, y, c)]
    }

    /// All channels of one pixel.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[T] {
        let start = self.index(x, y, 0);
        &self.data[start..start + self.channels]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn same_shape<U>(&self, other: &Raster<U>) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn same_extent<U>(&self, other: &Raster<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Clone> Raster<T> {
    pub fn filled(width: usize, height: usize, channels: usize, value: T) -> Result<Self> {
        Raster::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }
}

/// Elementwise product. `b` may be single-channel, in which case it is
/// broadcast across every channel of `a`.
pub fn raster_hadamard(a: &Raster<f32>, b: &Raster<f32>) -> Result<Raster<f32>> {
    if a.same_shape(b) {
        let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
        return Raster::new(a.width, a.height, a.channels, data);
    }
    if a.same_extent(b) && b.channels == 1 {
        let data = a
            .data
            .chunks_exact(a.channels)
            .zip(&b.data)
            .flat_map(|(px, &m)| px.iter().map(move |v| v * m))
            .collect();
        return Raster::new(a.width, a.height, a.channels, data);
    }
    Err(Error::shape(a.shape_string(), b.shape_string()))
}

/// Single-channel mask whose pixels are exactly 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask(Raster<u8>);

impl BinaryMask {
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Raster::filled(width, height, 1, 0u8).map(BinaryMask)
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Raster::filled(width, height, 1, 1u8).map(BinaryMask)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        Raster::from_fn(width, height, 1, |x, y, _| f(x, y) as u8).map(BinaryMask)
    }

    /// Validates that every value is 0 or 1.
    pub fn from_raster(raster: Raster<u8>) -> Result<Self> {
        if raster.channels != 1 {
            return Err(Error::shape(
                "1 channel",
                format!("{} channels", raster.channels),
            ));
        }
        if let Some(pos) = raster.data.iter().position(|&v| v > 1) {
            return Err(Error::InvalidArgument(format!(
                "mask value {} at index {pos} is not 0 or 1",
                raster.data[pos]
            )));
        }
        Ok(BinaryMask(raster))
    }

    pub fn from_bools(width: usize, height: usize, bits: &[bool]) -> Result<Self> {
        Raster::new(width, height, 1, bits.iter().map(|&b| b as u8).collect()).map(BinaryMask)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.0.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.0.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.0.data[y * self.0.width + x] != 0
    }

    /// Row-major 0/1 bytes.
    pub fn bits(&self) -> &[u8] {
        &self.0.data
    }

    pub fn raster(&self) -> &Raster<u8> {
        &self.0
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [u8] {
        &mut self.0.data
    }

    pub fn area(&self) -> usize {
        self.0.data.iter().filter(|&&b| b != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.0.data.iter().all(|&b| b == 0)
    }

    pub fn same_extent(&self, other: &BinaryMask) -> bool {
        self.0.same_extent(&other.0)
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask(self.0.map(|&b| 1 - b))
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.same_extent(other) && self.0.data.iter().zip(&other.0.data).all(|(&a, &b)| a <= b)
    }

    /// 1-channel float copy (0.0 / 1.0), for use with [`raster_hadamard`].
    pub fn to_f32(&self) -> Raster<f32> {
        self.0.map(|&b| b as f32)
    }
}

fn combine_masks(masks: &[BinaryMask], op: impl Fn(u8, u8) -> u8) -> Result<BinaryMask> {
    let (first, rest) = masks
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("at least one mask is required".into()))?;
    let mut out = first.clone();
    for m in rest {
        if !m.same_extent(first) {
            return Err(Error::shape(first.0.shape_string(), m.0.shape_string()));
        }
        for (o, &b) in out.bits_mut().iter_mut().zip(m.bits()) {
            *o = op(*o, b);
        }
    }
    Ok(out)
}

/// Pixel is set iff it is set in every input.
pub fn mask_intersection(masks: &[BinaryMask]) -> Result<BinaryMask> {
    combine_masks(masks, |a, b| a & b)
}

/// Pixel is set iff it is set in any input.
pub fn mask_union(masks: &[BinaryMask]) -> Result<BinaryMask> {
    combine_masks(masks, |a, b| a | b)
}

/// Two-channel `(u, v)` motion field in pixels per frame. Always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField(Raster<f32>);

impl FlowField {
    pub fn new(raster: Raster<f32>) -> Result<Self> {
        if raster.channels != 2 {
            return Err(Error::shape(
                "2 channels",
                format!("{} channels", raster.channels),
            ));
        }
        if let Some(pos) = raster.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "flow value at index {pos} is not finite"
            )));
        }
        Ok(FlowField(raster))
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Raster::filled(width, height, 2, 0.0f32).map(FlowField)
    }

    pub fn uniform(width: usize, height: usize, u: f32, v: f32) -> Result<Self> {
        FlowField::new(Raster::from_fn(width, height, 2, |_, _, c| {
            if c == 0 {
                u
            } else {
                v
            }
        })?)
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let p = self.0.pixel(x, y);
        (p[0], p[1])
    }

    pub fn raster(&self) -> &Raster<f32> {
        &self.0
    }

    pub fn into_raster(self) -> Raster<f32> {
        self.0
    }
}

/// Which direction of the depth signal points toward the camera.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepthConvention {
    /// Disparity-like maps: larger values are nearer the camera.
    #[default]
    LargerIsCloser,
    /// Metric depth: smaller values are nearer the camera.
    SmallerIsCloser,
}

impl DepthConvention {
    pub fn flipped(self) -> Self {
        match self {
            DepthConvention::LargerIsCloser => DepthConvention::SmallerIsCloser,
            DepthConvention::SmallerIsCloser => DepthConvention::LargerIsCloser,
        }
    }
}

/// Single-channel finite depth or disparity raster from an external estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRaster {
    raster: Raster<f32>,
    convention: DepthConvention,
}

impl DepthRaster {
    pub fn new(raster: Raster<f32>, convention: DepthConvention) -> Result<Self> {
        if raster.channels != 1 {
            return Err(Error::shape(
                "1 channel",
                format!("{} channels", raster.channels),
            ));
        }
        if let Some(pos) = raster.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "depth value at index {pos} is not finite"
            )));
        }
        Ok(DepthRaster { raster, convention })
    }

    pub fn width(&self) -> usize {
        self.raster.width
    }

    pub fn height(&self) -> usize {
        self.raster.height
    }

    pub fn convention(&self) -> DepthConvention {
        self.convention
    }

    pub fn raster(&self) -> &Raster<f32> {
        &self.raster
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        *self.raster.get(x, y, 0)
    }
}

/// Frame rate as an exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fps {
    pub num: u32,
    pub den: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub frame_count: usize,
    pub fps: Fps,
    pub source_id: String,
}

impl ClipMeta {
    pub fn new(frame_count: usize, fps: Fps, source_id: impl Into<String>) -> Result<Self> {
        if frame_count == 0 {
            return Err(Error::InvalidArgument(
                "clip needs at least one frame".into(),
            ));
        }
        if fps.num == 0 || fps.den == 0 {
            return Err(Error::InvalidArgument(format!(
                "frame rate {}/{} is not positive",
                fps.num, fps.den
            )));
        }
        Ok(ClipMeta {
            frame_count,
            fps,
            source_id: source_id.into(),
        })
    }
}
