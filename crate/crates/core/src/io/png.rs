use std::io::Cursor;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use super::FormatError;
use crate::depth_order::DepthOrderMap;
use crate::raster::{BinaryMask, DepthConvention, DepthRaster, Raster};

/// Visualization colors by depth rank (rank 1 first), cycled beyond eight.
pub const ORDER_PALETTE: [[u8; 3]; 8] = [
    [255, 214, 0],
    [220, 40, 40],
    [40, 110, 230],
    [40, 190, 80],
    [200, 60, 220],
    [0, 200, 200],
    [255, 140, 0],
    [150, 150, 150],
];

fn encode(img: DynamicImage) -> Result<Vec<u8>, FormatError> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// 8-bit grayscale PNG with 0 for background and 255 for set pixels.
pub fn encode_mask_png(mask: &BinaryMask) -> Result<Vec<u8>, FormatError> {
    let data = mask.bits().iter().map(|&b| b * 255).collect();
    let img = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, data)
        .expect("buffer matches dimensions");
    encode(DynamicImage::ImageLuma8(img))
}

/// Any nonzero luma is treated as set.
pub fn decode_mask_png(bytes: &[u8]) -> Result<BinaryMask, FormatError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.into_luma8();
    let (w, h) = img.dimensions();
    let bits: Vec<bool> = img.into_raw().into_iter().map(|v| v != 0).collect();
    Ok(BinaryMask::from_bools(w as usize, h as usize, &bits).expect("decoded dimensions"))
}

/// 8-bit PNG from a 1-channel (gray) or 3-channel (RGB) raster in `[0, 1]`;
/// values are clamped and rounded.
pub fn encode_image_png(raster: &Raster<f32>) -> Result<Vec<u8>, FormatError> {
    let data: Vec<u8> = raster
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let (w, h) = (raster.width() as u32, raster.height() as u32);
    let img = match raster.channels() {
        1 => DynamicImage::ImageLuma8(
            GrayImage::from_raw(w, h, data).expect("buffer matches dimensions"),
        ),
        3 => DynamicImage::ImageRgb8(
            RgbImage::from_raw(w, h, data).expect("buffer matches dimensions"),
        ),
        c => {
            return Err(FormatError::Header(format!(
                "PNG output needs 1 or 3 channels, got {c}"
            )))
        }
    };
    encode(img)
}

/// Like [`encode_image_png`] but insists on 3 channels.
pub fn encode_rgb_png(raster: &Raster<f32>) -> Result<Vec<u8>, FormatError> {
    if raster.channels() != 3 {
        return Err(FormatError::Header(format!(
            "RGB PNG needs 3 channels, got {}",
            raster.channels()
        )));
    }
    encode_image_png(raster)
}

/// Decodes a PNG to floats in `[0, 1]`: gray images give 1 channel, color
/// images 3 (alpha is dropped). 16-bit samples keep their precision.
pub fn decode_image(bytes: &[u8]) -> Result<Raster<f32>, FormatError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let raster = if img.color().has_color() {
        Raster::new(w, h, 3, img.into_rgb32f().into_raw())
    } else {
        let gray = img.into_luma16();
        Raster::new(
            w,
            h,
            1,
            gray.into_raw()
                .into_iter()
                .map(|v| v as f32 / 65535.0)
                .collect(),
        )
    };
    Ok(raster.expect("decoded dimensions"))
}

/// 16-bit grayscale PNG depth: each sample `v` becomes `v * scale`.
pub fn decode_depth_png16(
    bytes: &[u8],
    scale: f32,
    convention: DepthConvention,
) -> Result<DepthRaster, FormatError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img
        .into_luma16()
        .into_raw()
        .into_iter()
        .map(|v| v as f32 * scale)
        .collect();
    let raster = Raster::new(w, h, 1, data).expect("decoded dimensions");
    DepthRaster::new(raster, convention).map_err(|e| FormatError::InvalidValue {
        offset: 0,
        message: e.to_string(),
    })
}

/// Colors each character region by its rank; background stays black.
pub fn encode_order_png(order: &DepthOrderMap) -> Result<Vec<u8>, FormatError> {
    let map = &order.map;
    let mut data = Vec::with_capacity(map.pixel_count() * 3);
    for &v in map.data() {
        let color = order
            .ranks
            .iter()
            .find(|r| v != 0.0 && r.level_value == v)
            .map_or([0, 0, 0], |r| {
                ORDER_PALETTE[(r.rank - 1) % ORDER_PALETTE.len()]
            });
        data.extend_from_slice(&color);
    }
    let img = RgbImage::from_raw(map.width() as u32, map.height() as u32, data)
        .expect("buffer matches dimensions");
    encode(DynamicImage::ImageRgb8(img))
}
