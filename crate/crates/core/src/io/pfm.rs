//! Portable float maps. `Pf` is single-channel, `PF` three-channel; a
//! negative scale marks little-endian data. Rows are stored bottom to top.

use super::FormatError;
use crate::raster::{DepthConvention, DepthRaster, Raster};

#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    /// Top-left origin, like every other raster in the crate.
    pub raster: Raster<f32>,
    /// Absolute value of the header scale.
    pub scale: f32,
}

fn header_token(bytes: &[u8], pos: &mut usize) -> Result<String, FormatError> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(FormatError::Truncated {
            offset: *pos,
            needed: *pos + 1,
        });
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

pub fn read_pfm(bytes: &[u8]) -> Result<PfmImage, FormatError> {
    let mut pos = 0;
    let channels = match header_token(bytes, &mut pos)?.as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => {
            return Err(FormatError::BadMagic {
                expected: "PF or Pf".into(),
                found: other.into(),
            })
        }
    };
    let mut dim = |what: &str| -> Result<usize, FormatError> {
        let t = header_token(bytes, &mut pos)?;
        match t.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(FormatError::Header(format!("invalid {what} {t:?}"))),
        }
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let scale_token = header_token(bytes, &mut pos)?;
    let scale: f32 = scale_token
        .parse()
        .ok()
        .filter(|s: &f32| s.is_finite() && *s != 0.0)
        .ok_or_else(|| FormatError::Header(format!("invalid scale {scale_token:?}")))?;
    // Exactly one whitespace byte separates the header from the data.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(FormatError::Header("missing separator after scale".into()));
    }
    pos += 1;

    let row_len = width * channels;
    let needed = pos + 4 * row_len * height;
    if bytes.len() < needed {
        return Err(FormatError::Truncated {
            offset: bytes.len(),
            needed,
        });
    }
    if bytes.len() > needed {
        return Err(FormatError::InvalidValue {
            offset: needed,
            message: format!("{} trailing bytes", bytes.len() - needed),
        });
    }
    let little = scale < 0.0;
    let mut data = vec![0f32; row_len * height];
    for (file_row, chunk) in bytes[pos..].chunks_exact(4 * row_len).enumerate() {
        let y = height - 1 - file_row;
        for (i, b) in chunk.chunks_exact(4).enumerate() {
            let b: [u8; 4] = b.try_into().unwrap();
            data[y * row_len + i] = if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            };
        }
    }
    Ok(PfmImage {
        raster: Raster::new(width, height, channels, data).expect("length checked"),
        scale: scale.abs(),
    })
}

fn encode(raster: &Raster<f32>, little: bool) -> Result<Vec<u8>, FormatError> {
    let tag = match raster.channels() {
        1 => "Pf",
        3 => "PF",
        c => {
            return Err(FormatError::Header(format!(
                "PFM holds 1 or 3 channels, not {c}"
            )))
        }
    };
    let scale = if little { "-1.0" } else { "1.0" };
    let mut out = format!("{tag}\n{} {}\n{scale}\n", raster.width(), raster.height()).into_bytes();
    let row_len = raster.width() * raster.channels();
    for row in raster.data().chunks_exact(row_len).rev() {
        for v in row {
            out.extend_from_slice(&if little {
                v.to_le_bytes()
            } else {
                v.to_be_bytes()
            });
        }
    }
    Ok(out)
}

/// Little-endian PFM (scale -1.0).
pub fn write_pfm(raster: &Raster<f32>) -> Result<Vec<u8>, FormatError> {
    encode(raster, true)
}

/// Big-endian PFM (scale 1.0).
pub fn write_pfm_big_endian(raster: &Raster<f32>) -> Result<Vec<u8>, FormatError> {
    encode(raster, false)
}

/// Single-channel PFM as a depth raster. Non-finite samples are rejected.
pub fn read_pfm_depth(
    bytes: &[u8],
    convention: DepthConvention,
) -> Result<DepthRaster, FormatError> {
    let img = read_pfm(bytes)?;
    if img.raster.channels() != 1 {
        return Err(FormatError::Header(
            "depth PFM must be single-channel (Pf)".into(),
        ));
    }
    if let Some(i) = img.raster.data().iter().position(|v| !v.is_finite()) {
        return Err(FormatError::NonFinite { offset: i * 4 });
    }
    Ok(DepthRaster::new(img.raster, convention).expect("validated"))
}
