use super::FormatError;
use crate::flow::FlowGuidanceMap;
use crate::metrics::FeatureSet;
use crate::raster::{BinaryMask, FlowField, Raster};

pub const FLOW_MAGIC: &[u8; 4] = b"CGFL";
pub const GUIDANCE_MAGIC: &[u8; 4] = b"CGGM";
pub const FEATURES_MAGIC: &[u8; 4] = b"CGFS";

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, pos: 0 }
    }

    fn need(&self, total: usize) -> Result<(), FormatError> {
        if self.bytes.len() < total {
            return Err(FormatError::Truncated {
                offset: self.bytes.len(),
                needed: total,
            });
        }
        Ok(())
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<(), FormatError> {
        let found = &self.bytes[..self.bytes.len().min(4)];
        if found != expected {
            return Err(FormatError::BadMagic {
                expected: String::from_utf8_lossy(expected).into_owned(),
                found: String::from_utf8_lossy(found).into_owned(),
            });
        }
        self.pos = 4;
        Ok(())
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        self.need(self.pos + 4)?;
        let v = u32::from_le_bytes(self.bytes[self.pos..self.pos + 4].try_into().unwrap());
        self.pos += 4;
        Ok(v)
    }

    fn positive_u32(&mut self, what: &str) -> Result<usize, FormatError> {
        let offset = self.pos;
        let v = self.u32()?;
        if v == 0 {
            return Err(FormatError::InvalidValue {
                offset,
                message: format!("{what} must be positive"),
            });
        }
        Ok(v as usize)
    }

    /// `n` finite little-endian floats; the caller has checked the length.
    fn finite_f32s(&mut self, n: usize) -> Result<Vec<f32>, FormatError> {
        let mut out = Vec::with_capacity(n);
        for chunk in self.bytes[self.pos..self.pos + 4 * n].chunks_exact(4) {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(FormatError::NonFinite {
                    offset: self.pos + 4 * out.len(),
                });
            }
            out.push(v);
        }
        self.pos += 4 * n;
        Ok(out)
    }

    fn finish(&self) -> Result<(), FormatError> {
        if self.pos != self.bytes.len() {
            return Err(FormatError::InvalidValue {
                offset: self.pos,
                message: format!("{} trailing bytes", self.bytes.len() - self.pos),
            });
        }
        Ok(())
    }
}

fn checked_len(parts: &[usize], offset: usize) -> Result<usize, FormatError> {
    parts
        .iter()
        .try_fold(1usize, |acc, &p| acc.checked_mul(p))
        .ok_or_else(|| FormatError::InvalidValue {
            offset,
            message: "dimensions overflow".into(),
        })
}

fn header(magic: &[u8; 4], a: usize, b: usize, payload: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + payload);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(a as u32).to_le_bytes());
    out.extend_from_slice(&(b as u32).to_le_bytes());
    out
}

fn push_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn write_flow(flow: &FlowField) -> Vec<u8> {
    let data = flow.raster().data();
    let mut out = header(FLOW_MAGIC, flow.width(), flow.height(), data.len() * 4);
    push_f32s(&mut out, data);
    out
}

pub fn read_flow(bytes: &[u8]) -> Result<FlowField, FormatError> {
    let mut cur = Cursor::new(bytes);
    cur.magic(FLOW_MAGIC)?;
    let w = cur.positive_u32("width")?;
    let h = cur.positive_u32("height")?;
    let n = checked_len(&[w, h, 2], 4)?;
    cur.need(12 + 4 * n)?;
    let data = cur.finite_f32s(n)?;
    cur.finish()?;
    let raster = Raster::new(w, h, 2, data).expect("length checked above");
    Ok(FlowField::new(raster).expect("values checked finite"))
}

/// Guidance map payload followed by a `width*height` byte mask block (0/1).
pub fn write_guidance(map: &FlowGuidanceMap) -> Vec<u8> {
    let data = map.map().data();
    let mut out = header(
        GUIDANCE_MAGIC,
        map.width(),
        map.height(),
        data.len() * 4 + map.mask().bits().len(),
    );
    push_f32s(&mut out, data);
    out.extend_from_slice(map.mask().bits());
    out
}

pub fn read_guidance(bytes: &[u8]) -> Result<FlowGuidanceMap, FormatError> {
    let mut cur = Cursor::new(bytes);
    cur.magic(GUIDANCE_MAGIC)?;
    let w = cur.positive_u32("width")?;
    let h = cur.positive_u32("height")?;
    let pixels = checked_len(&[w, h], 4)?;
    cur.need(12 + 8 * pixels + pixels)?;
    let data = cur.finite_f32s(2 * pixels)?;
    let mask_start = cur.pos;
    let mask_bytes = &bytes[mask_start..mask_start + pixels];
    if let Some(i) = mask_bytes.iter().position(|&b| b > 1) {
        return Err(FormatError::InvalidValue {
            offset: mask_start + i,
            message: format!("mask byte {} is not 0 or 1", mask_bytes[i]),
        });
    }
    cur.pos += pixels;
    cur.finish()?;
    let mask = BinaryMask::from_raster(Raster::new(w, h, 1, mask_bytes.to_vec()).unwrap())
        .expect("mask bytes checked");
    let map = Raster::new(w, h, 2, data).unwrap();
    FlowGuidanceMap::from_parts(map, mask).map_err(|e| FormatError::InvalidValue {
        offset: 12,
        message: e.to_string(),
    })
}

pub fn write_features(features: &FeatureSet) -> Vec<u8> {
    let mut out = header(
        FEATURES_MAGIC,
        features.count(),
        features.dim(),
        features.data().len() * 4,
    );
    push_f32s(&mut out, features.data());
    out
}

/// A zero count is accepted (an empty set); the dimension must be positive.
pub fn read_features(bytes: &[u8], source: &str) -> Result<FeatureSet, FormatError> {
    let mut cur = Cursor::new(bytes);
    cur.magic(FEATURES_MAGIC)?;
    let count = cur.u32()? as usize;
    let dim = cur.positive_u32("dimension")?;
    let n = checked_len(&[count, dim], 4)?;
    cur.need(12 + 4 * n)?;
    let data = cur.finite_f32s(n)?;
    cur.finish()?;
    Ok(FeatureSet::new(count, dim, data, source).expect("shape and values checked"))
}
