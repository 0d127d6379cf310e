//! Aliasing-free rasterization of the two skeleton primitives.
//!
//! Pixel `(x, y)` is sampled at its integer coordinates. A pixel belongs to a
//! thick segment iff its distance to the segment is at most half the line
//! width, and to a disk iff its distance to the center is at most the radius.

/// A drawable piece of a skeleton, in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Primitive {
    Segment {
        from: (f64, f64),
        to: (f64, f64),
        half_width: f64,
    },
    Disk {
        center: (f64, f64),
        radius: f64,
    },
}

/// Squared distance from `p` to the closed segment `a`–`b`.
pub(crate) fn segment_distance_sq(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    cx * cx + cy * cy
}

impl Primitive {
    pub(crate) fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Primitive::Segment {
                from,
                to,
                half_width,
            } => segment_distance_sq((x, y), from, to) <= half_width * half_width,
            Primitive::Disk { center, radius } => {
                let (dx, dy) = (x - center.0, y - center.1);
                dx * dx + dy * dy <= radius * radius
            }
        }
    }

    /// Inclusive pixel bounding box clipped to the raster, or `None` if the
    /// primitive lies entirely outside.
    fn pixel_bounds(&self, width: usize, height: usize) -> Option<(usize, usize, usize, usize)> {
        let (x0, y0, x1, y1) = match *self {
            Primitive::Segment {
                from,
                to,
                half_width,
            } => (
                from.0.min(to.0) - half_width,
                from.1.min(to.1) - half_width,
                from.0.max(to.0) + half_width,
                from.1.max(to.1) + half_width,
            ),
            Primitive::Disk { center, radius } => (
                center.0 - radius,
                center.1 - radius,
                center.0 + radius,
                center.1 + radius,
            ),
        };
        let (x0, y0) = (x0.ceil().max(0.0), y0.ceil().max(0.0));
        let (x1, y1) = (
            x1.floor().min(width as f64 - 1.0),
            y1.floor().min(height as f64 - 1.0),
        );
        if !(x0 <= x1 && y0 <= y1) {
            return None;
        }
        Some((x0 as usize, y0 as usize, x1 as usize, y1 as usize))
    }

    /// Calls `visit(x, y)` for every covered in-bounds pixel, row by row.
    pub(crate) fn for_each_pixel(
        &self,
        width: usize,
        height: usize,
        mut visit: impl FnMut(usize, usize),
    ) {
        let Some((x0, y0, x1, y1)) = self.pixel_bounds(width, height) else {
            return;
        };
        for y in y0..=y1 {
            for x in x0..=x1 {
                if self.contains(x as f64, y as f64) {
                    visit(x, y);
                }
            }
        }
    }
}
