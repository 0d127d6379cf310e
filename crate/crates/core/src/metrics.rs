//! Evaluation metrics under one preprocessing standard: frames are
//! center-cropped to a square and resized before comparison, and video
//! metrics see consecutive 16-frame samples.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::raster::Raster;

pub const DEFAULT_STANDARD_SIZE: usize = 512;
pub const VIDEO_SAMPLE_FRAMES: usize = 16;
pub const DEFAULT_COVARIANCE_EPSILON: f64 = 1e-6;
/// Negative Fréchet results down to this (relative) size are rounding noise.
pub const FRECHET_NEGATIVE_FLOOR: f64 = 1e-8;

/// Center-crops to the largest centered square (an odd excess drops the
/// extra column/row on the right/bottom) and bilinearly resizes it to
/// `size`×`size` using pixel-center alignment.
pub fn standardize(frame: &Raster<f32>, size: usize) -> Result<Raster<f32>> {
    if size == 0 {
        return Err(Error::InvalidArgument(
            "standard size must be positive".into(),
        ));
    }
    let (w, h, ch) = (frame.width(), frame.height(), frame.channels());
    let side = w.min(h);
    let (x0, y0) = ((w - side) / 2, (h - side) / 2);
    let scale = side as f64 / size as f64;
    let taps = |dst: usize| {
        let src = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (side - 1) as f64);
        let i0 = src.floor() as usize;
        let i1 = (i0 + 1).min(side - 1);
        (i0, i1, (src - i0 as f64) as f32)
    };
    let xs: Vec<_> = (0..size).map(taps).collect();
    let ys: Vec<_> = (0..size).map(taps).collect();
    Raster::from_fn(size, size, ch, |x, y, c| {
        let (xa, xb, tx) = xs[x];
        let (ya, yb, ty) = ys[y];
        let px = |sx: usize, sy: usize| *frame.get(x0 + sx, y0 + sy, c);
        let top = px(xa, ya) * (1.0 - tx) + px(xb, ya) * tx;
        let bottom = px(xa, yb) * (1.0 - tx) + px(xb, yb) * tx;
        top * (1.0 - ty) + bottom * ty
    })
}

fn check_same_shape(a: &Raster<f32>, b: &Raster<f32>) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::shape(a.shape_string(), b.shape_string()))
    }
}

/// Mean absolute difference over all pixels and channels.
pub fn l1_error(a: &Raster<f32>, b: &Raster<f32>) -> Result<f64> {
    check_same_shape(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .sum();
    Ok(sum / a.data().len() as f64)
}

pub fn mse(a: &Raster<f32>, b: &Raster<f32>) -> Result<f64> {
    check_same_shape(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (*x as f64 - *y as f64).powi(2))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Peak signal-to-noise ratio in dB for images in `[0, 1]`;
/// `f64::INFINITY` when the images are identical.
pub fn psnr(a: &Raster<f32>, b: &Raster<f32>) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let k: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filtering of a `w`×`h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut horiz = vec![0f64; ow * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = row[x..x + n].iter().zip(k).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0f64; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| horiz[(y + i) * ow + x] * k[i]).sum();
        }
    }
    out
}

/// Mean structural similarity with a Gaussian window, averaged over
/// channels. Only window positions fully inside the image are used.
pub fn ssim(a: &Raster<f32>, b: &Raster<f32>, params: &SsimParams) -> Result<f64> {
    check_same_shape(a, b)?;
    let (w, h, ch) = (a.width(), a.height(), a.channels());
    if params.window == 0 || w < params.window || h < params.window {
        return Err(Error::InvalidArgument(format!(
            "image {w}x{h} is smaller than the {0}x{0} SSIM window",
            params.window
        )));
    }
    let k = gaussian_kernel(params.window, params.sigma);
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let mut total = 0f64;
    for c in 0..ch {
        let plane = |r: &Raster<f32>| -> Vec<f64> {
            r.data()
                .iter()
                .skip(c)
                .step_by(ch)
                .map(|&v| v as f64)
                .collect()
        };
        let (x, y) = (plane(a), plane(b));
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let mu_x = filter_valid(&x, w, h, &k);
        let mu_y = filter_valid(&y, w, h, &k);
        let e_xx = filter_valid(&xx, w, h, &k);
        let e_yy = filter_valid(&yy, w, h, &k);
        let e_xy = filter_valid(&xy, w, h, &k);
        let mut sum = 0f64;
        for i in 0..mu_x.len() {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let var_x = e_xx[i] - mx * mx;
            let var_y = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            let num = (2.0 * (mx * my) + c1) * (2.0 * cov + c2);
            let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
            sum += num / den;
        }
        total += sum / mu_x.len() as f64;
    }
    Ok(total / ch as f64)
}

/// Equal-length feature vectors from an external embedding network.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    count: usize,
    dim: usize,
    data: Vec<f32>,
    pub source: String,
}

impl FeatureSet {
    /// `data` holds `count` row-major vectors of length `dim`.
    pub fn new(
        count: usize,
        dim: usize,
        data: Vec<f32>,
        source: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Metric("feature dimension must be positive".into()));
        }
        if data.len() != count * dim {
            return Err(Error::shape(
                format!("{count}x{dim} = {} values", count * dim),
                format!("{} values", data.len()),
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Metric(format!(
                "feature {} component {} is not finite",
                i / dim,
                i % dim
            )));
        }
        Ok(FeatureSet {
            count,
            dim,
            data,
            source: source.into(),
        })
    }

    pub fn from_vectors(vectors: &[Vec<f32>], source: impl Into<String>) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::shape(
                format!("dimension {dim}"),
                format!("dimension {}", v.len()),
            ));
        }
        FeatureSet::new(vectors.len(), dim, vectors.concat(), source)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Mean and unbiased covariance, accumulated in input order (mean first,
    /// then centered outer products).
    pub fn moments(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if self.count < 2 {
            return Err(Error::Metric(format!(
                "covariance of '{}' needs at least 2 vectors, got {}",
                self.source, self.count
            )));
        }
        let d = self.dim;
        let mut mean = DVector::<f64>::zeros(d);
        for i in 0..self.count {
            for (m, &v) in mean.iter_mut().zip(self.vector(i)) {
                *m += v as f64;
            }
        }
        mean /= self.count as f64;
        let mut cov = DMatrix::<f64>::zeros(d, d);
        let mut centered = vec![0f64; d];
        for i in 0..self.count {
            for (c, (&v, m)) in centered
                .iter_mut()
                .zip(self.vector(i).iter().zip(mean.iter()))
            {
                *c = v as f64 - m;
            }
            for r in 0..d {
                for s in r..d {
                    cov[(r, s)] += centered[r] * centered[s];
                }
            }
        }
        for r in 0..d {
            for s in r..d {
                let v = cov[(r, s)] / (self.count - 1) as f64;
                cov[(r, s)] = v;
                cov[(s, r)] = v;
            }
        }
        Ok((mean, cov))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetParams {
    /// Diagonal offset added to both covariances when the plain square root
    /// is not finite.
    pub epsilon: f64,
}

impl Default for FrechetParams {
    fn default() -> Self {
        FrechetParams {
            epsilon: DEFAULT_COVARIANCE_EPSILON,
        }
    }
}

fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `Tr((A B)^{1/2})` for symmetric PSD `A`, `B`, computed as the sum of root
/// eigenvalues of the symmetric matrix `A^{1/2} B A^{1/2}`.
fn trace_sqrt_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let ah = psd_sqrt(a);
    let m = &ah * b * &ah;
    let sym = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum()
}

/// Fréchet distance between Gaussians fitted to two feature sets:
/// `|mu1 - mu2|^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2})`.
pub fn frechet_distance(
    real: &FeatureSet,
    gen: &FeatureSet,
    params: &FrechetParams,
) -> Result<f64> {
    if real.dim != gen.dim {
        return Err(Error::Metric(format!(
            "feature dimensions differ: {} vs {}",
            real.dim, gen.dim
        )));
    }
    let (mu1, s1) = real.moments()?;
    let (mu2, s2) = gen.moments()?;
    let mean_term = (&mu1 - &mu2).norm_squared();
    let traces = s1.trace() + s2.trace();

    let mut cross = trace_sqrt_product(&s1, &s2);
    if !cross.is_finite() {
        log::warn!(
            "covariance square root is not finite; retrying with {} added to the diagonals",
            params.epsilon
        );
        let offset = DMatrix::<f64>::identity(real.dim, real.dim) * params.epsilon;
        cross = trace_sqrt_product(&(&s1 + &offset), &(&s2 + &offset));
    }
    let d = mean_term + traces - 2.0 * cross;
    if !d.is_finite() {
        return Err(Error::Metric("Fréchet distance is not finite".into()));
    }
    if d < 0.0 {
        let floor = FRECHET_NEGATIVE_FLOOR * (mean_term + traces).max(1.0);
        if d < -floor {
            return Err(Error::Metric(format!(
                "Fréchet distance {d} is negative beyond rounding tolerance"
            )));
        }
        return Ok(0.0);
    }
    Ok(d)
}

/// Consecutive non-overlapping 16-frame samples; a trailing remainder is
/// dropped.
pub fn video_windows_for_metrics<T>(frames: &[T]) -> Vec<&[T]> {
    if frames.len() < VIDEO_SAMPLE_FRAMES {
        log::warn!(
            "{} frames is fewer than one {VIDEO_SAMPLE_FRAMES}-frame video sample",
            frames.len()
        );
    }
    frames.chunks_exact(VIDEO_SAMPLE_FRAMES).collect()
}

fn serialize_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrechetEntry {
    pub name: String,
    pub value: f64,
}

/// Aggregated evaluation results. Per-frame metrics are averaged over
/// paired frames; PSNR is averaged in dB and is `"inf"` when every frame
/// pair is identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub frames: usize,
    pub video_samples: usize,
    pub l1: f64,
    #[serde(serialize_with = "serialize_db")]
    pub psnr: f64,
    pub ssim: f64,
    pub frechet: Vec<FrechetEntry>,
}

/// Per-frame metrics over paired frame lists.
pub fn image_metric_report(
    real: &[Raster<f32>],
    generated: &[Raster<f32>],
    params: &SsimParams,
) -> Result<MetricReport> {
    if real.len() != generated.len() || real.is_empty() {
        return Err(Error::shape(
            format!("{} frames", real.len()),
            format!("{} frames", generated.len()),
        ));
    }
    let n = real.len() as f64;
    let (mut l1, mut psnr_sum, mut ssim_sum) = (0f64, 0f64, 0f64);
    for (a, b) in real.iter().zip(generated) {
        l1 += l1_error(a, b)?;
        psnr_sum += psnr(a, b)?;
        ssim_sum += ssim(a, b, params)?;
    }
    Ok(MetricReport {
        frames: real.len(),
        video_samples: video_windows_for_metrics(real).len(),
        l1: l1 / n,
        psnr: psnr_sum / n,
        ssim: ssim_sum / n,
        frechet: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(w: usize, h: usize, v: f32) -> Raster<f32> {
        Raster::filled(w, h, 1, v).unwrap()
    }

    #[test]
    fn standardize_square_target_is_identity() {
        let img = Raster::from_fn(8, 8, 3, |x, y, c| (x * 31 + y * 7 + c) as f32 / 300.0).unwrap();
        assert_eq!(standardize(&img, 8).unwrap(), img);
    }

    #[test]
    fn standardize_crops_center_columns() {
        let img = Raster::from_fn(1024, 512, 1, |x, _, _| x as f32).unwrap();
        let out = standardize(&img, 512).unwrap();
        assert_eq!(*out.get(0, 0, 0), 256.0);
        assert_eq!(*out.get(511, 7, 0), 767.0);
    }

    #[test]
    fn standardize_odd_excess_drops_right_column() {
        let img = Raster::from_fn(513, 512, 1, |x, _, _| x as f32).unwrap();
        let out = standardize(&img, 512).unwrap();
        assert_eq!(*out.get(0, 0, 0), 0.0);
        assert_eq!(*out.get(511, 0, 0), 511.0);
    }

    #[test]
    fn standardize_downscale_averages_neighbours() {
        let img = Raster::from_fn(4, 4, 1, |x, _, _| x as f32).unwrap();
        let out = standardize(&img, 2).unwrap();
        assert_eq!(out.data(), &[0.5, 2.5, 0.5, 2.5]);
    }

    #[test]
    fn l1_examples() {
        let a = flat(4, 4, 0.0);
        assert_eq!(l1_error(&a, &a).unwrap(), 0.0);
        assert_eq!(l1_error(&a, &flat(4, 4, 1.0)).unwrap(), 1.0);
        let half = Raster::from_fn(4, 4, 1, |x, _, _| if x < 2 { 0.5 } else { 0.0 }).unwrap();
        assert_eq!(l1_error(&a, &half).unwrap(), 0.25);
        assert!(l1_error(&a, &flat(4, 3, 0.0)).is_err());
    }

    #[test]
    fn psnr_examples() {
        let a = flat(4, 4, 0.25);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert_eq!(psnr(&flat(4, 4, 0.0), &flat(4, 4, 1.0)).unwrap(), 0.0);
        assert!((psnr_from_mse(0.01) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_identical_is_exactly_one() {
        let img = Raster::from_fn(20, 17, 3, |x, y, c| ((x * y + c) % 13) as f32 / 13.0).unwrap();
        assert_eq!(ssim(&img, &img, &SsimParams::default()).unwrap(), 1.0);
    }

    #[test]
    fn ssim_flat_images_closed_form() {
        let p = SsimParams::default();
        let c1 = (p.k1 * p.dynamic_range).powi(2);
        let expected = (2.0 * 0.2 * 0.8 + c1) / (0.04 + 0.64 + c1);
        let v = ssim(&flat(16, 16, 0.2), &flat(16, 16, 0.8), &p).unwrap();
        assert!((v - expected).abs() < 1e-6, "{v} vs {expected}");
    }

    #[test]
    fn ssim_rejects_small_images() {
        assert!(ssim(
            &flat(10, 30, 0.0),
            &flat(10, 30, 0.0),
            &SsimParams::default()
        )
        .is_err());
    }

    #[test]
    fn gaussian_kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel(11, 1.5);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..5 {
            assert_eq!(k[i], k[10 - i]);
        }
    }

    #[test]
    fn frechet_one_dimensional_closed_form() {
        // Samples {m - s, m + s} have mean m and unbiased variance 2 s^2.
        let a = FeatureSet::from_vectors(&[vec![-1.0], vec![1.0]], "a").unwrap();
        let b = FeatureSet::from_vectors(&[vec![1.0], vec![5.0]], "b").unwrap();
        let (s1, s2) = (2f64.sqrt(), 8f64.sqrt());
        let expected = (0.0 - 3.0f64).powi(2) + (s1 - s2).powi(2);
        let d = frechet_distance(&a, &b, &FrechetParams::default()).unwrap();
        assert!((d - expected).abs() < 1e-9, "{d} vs {expected}");
    }

    #[test]
    fn frechet_errors() {
        let one = FeatureSet::from_vectors(&[vec![1.0, 2.0]], "one").unwrap();
        let two = FeatureSet::from_vectors(&[vec![1.0, 2.0], vec![0.0, 1.0]], "two").unwrap();
        let other = FeatureSet::from_vectors(&[vec![1.0], vec![0.0]], "other").unwrap();
        assert!(matches!(
            frechet_distance(&one, &two, &FrechetParams::default()),
            Err(Error::Metric(_))
        ));
        assert!(frechet_distance(&two, &other, &FrechetParams::default()).is_err());
        assert!(FeatureSet::new(1, 2, vec![0.0, f32::NAN], "nan").is_err());
        assert!(FeatureSet::from_vectors(&[vec![1.0], vec![1.0, 2.0]], "ragged").is_err());
    }

    #[test]
    fn metric_windows_drop_remainder() {
        let f: Vec<usize> = (0..47).collect();
        assert_eq!(video_windows_for_metrics(&f).len(), 2);
        assert_eq!(video_windows_for_metrics(&f[..33]).len(), 2);
        assert_eq!(video_windows_for_metrics(&f[..32]).len(), 2);
        assert!(video_windows_for_metrics(&f[..15]).is_empty());
        assert_eq!(video_windows_for_metrics(&f)[1][0], 16);
    }

    #[test]
    fn report_serializes_infinite_psnr_as_string() {
        let a = vec![flat(12, 12, 0.5)];
        let r = image_metric_report(&a, &a, &SsimParams::default()).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["psnr"], "inf");
        assert_eq!(json["ssim"], 1.0);
    }
}
