//! Full-reference image quality: MSE/RMSE, SSIM and center-weighted SSIM on
//! Rec. 601 luminance, plus per-run reports.

use std::path::{Path, PathBuf};

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VtError};
use crate::image_ops::luminance_milli;
use crate::stream::analysis::WEIGHT_EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimParams {
    pub window: u32,
    pub stride: u32,
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range of the compared values.
    pub l: f64,
    /// Weight floor of WSSIM windows.
    pub epsilon: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self { window: 8, stride: 1, k1: 0.01, k2: 0.03, l: 255.0, epsilon: WEIGHT_EPSILON }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.l * self.k1).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.l * self.k2).powi(2)
    }

    fn validate(&self, width: u32, height: u32) -> Result<()> {
        if self.window == 0 || self.stride == 0 {
            return Err(VtError::Config("SSIM window and stride must be positive".into()));
        }
        if self.window > width || self.window > height {
            return Err(VtError::DimensionMismatch(format!(
                "SSIM window {} exceeds image {width}x{height}",
                self.window
            )));
        }
        Ok(())
    }
}

fn check_dims(x: &RgbImage, y: &RgbImage) -> Result<()> {
    if x.dimensions() != y.dimensions() {
        return Err(VtError::DimensionMismatch(format!("{:?} vs {:?}", x.dimensions(), y.dimensions())));
    }
    Ok(())
}

fn luma_plane(img: &RgbImage) -> Vec<i64> {
    img.pixels().map(|p| luminance_milli(p.0)).collect()
}

pub fn mse(x: &RgbImage, y: &RgbImage) -> Result<f64> {
    check_dims(x, y)?;
    let n = x.width() as u64 * x.height() as u64;
    if n == 0 {
        return Ok(0.0);
    }
    let sum: i128 = x
        .pixels()
        .zip(y.pixels())
        .map(|(a, b)| {
            let d = (luminance_milli(a.0) - luminance_milli(b.0)) as i128;
            d * d
        })
        .sum();
    Ok(sum as f64 / 1e6 / n as f64)
}

pub fn rmse(x: &RgbImage, y: &RgbImage) -> Result<f64> {
    mse(x, y).map(f64::sqrt)
}

/// Summed-area tables of x, y, x², y², xy with a zero first row and column.
struct Integrals {
    stride: usize,
    sx: Vec<i128>,
    sy: Vec<i128>,
    sxx: Vec<i128>,
    syy: Vec<i128>,
    sxy: Vec<i128>,
}

impl Integrals {
    fn new(lx: &[i64], ly: &[i64], w: usize, h: usize) -> Self {
        let stride = w + 1;
        let size = stride * (h + 1);
        let mut t = Self {
            stride,
            sx: vec![0; size],
            sy: vec![0; size],
            sxx: vec![0; size],
            syy: vec![0; size],
            sxy: vec![0; size],
        };
        for r in 0..h {
            let mut row = [0i128; 5];
            for c in 0..w {
                let (a, b) = (lx[r * w + c] as i128, ly[r * w + c] as i128);
                row[0] += a;
                row[1] += b;
                row[2] += a * a;
                row[3] += b * b;
                row[4] += a * b;
                let i = (r + 1) * stride + c + 1;
                let up = r * stride + c + 1;
                t.sx[i] = t.sx[up] + row[0];
                t.sy[i] = t.sy[up] + row[1];
                t.sxx[i] = t.sxx[up] + row[2];
                t.syy[i] = t.syy[up] + row[3];
                t.sxy[i] = t.sxy[up] + row[4];
            }
        }
        t
    }

    fn rect(&self, table: &[i128], x0: usize, y0: usize, n: usize) -> i128 {
        let s = self.stride;
        let (x1, y1) = (x0 + n, y0 + n);
        table[y1 * s + x1] - table[y0 * s + x1] - table[y1 * s + x0] + table[y0 * s + x0]
    }

    /// SSIM index of the `n`×`n` window at `(x0, y0)`.
    fn window_q(&self, x0: usize, y0: usize, n: usize, c1: f64, c2: f64) -> f64 {
        let count = (n * n) as i128;
        let sx = self.rect(&self.sx, x0, y0, n);
        let sy = self.rect(&self.sy, x0, y0, n);
        let sxx = self.rect(&self.sxx, x0, y0, n);
        let syy = self.rect(&self.syy, x0, y0, n);
        let sxy = self.rect(&self.sxy, x0, y0, n);
        // Integer numerators are exact; values carry a factor 1000 per luminance.
        let n2 = (count * count) as f64 * 1e6;
        let mu_x = sx as f64 / count as f64 / 1e3;
        let mu_y = sy as f64 / count as f64 / 1e3;
        let var_x = (count * sxx - sx * sx) as f64 / n2;
        let var_y = (count * syy - sy * sy) as f64 / n2;
        let cov = (count * sxy - sx * sy) as f64 / n2;
        ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))
    }
}

/// Per-window SSIM values with their window origins, in row-major order.
fn window_map(x: &RgbImage, y: &RgbImage, params: &SsimParams) -> Result<Vec<(u32, u32, f64)>> {
    check_dims(x, y)?;
    let (w, h) = x.dimensions();
    params.validate(w, h)?;
    let t = Integrals::new(&luma_plane(x), &luma_plane(y), w as usize, h as usize);
    let n = params.window as usize;
    let (c1, c2) = (params.c1(), params.c2());
    let rows: Vec<u32> = (0..=h - params.window).step_by(params.stride as usize).collect();
    let per_row: Vec<Vec<(u32, u32, f64)>> = rows
        .par_iter()
        .map(|&y0| {
            (0..=w - params.window)
                .step_by(params.stride as usize)
                .map(|x0| (x0, y0, t.window_q(x0 as usize, y0 as usize, n, c1, c2)))
                .collect()
        })
        .collect();
    Ok(per_row.into_iter().flatten().collect())
}

/// Mean SSIM over all window positions.
pub fn ssim(x: &RgbImage, y: &RgbImage, params: &SsimParams) -> Result<f64> {
    let map = window_map(x, y, params)?;
    Ok(map.iter().map(|w| w.2).sum::<f64>() / map.len() as f64)
}

/// SSIM with windows weighted by `max(ε, 1 − r/r_max)` of their midpoint's
/// distance to the image center.
pub fn wssim(x: &RgbImage, y: &RgbImage, params: &SsimParams) -> Result<f64> {
    let map = window_map(x, y, params)?;
    let (w, h) = (x.width() as f64, x.height() as f64);
    let (cx, cy) = (w / 2.0, h / 2.0);
    let r_max = 0.5 * w.hypot(h);
    let half = params.window as f64 / 2.0;
    let (mut num, mut den) = (0.0, 0.0);
    for &(x0, y0, q) in &map {
        let r = (x0 as f64 + half - cx).hypot(y0 as f64 + half - cy);
        let weight = (1.0 - r / r_max).max(params.epsilon);
        num += weight * q;
        den += weight;
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub frame: usize,
    pub rmse: f64,
    pub ssim: f64,
    pub wssim: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub records: Vec<QualityRecord>,
}

impl QualityReport {
    fn mean(&self, f: impl Fn(&QualityRecord) -> f64) -> f64 {
        if self.records.is_empty() {
            return f64::NAN;
        }
        self.records.iter().map(f).sum::<f64>() / self.records.len() as f64
    }

    pub fn mean_rmse(&self) -> f64 {
        self.mean(|r| r.rmse)
    }

    pub fn mean_ssim(&self) -> f64 {
        self.mean(|r| r.ssim)
    }

    pub fn mean_wssim(&self) -> f64 {
        self.mean(|r| r.wssim)
    }

    pub fn min_ssim(&self) -> f64 {
        self.records.iter().map(|r| r.ssim).fold(f64::INFINITY, f64::min)
    }

    pub fn ssim_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.ssim).collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        if self.records.is_empty() {
            w.write_record(["frame", "rmse", "ssim", "wssim"])?;
        }
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Compares a test sequence frame by frame against its reference.
pub fn report(reference: &[RgbImage], test: &[RgbImage], params: &SsimParams) -> Result<QualityReport> {
    if reference.len() != test.len() {
        return Err(VtError::DimensionMismatch(format!(
            "{} reference frames vs {} test frames",
            reference.len(),
            test.len()
        )));
    }
    let records = reference
        .iter()
        .zip(test)
        .enumerate()
        .map(|(frame, (r, t))| {
            Ok(QualityRecord { frame, rmse: rmse(r, t)?, ssim: ssim(r, t, params)?, wssim: wssim(r, t, params)? })
        })
        .collect::<Result<_>>()?;
    Ok(QualityReport { records })
}

/// Absolute luminance difference, scaled ×4 for visibility.
pub fn diff_image(x: &RgbImage, y: &RgbImage) -> Result<RgbImage> {
    check_dims(x, y)?;
    Ok(RgbImage::from_fn(x.width(), x.height(), |i, j| {
        let d = (luminance_milli(x.get_pixel(i, j).0) - luminance_milli(y.get_pixel(i, j).0)).abs();
        let v = (d * 4 / 1000).min(255) as u8;
        image::Rgb([v, v, v])
    }))
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:05}.png")
}

pub fn save_frames(dir: &Path, frames: &[RgbImage]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (i, f) in frames.iter().enumerate() {
        f.save(dir.join(frame_file_name(i)))?;
    }
    Ok(())
}

/// Loads every `frame_*.png` of a directory in name order.
pub fn load_frames(dir: &Path) -> Result<Vec<RgbImage>> {
    let mut paths: Vec<PathBuf> =
        std::fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    paths.retain(|p| {
        p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("frame_") && n.ends_with(".png"))
    });
    paths.sort();
    paths.iter().map(|p| Ok(image::open(p)?.to_rgb8())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_ops::luminance;
    use image::Rgb;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |_, _| Rgb(rng.gen()))
    }

    /// Direct per-window formula with floating-point sums.
    fn brute_ssim(x: &RgbImage, y: &RgbImage, p: &SsimParams) -> f64 {
        let (w, h) = x.dimensions();
        let n = p.window;
        let mut total = 0.0;
        let mut count = 0;
        for y0 in (0..=h - n).step_by(p.stride as usize) {
            for x0 in (0..=w - n).step_by(p.stride as usize) {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for j in y0..y0 + n {
                    for i in x0..x0 + n {
                        a.push(luminance(x.get_pixel(i, j).0));
                        b.push(luminance(y.get_pixel(i, j).0));
                    }
                }
                let m = a.len() as f64;
                let mx = a.iter().sum::<f64>() / m;
                let my = b.iter().sum::<f64>() / m;
                let vx = a.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / m;
                let vy = b.iter().map(|v| (v - my).powi(2)).sum::<f64>() / m;
                let cxy = a.iter().zip(&b).map(|(u, v)| (u - mx) * (v - my)).sum::<f64>() / m;
                let (c1, c2) = (p.c1(), p.c2());
                total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn mse_examples() {
        let x = RgbImage::from_pixel(2, 1, Rgb([0, 0, 0]));
        let y = RgbImage::from_fn(2, 1, |i, _| if i == 0 { Rgb([3, 3, 3]) } else { Rgb([4, 4, 4]) });
        assert!((mse(&x, &y).unwrap() - 12.5).abs() < 1e-12);
        assert!((rmse(&x, &y).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        let z = RgbImage::from_pixel(5, 5, Rgb([10, 10, 10]));
        let c = RgbImage::from_pixel(5, 5, Rgb([17, 17, 17]));
        assert!((mse(&z, &c).unwrap() - 49.0).abs() < 1e-9);
        assert!(mse(&x, &z).is_err());
    }

    #[test]
    fn ssim_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = SsimParams::default();
        for _ in 0..20 {
            let x = random_image(&mut rng, 16, 16);
            let y = random_image(&mut rng, 16, 16);
            let fast = ssim(&x, &y, &p).unwrap();
            assert!((fast - brute_ssim(&x, &y, &p)).abs() < 1e-9);
            assert!((-1.0..=1.0).contains(&fast));
            assert_eq!(fast, ssim(&y, &x, &p).unwrap());
            assert_eq!(ssim(&x, &x, &p).unwrap(), 1.0);
            assert_eq!(rmse(&x, &x).unwrap(), 0.0);
        }
        let strided = SsimParams { stride: 3, window: 5, ..p };
        let x = random_image(&mut rng, 20, 13);
        let y = random_image(&mut rng, 20, 13);
        assert!((ssim(&x, &y, &strided).unwrap() - brute_ssim(&x, &y, &strided)).abs() < 1e-9);
    }

    #[test]
    fn constant_images() {
        let p = SsimParams::default();
        let x = RgbImage::from_pixel(12, 12, Rgb([90, 90, 90]));
        assert_eq!(ssim(&x, &x.clone(), &p).unwrap(), 1.0);
        assert!(ssim(&RgbImage::new(4, 4), &RgbImage::new(4, 4), &p).is_err());
    }

    #[test]
    fn wssim_weights_center() {
        let p = SsimParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base = random_image(&mut rng, 64, 64);
        let mut center = base.clone();
        let mut corner = base.clone();
        for j in 0..12 {
            for i in 0..12 {
                center.put_pixel(26 + i, 26 + j, Rgb([0, 0, 0]));
                corner.put_pixel(i, j, Rgb([0, 0, 0]));
            }
        }
        assert_eq!(wssim(&base, &base, &p).unwrap(), 1.0);
        assert!(wssim(&base, &center, &p).unwrap() < wssim(&base, &corner, &p).unwrap());
        let flat = SsimParams { epsilon: 1.0, ..p };
        let (a, b) = (wssim(&base, &center, &flat).unwrap(), ssim(&base, &center, &flat).unwrap());
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn reports() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let frames: Vec<_> = (0..3).map(|_| random_image(&mut rng, 16, 16)).collect();
        let p = SsimParams::default();
        let same = report(&frames, &frames, &p).unwrap();
        assert_eq!(same.records.len(), 3);
        assert!(same.records.iter().all(|r| r.ssim == 1.0 && r.rmse == 0.0));
        let mut test = frames.clone();
        test[1] = random_image(&mut rng, 16, 16);
        let r = report(&frames, &test, &p).unwrap();
        let deviating: Vec<_> = r.records.iter().filter(|r| r.ssim != 1.0).map(|r| r.frame).collect();
        assert_eq!(deviating, vec![1]);
        assert!(report(&frames, &test[..2], &p).is_err());

        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("q.csv");
        r.write_csv(&csv_path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert!(text.starts_with("frame,rmse,ssim,wssim\n"));
        assert_eq!(text.lines().count(), 4);
        save_frames(dir.path(), &frames).unwrap();
        assert_eq!(load_frames(dir.path()).unwrap(), frames);
    }
}
