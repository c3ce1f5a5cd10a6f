//! Full-reference image quality metrics.

pub mod report;

use crate::error::{Error, Result};
use crate::image::Image;

pub use report::{aggregate_table, evaluate_method, BenchmarkTable, MetricRow, Prediction};

/// PSNR reported for identical images.
pub const PSNR_IDENTICAL: f64 = f64::INFINITY;

pub fn mse(pred: &Image, gt: &Image) -> Result<f64> {
    pred.check_same_shape(gt)?;
    if pred.data.is_empty() {
        return Err(Error::Shape("empty image".into()));
    }
    let sum: f64 = pred
        .data
        .iter()
        .zip(&gt.data)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(sum / pred.data.len() as f64)
}

/// Peak signal-to-noise ratio in dB for peak value 1, over all channels.
pub fn psnr(pred: &Image, gt: &Image) -> Result<f64> {
    let m = mse(pred, gt)?;
    if m == 0.0 {
        return Ok(PSNR_IDENTICAL);
    }
    Ok(-10.0 * m.log10())
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable "valid" Gaussian filtering of a `w x h` plane.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w - SSIM_WINDOW + 1, h - SSIM_WINDOW + 1);
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = k.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|j| k[j] * horiz[(y + j) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM on Rec. 601 luma, 11x11 Gaussian window (sigma 1.5), dynamic
/// range 1, averaged over window positions fully inside the image.
pub fn ssim(pred: &Image, gt: &Image) -> Result<f64> {
    pred.check_same_shape(gt)?;
    let (w, h) = (pred.width, pred.height);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::Shape(format!("SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}")));
    }
    let (x, y) = (pred.luma(), gt.luma());
    let k = gaussian_kernel();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
    let (mx, my) = (filter_valid(&x, w, h, &k), filter_valid(&y, w, h, &k));
    let (sxx, syy, sxy) = (
        filter_valid(&xx, w, h, &k),
        filter_valid(&yy, w, h, &k),
        filter_valid(&xy, w, h, &k),
    );
    let (c1, c2) = (K1 * K1, K2 * K2);
    let n = mx.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_images() {
        let a = Image::from_fn(16, 12, 3, |x, y, c| ((x * 7 + y * 3 + c) % 11) as f32 / 10.0);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_IDENTICAL);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_offset_is_twenty_db() {
        let a = Image::filled(8, 8, 3, 0.25);
        let b = Image::filled(8, 8, 3, 0.35);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-5);
    }

    #[test]
    fn inverted_binary_image_is_anticorrelated() {
        let a = Image::from_fn(32, 32, 3, |x, y, _| (((x / 3) + (y / 5)) % 2) as f32);
        let b = Image::from_fn(32, 32, 3, |x, y, c| 1.0 - a.get(x, y, c));
        assert!(ssim(&a, &b).unwrap() < 0.0);
    }

    #[test]
    fn shape_errors() {
        let a = Image::filled(16, 16, 3, 0.1);
        let b = Image::filled(16, 15, 3, 0.1);
        assert!(matches!(psnr(&a, &b), Err(Error::Shape(_))));
        assert!(matches!(ssim(&a, &b), Err(Error::Shape(_))));
        let small = Image::filled(10, 30, 3, 0.1);
        assert!(matches!(ssim(&small, &small), Err(Error::Shape(_))));
    }
}
