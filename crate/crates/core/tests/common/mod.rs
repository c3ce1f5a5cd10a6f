//! Helpers shared by the integration tests: direct reference metrics,
//! small pipeline configurations and directory comparison.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use refractbench::config::RunConfig;
use refractbench::image::Image;
use refractbench::rng::CounterRng;

/// Random image with uniform values, deterministic in `seed`.
pub fn random_image(w: usize, h: usize, seed: u64) -> Image {
    let rng = CounterRng::new(seed);
    Image::from_fn(w, h, 3, |x, y, c| rng.uniform_at(((y * w + x) * 3 + c) as u64) as f32)
}

/// `a` plus Gaussian noise of std `sigma`, clamped to [0, 1].
pub fn noisy(a: &Image, sigma: f64, seed: u64) -> Image {
    let rng = CounterRng::new(seed);
    Image {
        data: a
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| (v as f64 + sigma * rng.normal_pair_at(i as u64).0).clamp(0.0, 1.0) as f32)
            .collect(),
        ..a.clone()
    }
}

/// PSNR straight from the definition, peak 1.
pub fn reference_psnr(a: &Image, b: &Image) -> f64 {
    let mut sum = 0.0f64;
    for i in 0..a.data.len() {
        let d = f64::from(a.data[i]) - f64::from(b.data[i]);
        sum += d * d;
    }
    let mse = sum / a.data.len() as f64;
    10.0 * (1.0 / mse).log10()
}

fn reference_luma(img: &Image, x: usize, y: usize) -> f64 {
    let px = |c: usize| f64::from(img.get(x, y, c));
    0.299 * px(0) + 0.587 * px(1) + 0.114 * px(2)
}

/// Mean SSIM by visiting every 11x11 window directly, with two-pass
/// weighted moments.
pub fn reference_ssim(a: &Image, b: &Image) -> f64 {
    const R: usize = 5;
    let sigma = 1.5f64;
    let mut weights = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for (j, row) in weights.iter_mut().enumerate() {
        for (i, w) in row.iter_mut().enumerate() {
            let (dx, dy) = (i as f64 - R as f64, j as f64 - R as f64);
            *w = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            total += *w;
        }
    }
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut sum = 0.0;
    let mut count = 0usize;
    for cy in R..a.height - R {
        for cx in R..a.width - R {
            let (mut mx, mut my) = (0.0, 0.0);
            for j in 0..11 {
                for i in 0..11 {
                    let w = weights[j][i] / total;
                    mx += w * reference_luma(a, cx + i - R, cy + j - R);
                    my += w * reference_luma(b, cx + i - R, cy + j - R);
                }
            }
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for j in 0..11 {
                for i in 0..11 {
                    let w = weights[j][i] / total;
                    let dx = reference_luma(a, cx + i - R, cy + j - R) - mx;
                    let dy = reference_luma(b, cx + i - R, cy + j - R) - my;
                    vx += w * dx * dx;
                    vy += w * dy * dy;
                    cov += w * dx * dy;
                }
            }
            sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    sum / count as f64
}

/// A small run: ocean at low level, two procedural backgrounds, one profile.
pub fn smoke_config(output: &Path) -> RunConfig {
    let mut cfg = RunConfig::from_json(
        r#"{
            "wave_types": ["ocean"],
            "levels": ["low"],
            "profile_count": 1,
            "frame_count": 6,
            "resolution": 32,
            "synthetic_backgrounds": 2,
            "registration": {"iterations": 20}
        }"#,
    )
    .expect("valid config");
    cfg.output = Some(output.to_path_buf());
    cfg
}

/// Every file under `root` keyed by its relative path.
pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_path_buf();
                out.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Relative error `|g - g_fd| / |g_fd|` between the analytic registration
/// gradient and central differences on a random 16x16 instance with three
/// frames, cell size 4 and random offsets of a few pixels.
pub fn registration_gradient_error(seed: u64, cfg: &refractbench::restore::RegistrationConfig) -> f64 {
    use refractbench::restore::RegistrationProblem;
    let rng = CounterRng::new(seed);
    let (w, h, frames) = (16usize, 16usize, 3usize);
    let data: Vec<Vec<f64>> = (0..frames)
        .map(|f| {
            let s = rng.substream(f as u64);
            (0..w * h).map(|i| s.uniform_at(i as u64)).collect()
        })
        .collect();
    let cfg = refractbench::restore::RegistrationConfig {
        cell_size: 4,
        smoothness_weight: 0.05,
        magnitude_weight: 0.01,
        drift_weight: 0.5,
        ..cfg.clone()
    };
    let problem = RegistrationProblem::new(data, w, h, &cfg).expect("valid toy problem");
    let ps = rng.substream(100);
    let params: Vec<f64> = (0..problem.param_len()).map(|i| -3.0 + 6.0 * ps.uniform_at(i as u64)).collect();
    let pairs: Vec<(usize, usize)> = vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];
    let (_, grad) = problem.loss_and_gradient(&params, &pairs).expect("finite loss");
    let step = 1e-6;
    let mut diff2 = 0.0;
    let mut norm2 = 0.0;
    for k in 0..params.len() {
        let mut p = params.clone();
        p[k] += step;
        let up = problem.loss(&p, &pairs).expect("finite loss");
        p[k] -= 2.0 * step;
        let down = problem.loss(&p, &pairs).expect("finite loss");
        let fd = (up - down) / (2.0 * step);
        diff2 += (grad[k] - fd).powi(2);
        norm2 += fd * fd;
    }
    (diff2 / norm2).sqrt()
}
