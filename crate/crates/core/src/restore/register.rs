//! Joint coarse-grid registration of all frames of a sequence.
//!
//! Every frame gets a grid of 2D offsets (one control point per `cell_size`
//! pixels at working resolution). Offsets are bilinearly expanded to a dense
//! field, each frame is resampled at `p + offset(p)`, and the grids are fitted
//! so that randomly paired warped frames agree photometrically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{resize_area, Image};
use crate::renderer::sample_bicubic;
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhotometricLoss {
    /// `sqrt(r^2 + eps^2)`, a smooth L1.
    Charbonnier,
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationConfig {
    pub working_size: usize,
    pub cell_size: usize,
    pub pairs_per_frame: usize,
    pub iterations: usize,
    /// Initial Adam step in working pixels.
    pub step_size: f64,
    /// Step at the last iteration, as a fraction of `step_size` (cosine decay).
    pub final_step_fraction: f64,
    /// Iterations of linear step warm-up.
    pub warmup_iterations: usize,
    pub photometric_weight: f64,
    pub smoothness_weight: f64,
    pub magnitude_weight: f64,
    pub drift_weight: f64,
    pub loss: PhotometricLoss,
    pub charbonnier_eps: f64,
    /// Gaussian pre-blur per stage, in working pixels; stages share iterations evenly.
    pub blur_schedule: Vec<f64>,
    pub checkpoint_interval: usize,
    /// Consecutive checkpoint increases that count as divergence.
    pub divergence_patience: usize,
    pub seed: u64,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            working_size: 256,
            cell_size: 16,
            pairs_per_frame: 12,
            iterations: 300,
            step_size: 0.5,
            final_step_fraction: 0.02,
            warmup_iterations: 20,
            photometric_weight: 1.0,
            smoothness_weight: 2e-3,
            magnitude_weight: 1e-4,
            drift_weight: 1.0,
            loss: PhotometricLoss::Charbonnier,
            charbonnier_eps: 1e-3,
            blur_schedule: vec![4.0, 2.0, 1.0, 0.0],
            checkpoint_interval: 10,
            divergence_patience: 5,
            seed: 0,
        }
    }
}

impl RegistrationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.into()));
        if self.working_size < 2 || self.cell_size == 0 {
            return bad("working_size must be >= 2 and cell_size >= 1");
        }
        if self.pairs_per_frame == 0 {
            return bad("pairs_per_frame must be >= 1");
        }
        let weights = [
            self.photometric_weight,
            self.smoothness_weight,
            self.magnitude_weight,
            self.drift_weight,
        ];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("loss weights must be finite and >= 0");
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return bad("step_size must be > 0");
        }
        if !(self.final_step_fraction > 0.0 && self.final_step_fraction <= 1.0) {
            return bad("final_step_fraction must be in (0, 1]");
        }
        if !(self.charbonnier_eps > 0.0) {
            return bad("charbonnier_eps must be > 0");
        }
        if self.blur_schedule.is_empty() || self.blur_schedule.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("blur_schedule needs at least one finite sigma >= 0");
        }
        if self.checkpoint_interval == 0 || self.divergence_patience == 0 {
            return bad("checkpoint_interval and divergence_patience must be >= 1");
        }
        Ok(())
    }
}

/// Per-frame control-point offsets in working-resolution pixels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationGrid {
    pub cols: usize,
    pub rows: usize,
    pub cell_size: usize,
    pub offsets: Vec<[f64; 2]>,
}

impl DeformationGrid {
    pub fn at(&self, col: usize, row: usize) -> [f64; 2] {
        self.offsets[row * self.cols + col]
    }

    pub fn mean(&self) -> [f64; 2] {
        let n = self.offsets.len() as f64;
        let s = self.offsets.iter().fold([0.0, 0.0], |a, o| [a[0] + o[0], a[1] + o[1]]);
        [s[0] / n, s[1] / n]
    }
}

/// Loss on the fixed evaluation pairs (unblurred frames) at a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: usize,
    pub sigma: f64,
    pub loss: f64,
    /// Rejected checkpoints roll back to the previous accepted state.
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct Registration {
    /// Original frames warped by their upsampled grids.
    pub frames: Vec<Image>,
    pub grids: Vec<DeformationGrid>,
    pub working_size: (usize, usize),
    pub trace: Vec<Checkpoint>,
}

/// Linear interpolation taps from control points to one pixel axis.
#[derive(Debug, Clone, Copy)]
struct Tap {
    a0: usize,
    a1: usize,
    w0: f64,
    w1: f64,
}

fn control_taps(pixels: usize, points: usize, cell: usize) -> Vec<Tap> {
    (0..pixels)
        .map(|x| {
            if points == 1 {
                return Tap { a0: 0, a1: 0, w0: 1.0, w1: 0.0 };
            }
            // control point a sits at pixel (a + 0.5) * cell - 0.5
            let u = ((x as f64 + 0.5) / cell as f64 - 0.5).clamp(0.0, (points - 1) as f64);
            let a0 = (u.floor() as usize).min(points - 2);
            let t = u - a0 as f64;
            Tap { a0, a1: a0 + 1, w0: 1.0 - t, w1: t }
        })
        .collect()
}

/// Bilinear sample of a plane with border clamping, plus its spatial gradient.
#[inline]
fn sample_with_gradient(img: &[f64], w: usize, h: usize, x: f64, y: f64) -> (f64, f64, f64) {
    let (xm, ym) = ((w - 1) as f64, (h - 1) as f64);
    let (cx, inside_x) = if x < 0.0 { (0.0, false) } else if x > xm { (xm, false) } else { (x, true) };
    let (cy, inside_y) = if y < 0.0 { (0.0, false) } else if y > ym { (ym, false) } else { (y, true) };
    let x0 = (cx as usize).min(w - 2);
    let y0 = (cy as usize).min(h - 2);
    let (fx, fy) = (cx - x0 as f64, cy - y0 as f64);
    let i00 = img[y0 * w + x0];
    let i10 = img[y0 * w + x0 + 1];
    let i01 = img[(y0 + 1) * w + x0];
    let i11 = img[(y0 + 1) * w + x0 + 1];
    let top = i00 + fx * (i10 - i00);
    let bottom = i01 + fx * (i11 - i01);
    let v = top + fy * (bottom - top);
    let gx = if inside_x { (1.0 - fy) * (i10 - i00) + fy * (i11 - i01) } else { 0.0 };
    let gy = if inside_y { bottom - top } else { 0.0 };
    (v, gx, gy)
}

fn gaussian_blur(src: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return src.to_vec();
    }
    let r = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * src[y * w + clamp(x as isize + i as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[clamp(y as isize + i as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// The registration objective on fixed working-resolution grayscale frames.
///
/// Parameters are laid out frame-major, then control point row-major, then
/// `(dx, dy)`.
pub struct RegistrationProblem {
    frames: Vec<Vec<f64>>,
    width: usize,
    height: usize,
    cols: usize,
    rows: usize,
    xtaps: Vec<Tap>,
    ytaps: Vec<Tap>,
    cfg: RegistrationConfig,
}

struct Warped {
    values: Vec<f64>,
    grad: Vec<[f64; 2]>,
}

impl RegistrationProblem {
    pub fn new(frames: Vec<Vec<f64>>, width: usize, height: usize, cfg: &RegistrationConfig) -> Result<Self> {
        cfg.validate()?;
        if frames.len() < 2 {
            return Err(Error::Input("registration needs at least 2 frames".into()));
        }
        if width < 2 || height < 2 {
            return Err(Error::Shape(format!("working frames must be at least 2x2, got {width}x{height}")));
        }
        if let Some(f) = frames.iter().find(|f| f.len() != width * height) {
            return Err(Error::Shape(format!("frame has {} samples, expected {}", f.len(), width * height)));
        }
        let cols = width.div_ceil(cfg.cell_size);
        let rows = height.div_ceil(cfg.cell_size);
        Ok(Self {
            xtaps: control_taps(width, cols, cfg.cell_size),
            ytaps: control_taps(height, rows, cfg.cell_size),
            frames,
            width,
            height,
            cols,
            rows,
            cfg: cfg.clone(),
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    pub fn param_len(&self) -> usize {
        self.frames.len() * self.cols * self.rows * 2
    }

    /// Same problem with every frame blurred by `sigma` working pixels.
    pub fn blurred(&self, sigma: f64) -> Self {
        Self {
            frames: self
                .frames
                .par_iter()
                .map(|f| gaussian_blur(f, self.width, self.height, sigma))
                .collect(),
            xtaps: self.xtaps.clone(),
            ytaps: self.ytaps.clone(),
            cfg: self.cfg.clone(),
            ..*self
        }
    }

    fn dense(&self, grid: &[f64]) -> Vec<[f64; 2]> {
        let (w, cols) = (self.width, self.cols);
        let rows_x: Vec<[f64; 2]> = (0..self.rows)
            .flat_map(|b| {
                self.xtaps.iter().map(move |t| {
                    let p0 = (b * cols + t.a0) * 2;
                    let p1 = (b * cols + t.a1) * 2;
                    [
                        t.w0 * grid[p0] + t.w1 * grid[p1],
                        t.w0 * grid[p0 + 1] + t.w1 * grid[p1 + 1],
                    ]
                })
            })
            .collect();
        let mut out = Vec::with_capacity(w * self.height);
        for t in &self.ytaps {
            for x in 0..w {
                let (r0, r1) = (rows_x[t.a0 * w + x], rows_x[t.a1 * w + x]);
                out.push([t.w0 * r0[0] + t.w1 * r1[0], t.w0 * r0[1] + t.w1 * r1[1]]);
            }
        }
        out
    }

    /// Adjoint of [`Self::dense`].
    fn dense_adjoint(&self, dense: &[[f64; 2]], out: &mut [f64]) {
        let (w, cols) = (self.width, self.cols);
        let mut rows_x = vec![[0.0; 2]; self.rows * w];
        for (y, t) in self.ytaps.iter().enumerate() {
            for x in 0..w {
                let d = dense[y * w + x];
                let r0 = &mut rows_x[t.a0 * w + x];
                r0[0] += t.w0 * d[0];
                r0[1] += t.w0 * d[1];
                let r1 = &mut rows_x[t.a1 * w + x];
                r1[0] += t.w1 * d[0];
                r1[1] += t.w1 * d[1];
            }
        }
        for b in 0..self.rows {
            for (x, t) in self.xtaps.iter().enumerate() {
                let d = rows_x[b * w + x];
                let p0 = (b * cols + t.a0) * 2;
                let p1 = (b * cols + t.a1) * 2;
                out[p0] += t.w0 * d[0];
                out[p0 + 1] += t.w0 * d[1];
                out[p1] += t.w1 * d[0];
                out[p1 + 1] += t.w1 * d[1];
            }
        }
    }

    fn warp_frame(&self, frame: usize, grid: &[f64]) -> Warped {
        let (w, h) = (self.width, self.height);
        let dense = self.dense(grid);
        let mut values = Vec::with_capacity(w * h);
        let mut grad = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let d = dense[y * w + x];
                let (v, gx, gy) = sample_with_gradient(&self.frames[frame], w, h, x as f64 + d[0], y as f64 + d[1]);
                values.push(v);
                grad.push([gx, gy]);
            }
        }
        Warped { values, grad }
    }

    /// Sums the photometric penalty of `a - b` and writes its derivative.
    /// Four interleaved partial sums let the loop vectorise.
    fn rho_slice(&self, a: &[f64], b: &[f64], deriv: &mut [f64]) -> f64 {
        let mut lanes = [0.0f64; 4];
        match self.cfg.loss {
            PhotometricLoss::Charbonnier => {
                let e2 = self.cfg.charbonnier_eps * self.cfg.charbonnier_eps;
                for (q, ((d, x), y)) in deriv.iter_mut().zip(a).zip(b).enumerate() {
                    let r = x - y;
                    let s = (r * r + e2).sqrt();
                    lanes[q & 3] += s;
                    *d = r / s;
                }
            }
            PhotometricLoss::Squared => {
                for (q, ((d, x), y)) in deriv.iter_mut().zip(a).zip(b).enumerate() {
                    let r = x - y;
                    lanes[q & 3] += r * r;
                    *d = 2.0 * r;
                }
            }
        }
        (lanes[0] + lanes[1]) + (lanes[2] + lanes[3])
    }

    /// Neumann-boundary grid Laplacian of one channel.
    fn laplacian(&self, grid: &[f64], channel: usize) -> Vec<f64> {
        let (cols, rows) = (self.cols, self.rows);
        let mut out = vec![0.0; cols * rows];
        for b in 0..rows {
            for a in 0..cols {
                let c = grid[(b * cols + a) * 2 + channel];
                let mut s = 0.0;
                let mut nb = |aa: usize, bb: usize| s += grid[(bb * cols + aa) * 2 + channel] - c;
                if a > 0 {
                    nb(a - 1, b);
                }
                if a + 1 < cols {
                    nb(a + 1, b);
                }
                if b > 0 {
                    nb(a, b - 1);
                }
                if b + 1 < rows {
                    nb(a, b + 1);
                }
                out[b * cols + a] = s;
            }
        }
        out
    }

    /// Loss and its analytic gradient for the given ordered frame pairs.
    pub fn loss_and_gradient(&self, params: &[f64], pairs: &[(usize, usize)]) -> Result<(f64, Vec<f64>)> {
        self.evaluate(params, pairs, true)
    }

    pub fn loss(&self, params: &[f64], pairs: &[(usize, usize)]) -> Result<f64> {
        Ok(self.evaluate(params, pairs, false)?.0)
    }

    fn evaluate(&self, params: &[f64], pairs: &[(usize, usize)], want_grad: bool) -> Result<(f64, Vec<f64>)> {
        if params.len() != self.param_len() {
            return Err(Error::Shape(format!("{} parameters, expected {}", params.len(), self.param_len())));
        }
        let f = self.frames.len();
        if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= f || j >= f) {
            return Err(Error::Input(format!("pair ({i}, {j}) out of range for {f} frames")));
        }
        let g = self.cols * self.rows;
        let stride = 2 * g;
        let n = self.width * self.height;
        let mut grad = vec![0.0; if want_grad { params.len() } else { 0 }];
        let mut loss = 0.0;

        if self.cfg.photometric_weight > 0.0 && !pairs.is_empty() {
            let mut used = vec![false; f];
            for &(i, j) in pairs {
                used[i] = true;
                used[j] = true;
            }
            let warped: Vec<Option<Warped>> = (0..f)
                .into_par_iter()
                .map(|k| used[k].then(|| self.warp_frame(k, &params[k * stride..(k + 1) * stride])))
                .collect();
            let scale = self.cfg.photometric_weight / (pairs.len() as f64 * n as f64);
            // dL/dW per frame, accumulated row band by row band so the
            // reduction order never depends on the thread count
            let band = 16usize;
            let bands: Vec<(f64, Vec<(usize, usize, Vec<f64>)>)> = (0..self.height.div_ceil(band))
                .into_par_iter()
                .map(|bi| {
                    let (lo, hi) = (bi * band * self.width, ((bi + 1) * band).min(self.height) * self.width);
                    let len = hi - lo;
                    let mut acc: Vec<Vec<f64>> = vec![Vec::new(); f];
                    let mut deriv = vec![0.0; len];
                    let mut part = 0.0;
                    for &(i, j) in pairs {
                        let wi = &warped[i].as_ref().expect("warped above").values[lo..hi];
                        let wj = &warped[j].as_ref().expect("warped above").values[lo..hi];
                        part += self.rho_slice(wi, wj, &mut deriv);
                        if want_grad {
                            for (k, sign) in [(i, 1.0), (j, -1.0)] {
                                if acc[k].is_empty() {
                                    acc[k] = vec![0.0; len];
                                }
                                acc[k].iter_mut().zip(&deriv).for_each(|(a, d)| *a += sign * d);
                            }
                        }
                    }
                    let acc = acc
                        .into_iter()
                        .enumerate()
                        .filter(|(_, a)| !a.is_empty())
                        .map(|(k, a)| (k, lo, a))
                        .collect();
                    (part, acc)
                })
                .collect();
            let mut dw: Vec<Vec<f64>> = vec![Vec::new(); if want_grad { f } else { 0 }];
            for (part, acc) in bands {
                loss += scale * part;
                for (k, lo, a) in acc {
                    let buf = &mut dw[k];
                    if buf.is_empty() {
                        buf.resize(n, 0.0);
                    }
                    buf[lo..lo + a.len()].iter_mut().zip(a).for_each(|(b, v)| *b += v);
                }
            }
            if want_grad {
                let per_frame: Vec<Vec<f64>> = (0..f)
                    .into_par_iter()
                    .map(|k| {
                        let mut out = vec![0.0; stride];
                        if let (Some(wk), false) = (&warped[k], dw[k].is_empty()) {
                            let dense: Vec<[f64; 2]> = (0..n)
                                .map(|p| {
                                    let s = scale * dw[k][p];
                                    [s * wk.grad[p][0], s * wk.grad[p][1]]
                                })
                                .collect();
                            self.dense_adjoint(&dense, &mut out);
                        }
                        out
                    })
                    .collect();
                for (k, v) in per_frame.into_iter().enumerate() {
                    grad[k * stride..(k + 1) * stride].iter_mut().zip(v).for_each(|(a, b)| *a += b);
                }
            }
        }

        let per_point = 1.0 / (f as f64 * g as f64);
        if self.cfg.magnitude_weight > 0.0 {
            let c = self.cfg.magnitude_weight * per_point;
            loss += c * params.iter().map(|p| p * p).sum::<f64>();
            if want_grad {
                grad.iter_mut().zip(params).for_each(|(a, p)| *a += 2.0 * c * p);
            }
        }
        if self.cfg.smoothness_weight > 0.0 {
            let c = self.cfg.smoothness_weight * per_point;
            for k in 0..f {
                let grid = &params[k * stride..(k + 1) * stride];
                for ch in 0..2 {
                    let lap = self.laplacian(grid, ch);
                    loss += c * lap.iter().map(|v| v * v).sum::<f64>();
                    if want_grad {
                        // the Laplacian is symmetric, so its adjoint is itself
                        let mut interleaved = vec![0.0; stride];
                        lap.iter().enumerate().for_each(|(q, v)| interleaved[q * 2 + ch] = *v);
                        let back = self.laplacian(&interleaved, ch);
                        for q in 0..g {
                            grad[k * stride + q * 2 + ch] += 2.0 * c * back[q];
                        }
                    }
                }
            }
        }
        if self.cfg.drift_weight > 0.0 {
            // gauge: the mean deformation across frames stays at zero
            let c = self.cfg.drift_weight / g as f64;
            for q in 0..stride {
                let mean = (0..f).map(|k| params[k * stride + q]).sum::<f64>() / f as f64;
                loss += c * mean * mean;
                if want_grad {
                    for k in 0..f {
                        grad[k * stride + q] += 2.0 * c * mean / f as f64;
                    }
                }
            }
        }
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("registration loss is {loss}")));
        }
        Ok((loss, grad))
    }

    /// For every frame, `min(per_frame, F - 1)` distinct partners drawn uniformly.
    pub fn sample_pairs(&self, rng: CounterRng, per_frame: usize) -> Vec<(usize, usize)> {
        let f = self.frames.len();
        let m = per_frame.min(f - 1);
        let mut pairs = Vec::with_capacity(f * m);
        for i in 0..f {
            let mut cursor = rng.substream(i as u64).cursor();
            // partial Fisher-Yates over the other frames
            let mut others: Vec<usize> = (0..f).filter(|&j| j != i).collect();
            for s in 0..m {
                let pick = s + cursor.below((others.len() - s) as u64) as usize;
                others.swap(s, pick);
                pairs.push((i, others[s]));
            }
        }
        pairs
    }
}

#[derive(Clone)]
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-12;

    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn rescale(&mut self, ratio: f64) {
        self.m.iter_mut().for_each(|m| *m *= ratio);
        self.v.iter_mut().for_each(|v| *v *= ratio * ratio);
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Monotone safeguard: a checkpoint whose loss rose restores the last accepted
/// state and halves the step.
struct Guard {
    saved: (Vec<f64>, Adam),
    last: f64,
    rises: usize,
    damping: f64,
}

impl Guard {
    #[allow(clippy::too_many_arguments)]
    fn checkpoint(
        &mut self,
        base: &RegistrationProblem,
        eval_pairs: &[(usize, usize)],
        cfg: &RegistrationConfig,
        iteration: usize,
        sigma: f64,
        params: &mut Vec<f64>,
        adam: &mut Adam,
        trace: &mut Vec<Checkpoint>,
    ) -> Result<()> {
        let loss = base.loss(params, eval_pairs)?;
        let accepted = loss <= self.last;
        trace.push(Checkpoint { iteration, sigma, loss, accepted });
        if accepted {
            self.saved = (params.clone(), adam.clone());
            self.last = loss;
            self.rises = 0;
            return Ok(());
        }
        self.rises += 1;
        if self.rises >= cfg.divergence_patience {
            return Err(Error::Optimization {
                message: format!("loss rose on {} consecutive checkpoints at iteration {iteration}", self.rises),
                trace: trace.iter().map(|c| c.loss).collect(),
            });
        }
        params.clone_from(&self.saved.0);
        *adam = self.saved.1.clone();
        self.damping *= 0.5;
        Ok(())
    }
}

fn working_luma(frame: &Image, w: usize, h: usize) -> Vec<f64> {
    let luma = Image {
        width: frame.width,
        height: frame.height,
        channels: 1,
        data: frame.luma().into_iter().map(|v| v as f32).collect(),
    };
    let small = if (w, h) == (frame.width, frame.height) { luma } else { resize_area(&luma, w, h) };
    small.data.into_iter().map(f64::from).collect()
}

/// Catmull-Rom interpolation of a control-point row at fractional index `u`.
fn catmull_rom(get: impl Fn(usize) -> f64, n: usize, u: f64) -> f64 {
    let u = u.clamp(0.0, (n - 1) as f64);
    let i = u as isize;
    let t = u - i as f64;
    let at = |k: isize| get(k.clamp(0, n as isize - 1) as usize);
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    0.5 * (2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t * t * t)
}

/// Bicubic expansion of a working-resolution grid to a `width x height` field
/// in original pixels.
pub(crate) fn upsample_grid(grid: &DeformationGrid, work: (usize, usize), width: usize, height: usize) -> Vec<[f64; 2]> {
    let sx = width as f64 / work.0 as f64;
    let sy = height as f64 / work.1 as f64;
    let cell = grid.cell_size as f64;
    let index = |p: usize, s: f64| ((p as f64 + 0.5) / s) / cell - 0.5;
    // interpolate along x for every control row, then along y
    let rows_x: Vec<Vec<[f64; 2]>> = (0..grid.rows)
        .map(|b| {
            (0..width)
                .map(|x| {
                    let u = index(x, sx);
                    [0, 1].map(|ch| catmull_rom(|a| grid.at(a, b)[ch], grid.cols, u))
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        let v = index(y, sy);
        for x in 0..width {
            let o = [0, 1].map(|ch| catmull_rom(|b| rows_x[b][x][ch], grid.rows, v));
            out.push([o[0] * sx, o[1] * sy]);
        }
    }
    out
}

/// Warps a full-resolution frame by a grid fitted at working size `work`.
pub fn warp_with_grid(frame: &Image, grid: &DeformationGrid, work: (usize, usize)) -> Image {
    warp_image(frame, &upsample_grid(grid, work, frame.width, frame.height))
}

fn warp_image(img: &Image, dense: &[[f64; 2]]) -> Image {
    let mut out = Image::new(img.width, img.height, img.channels);
    for y in 0..img.height {
        for x in 0..img.width {
            let d = dense[y * img.width + x];
            for c in 0..img.channels {
                out.set(x, y, c, sample_bicubic(img, x as f64 + d[0], y as f64 + d[1], c) as f32);
            }
        }
    }
    out
}

/// Jointly registers all frames and returns them warped at full resolution.
pub fn grid_register(frames: &[Image], cfg: &RegistrationConfig) -> Result<Registration> {
    cfg.validate()?;
    if frames.len() < 2 {
        return Err(Error::Input(format!("registration needs at least 2 frames, got {}", frames.len())));
    }
    frames.iter().try_for_each(|f| frames[0].check_same_shape(f))?;
    let (w0, h0) = (frames[0].width, frames[0].height);
    let work = (w0.min(cfg.working_size), h0.min(cfg.working_size));
    let lumas: Vec<Vec<f64>> = frames.par_iter().map(|f| working_luma(f, work.0, work.1)).collect();
    let base = RegistrationProblem::new(lumas, work.0, work.1, cfg)?;

    let rng = CounterRng::new(cfg.seed);
    let eval_pairs = base.sample_pairs(rng.substream(u64::MAX), cfg.pairs_per_frame);
    let mut params = vec![0.0; base.param_len()];
    let mut adam = Adam::new(params.len());
    let mut trace = Vec::new();
    let mut guard = Guard {
        saved: (params.clone(), adam.clone()),
        last: f64::INFINITY,
        rises: 0,
        damping: 1.0,
    };
    let stages = cfg.blur_schedule.len();
    let mut it = 0usize;
    let mut last_norm = 0.0;
    for (si, &sigma) in cfg.blur_schedule.iter().enumerate() {
        let end = cfg.iterations * (si + 1) / stages;
        let problem = base.blurred(sigma);
        let mut stage_start = si > 0;
        while it < end {
            if it.is_multiple_of(cfg.checkpoint_interval) {
                guard.checkpoint(&base, &eval_pairs, cfg, it, sigma, &mut params, &mut adam, &mut trace)?;
            }
            let pairs = problem.sample_pairs(rng.substream(it as u64), cfg.pairs_per_frame);
            let (_, grad) = problem.loss_and_gradient(&params, &pairs)?;
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if std::mem::take(&mut stage_start) && last_norm > 0.0 && norm > 0.0 {
                // sharper frames give larger gradients; keep the moments on the same scale
                adam.rescale(norm / last_norm);
            }
            last_norm = norm;
            let progress = it as f64 / cfg.iterations.max(1) as f64;
            let fr = cfg.final_step_fraction;
            let warm = ((it + 1) as f64 / (cfg.warmup_iterations + 1) as f64).min(1.0);
            let decay = fr + (1.0 - fr) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
            adam.step(&mut params, &grad, guard.damping * warm * cfg.step_size * decay);
            it += 1;
        }
    }
    let last_sigma = *cfg.blur_schedule.last().expect("validated non-empty");
    guard.checkpoint(&base, &eval_pairs, cfg, it, last_sigma, &mut params, &mut adam, &mut trace)?;

    let (cols, rows) = base.grid_shape();
    let stride = cols * rows * 2;
    let grids: Vec<DeformationGrid> = params
        .chunks(stride)
        .map(|c| DeformationGrid {
            cols,
            rows,
            cell_size: cfg.cell_size,
            offsets: c.chunks(2).map(|p| [p[0], p[1]]).collect(),
        })
        .collect();
    let registered = frames
        .par_iter()
        .zip(&grids)
        .map(|(f, g)| warp_with_grid(f, g, work))
        .collect();
    Ok(Registration {
        frames: registered,
        grids,
        working_size: work,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize, shift: f64) -> Vec<f64> {
        (0..h)
            .flat_map(|y| {
                (0..w).map(move |x| {
                    let (x, y) = (x as f64 - shift, y as f64);
                    0.5 + 0.2 * (0.31 * x + 0.17 * y).sin() + 0.15 * (0.23 * x - 0.41 * y).cos()
                        + 0.1 * (0.07 * x * 0.9 + 0.05 * y).sin()
                })
            })
            .collect()
    }

    #[test]
    fn taps_interpolate_control_points() {
        let taps = control_taps(32, 2, 16);
        // pixel 7.5 would sit exactly on control point 0
        assert_eq!((taps[0].a0, taps[0].w0), (0, 1.0));
        assert_eq!((taps[31].a1, taps[31].w1), (1, 1.0));
        let t = taps[15];
        assert!((t.w0 + t.w1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dense_adjoint_matches_inner_product() {
        let cfg = RegistrationConfig { cell_size: 4, ..Default::default() };
        let p = RegistrationProblem::new(vec![vec![0.0; 13 * 11]; 2], 13, 11, &cfg).unwrap();
        let stride = p.param_len() / 2;
        let grid: Vec<f64> = (0..stride).map(|i| ((i * 37 % 17) as f64 - 8.0) / 5.0).collect();
        let field: Vec<[f64; 2]> = (0..13 * 11).map(|i| [(i % 7) as f64 - 3.0, (i % 5) as f64 * 0.3]).collect();
        let lhs: f64 = p.dense(&grid).iter().zip(&field).map(|(a, b)| a[0] * b[0] + a[1] * b[1]).sum();
        let mut adj = vec![0.0; stride];
        p.dense_adjoint(&field, &mut adj);
        let rhs: f64 = grid.iter().zip(&adj).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn pair_sampling_draws_distinct_partners() {
        let cfg = RegistrationConfig::default();
        let p = RegistrationProblem::new(vec![vec![0.0; 4]; 20], 2, 2, &cfg).unwrap();
        let pairs = p.sample_pairs(CounterRng::new(3), 12);
        assert_eq!(pairs.len(), 20 * 12);
        for i in 0..20 {
            let mut partners: Vec<usize> = pairs.iter().filter(|q| q.0 == i).map(|q| q.1).collect();
            assert!(partners.iter().all(|&j| j != i));
            partners.sort();
            partners.dedup();
            assert_eq!(partners.len(), 12);
        }
        let few = RegistrationProblem::new(vec![vec![0.0; 4]; 3], 2, 2, &cfg).unwrap();
        assert_eq!(few.sample_pairs(CounterRng::new(3), 12).len(), 3 * 2);
    }

    #[test]
    fn static_sequence_keeps_zero_grids() {
        let img = Image::from_fn(48, 48, 3, |x, y, c| {
            (0.5 + 0.3 * ((x as f32) * 0.4).sin() * ((y as f32) * 0.3 + c as f32).cos()).clamp(0.0, 1.0)
        });
        let cfg = RegistrationConfig { iterations: 20, ..Default::default() };
        let r = grid_register(&[img.clone(), img.clone(), img.clone()], &cfg).unwrap();
        assert!(r.grids.iter().all(|g| g.offsets.iter().all(|o| *o == [0.0, 0.0])));
        assert!(r.frames.iter().all(|f| *f == img));
    }

    #[test]
    fn regularizers_alone_pull_offsets_to_zero() {
        let cfg = RegistrationConfig {
            cell_size: 4,
            photometric_weight: 0.0,
            magnitude_weight: 1.0,
            ..Default::default()
        };
        let p = RegistrationProblem::new(vec![textured(16, 16, 0.0), textured(16, 16, 1.0)], 16, 16, &cfg).unwrap();
        let mut params: Vec<f64> = (0..p.param_len()).map(|i| ((i * 13 % 7) as f64 - 3.0) * 0.7).collect();
        let mut adam = Adam::new(params.len());
        for k in 0..2000 {
            let (_, g) = p.loss_and_gradient(&params, &[]).unwrap();
            adam.step(&mut params, &g, 0.05 * (1.0 - k as f64 / 2000.0) + 1e-4);
        }
        let max = params.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-2, "{max}");
    }

    #[test]
    fn too_few_frames_is_an_input_error() {
        let img = Image::filled(8, 8, 3, 0.5);
        assert!(matches!(grid_register(&[img], &RegistrationConfig::default()), Err(Error::Input(_))));
    }

    #[test]
    fn upsampled_grid_reproduces_constant_offsets() {
        let g = DeformationGrid { cols: 4, rows: 4, cell_size: 16, offsets: vec![[1.5, -0.5]; 16] };
        let d = upsample_grid(&g, (64, 64), 128, 128);
        assert!(d.iter().all(|o| (o[0] - 3.0).abs() < 1e-12 && (o[1] + 1.0).abs() < 1e-12));
    }
}
