//! Background warping, sequence rendering and the on-disk dataset formats.

pub mod dataset;
pub mod io;
pub mod raw;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::{resize_area, Image};
use crate::refraction::{displacement_field, CalibrationRecord, DisplacementField, RefractionParams, SeverityLevel};
use crate::rng::CounterRng;
use crate::wavefield::{ProfileGenerator, WaveType};

pub use io::{read_sequence, write_sequence};
pub use raw::{read_raw, write_raw, RawField};

pub const TOOLCHAIN_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Square RGB background with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    pub id: String,
    pub image: Image,
}

impl Background {
    pub fn new(id: impl Into<String>, image: Image) -> Result<Self> {
        if image.channels != 3 {
            return Err(Error::Shape(format!("background needs 3 channels, got {}", image.channels)));
        }
        if image.data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::Input("background values must be finite and in [0, 1]".into()));
        }
        Ok(Self { id: id.into(), image })
    }

    pub fn size(&self) -> usize {
        self.image.width
    }
}

/// Decodes an 8/16-bit image and area-resamples it to `size x size`.
pub fn ingest_background(path: &Path, size: usize) -> Result<Background> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load_from_memory(&bytes).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let img = resize_area(&Image::from_dynamic(&decoded), size, size);
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "background".into());
    let mut img = img;
    for v in &mut img.data {
        *v = v.clamp(0.0, 1.0);
    }
    Background::new(id, img)
}

/// Procedural textured background: smooth multi-octave colour noise with
/// random discs, bars and a fine grating, fully determined by `seed`.
pub fn synthetic_background(seed: u64, size: usize) -> Background {
    let rng = CounterRng::new(seed).substream(0x4247);
    let mut cur = rng.cursor();
    let n = size as f64;
    let mut img = Image::new(size, size, 3);

    // value noise over a few lattice resolutions
    let octaves = [(4usize, 0.45f64), (8, 0.3), (16, 0.15), (32, 0.1)];
    for (oi, &(cells, weight)) in octaves.iter().enumerate() {
        let lattice = CounterRng::new(seed).substream(0x4e4f_4953 + oi as u64);
        let node = |i: usize, j: usize, c: usize| -> f64 {
            lattice.uniform_at(((i % cells) * cells + (j % cells)) as u64 * 3 + c as u64)
        };
        for y in 0..size {
            let fy = y as f64 / n * cells as f64;
            let (j0, ty) = (fy.floor() as usize, fy.fract());
            let sy = ty * ty * (3.0 - 2.0 * ty);
            for x in 0..size {
                let fx = x as f64 / n * cells as f64;
                let (i0, tx) = (fx.floor() as usize, fx.fract());
                let sx = tx * tx * (3.0 - 2.0 * tx);
                for c in 0..3 {
                    let a = node(i0, j0, c) * (1.0 - sx) + node(i0 + 1, j0, c) * sx;
                    let b = node(i0, j0 + 1, c) * (1.0 - sx) + node(i0 + 1, j0 + 1, c) * sx;
                    let v = img.get(x, y, c) as f64 + weight * (a * (1.0 - sy) + b * sy);
                    img.set(x, y, c, v as f32);
                }
            }
        }
    }

    let discs = 6 + cur.below(6) as usize;
    for _ in 0..discs {
        let (cx, cy) = (cur.range(0.0, n), cur.range(0.0, n));
        let r = cur.range(0.04, 0.15) * n;
        let color = [cur.uniform(), cur.uniform(), cur.uniform()];
        for y in 0..size {
            for x in 0..size {
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                let cover = (r - d + 0.5).clamp(0.0, 1.0);
                if cover > 0.0 {
                    for c in 0..3 {
                        let v = img.get(x, y, c) as f64 * (1.0 - cover) + color[c] * cover;
                        img.set(x, y, c, v as f32);
                    }
                }
            }
        }
    }

    let bars = 3 + cur.below(4) as usize;
    for _ in 0..bars {
        let (x0, y0) = (cur.range(0.0, n * 0.8), cur.range(0.0, n * 0.8));
        let (w, h) = (cur.range(0.05, 0.25) * n, cur.range(0.02, 0.08) * n);
        let shade = cur.uniform();
        // pixel coverage of the rectangle keeps its edges antialiased
        let overlap = |p: usize, a: f64, b: f64| ((p + 1) as f64).min(b) - (p as f64).max(a);
        for y in (y0 as usize)..((y0 + h).ceil() as usize).min(size) {
            let cy = overlap(y, y0, y0 + h).clamp(0.0, 1.0);
            for x in (x0 as usize)..((x0 + w).ceil() as usize).min(size) {
                let cover = cy * overlap(x, x0, x0 + w).clamp(0.0, 1.0);
                for c in 0..3 {
                    let v = img.get(x, y, c) as f64 * (1.0 - cover) + shade * cover;
                    img.set(x, y, c, v as f32);
                }
            }
        }
    }

    // a grating patch gives the registration something to lock onto
    let (gx, gy) = (cur.range(0.1, 0.6) * n, cur.range(0.1, 0.6) * n);
    let period = cur.range(6.0, 14.0) * n / 128.0;
    let angle = cur.range(0.0, std::f64::consts::PI);
    let extent = 0.3 * n;
    for y in (gy as usize)..((gy + extent) as usize).min(size) {
        for x in (gx as usize)..((gx + extent) as usize).min(size) {
            let t = (x as f64 * angle.cos() + y as f64 * angle.sin()) / period;
            let v = 0.5 + 0.4 * (std::f64::consts::TAU * t).sin();
            for c in 0..3 {
                let old = img.get(x, y, c) as f64;
                img.set(x, y, c, (0.5 * old + 0.5 * v) as f32);
            }
        }
    }

    let (lo, hi) = img
        .data
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = (hi - lo).max(1e-6);
    for v in &mut img.data {
        *v = ((*v - lo) / span).clamp(0.0, 1.0);
    }
    Background {
        id: format!("synth_{seed:03}"),
        image: img,
    }
}

/// Bilinear sample with border replication.
#[inline]
pub fn sample_bilinear(img: &Image, x: f64, y: f64, c: usize) -> f64 {
    let xm = (img.width - 1) as f64;
    let ym = (img.height - 1) as f64;
    let x = x.clamp(0.0, xm);
    let y = y.clamp(0.0, ym);
    let x0 = (x as usize).min(img.width.saturating_sub(2));
    let y0 = (y as usize).min(img.height.saturating_sub(2));
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let (tx, ty) = (x - x0 as f64, y - y0 as f64);
    let a = img.get(x0, y0, c) as f64 * (1.0 - tx) + img.get(x1, y0, c) as f64 * tx;
    let b = img.get(x0, y1, c) as f64 * (1.0 - tx) + img.get(x1, y1, c) as f64 * tx;
    a * (1.0 - ty) + b * ty
}

/// Catmull-Rom bicubic sample with border replication, clamped to `[0, 1]`.
pub fn sample_bicubic(img: &Image, x: f64, y: f64, c: usize) -> f64 {
    let x = x.clamp(0.0, (img.width - 1) as f64);
    let y = y.clamp(0.0, (img.height - 1) as f64);
    let (xi, yi) = (x as isize, y as isize);
    let (tx, ty) = (x - xi as f64, y - yi as f64);
    let weights = |t: f64| {
        let (t2, t3) = (t * t, t * t * t);
        [
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ]
    };
    let (wx, wy) = (weights(tx), weights(ty));
    let at = |i: isize, j: isize| {
        let i = i.clamp(0, img.width as isize - 1) as usize;
        let j = j.clamp(0, img.height as isize - 1) as usize;
        img.get(i, j, c) as f64
    };
    let mut v = 0.0;
    for (dj, wyj) in wy.iter().enumerate() {
        let row: f64 = wx.iter().enumerate().map(|(di, wxi)| wxi * at(xi + di as isize - 1, yi + dj as isize - 1)).sum();
        v += wyj * row;
    }
    v.clamp(0.0, 1.0)
}

/// Samples the background at each pixel position plus its displacement.
pub fn warp(bg: &Image, f: &DisplacementField) -> Result<Image> {
    if bg.width != f.width || bg.height != f.height {
        return Err(Error::Shape(format!(
            "background {}x{} vs displacement {}x{}",
            bg.width, bg.height, f.width, f.height
        )));
    }
    let (w, h) = (bg.width as f64, bg.height as f64);
    let mut out = Image::new(bg.width, bg.height, bg.channels);
    for y in 0..bg.height {
        for x in 0..bg.width {
            let o = f.offsets[y * bg.width + x];
            let (sx, sy) = (x as f64 + o[0] as f64 * w, y as f64 + o[1] as f64 * h);
            for c in 0..bg.channels {
                out.set(x, y, c, sample_bilinear(bg, sx, sy, c) as f32);
            }
        }
    }
    Ok(out)
}

/// Provenance written next to every rendered sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub sequence_id: String,
    pub wave_type: WaveType,
    pub level: SeverityLevel,
    pub profile_index: u64,
    pub profile_seed: u64,
    pub background_id: String,
    pub frame_count: usize,
    pub resolution: usize,
    pub calibration: CalibrationRecord,
    pub refraction: RefractionParams,
    pub toolchain_version: String,
    /// Fully resolved run configuration, when rendered by the pipeline.
    #[serde(default)]
    pub config: Option<serde_json::Value>,
    /// SHA-256 of each stored file, keyed by file name.
    #[serde(default)]
    pub files: std::collections::BTreeMap<String, String>,
    /// SHA-256 over the 16-bit pixel payload of the ground truth and frames.
    #[serde(default)]
    pub content_hash: String,
}

impl Manifest {
    pub fn sequence_id_for(wave: WaveType, level: SeverityLevel, background_id: &str, profile_seed: u64) -> String {
        format!("{wave}/{level}/{background_id}_{profile_seed:016x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoSequence {
    pub ground_truth: Image,
    pub frames: Vec<Image>,
    pub displacements: Option<Vec<DisplacementField>>,
    pub manifest: Manifest,
}

impl VideoSequence {
    /// Recomputes the pixel-content hash from the quantized images.
    pub fn content_hash(&self) -> String {
        content_hash(&self.ground_truth, &self.frames)
    }
}

/// Incremental form of [`content_hash`] for frames produced one at a time.
pub struct ContentHasher(Sha256);

impl ContentHasher {
    pub fn new() -> Self {
        Self(Sha256::new())
    }

    pub fn add(&mut self, img: &Image) {
        self.0.update((img.width as u32).to_le_bytes());
        self.0.update((img.height as u32).to_le_bytes());
        self.0.update((img.channels as u32).to_le_bytes());
        for v in img.to_u16() {
            self.0.update(v.to_le_bytes());
        }
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

impl Default for ContentHasher {
    fn default() -> Self {
        Self::new()
    }
}

pub fn content_hash(gt: &Image, frames: &[Image]) -> String {
    let mut h = ContentHasher::new();
    std::iter::once(gt).chain(frames).for_each(|img| h.add(img));
    h.finish()
}

/// One distorted frame plus its displacement field.
pub fn render_frame(
    bg: &Background,
    profile: &mut ProfileGenerator,
    frame: usize,
    params: &RefractionParams,
) -> Result<(Image, DisplacementField)> {
    let normals = profile.normals(frame)?;
    normals.check_same_shape(bg.image.width, bg.image.height)?;
    let mut disp = displacement_field(&normals, params)?;
    disp.frame_index = frame;
    let img = warp(&bg.image, &disp)?;
    Ok((img, disp))
}

/// What to render for one (background, profile, level) combination.
#[derive(Debug, Clone)]
pub struct RenderRequest {
    pub frame_count: usize,
    pub calibration: CalibrationRecord,
    pub refraction: RefractionParams,
    pub profile_index: u64,
    pub keep_displacements: bool,
    pub config: Option<serde_json::Value>,
}

/// Checks a request against its background and profile and returns the
/// effective refraction parameters with a manifest lacking digests.
fn prepare(bg: &Background, profile: &ProfileGenerator, req: &RenderRequest) -> Result<(RefractionParams, Manifest)> {
    let spec = *profile.spec();
    if spec.resolution != bg.image.width || bg.image.width != bg.image.height {
        return Err(Error::Shape(format!(
            "profile resolution {} vs background {}x{}",
            spec.resolution, bg.image.width, bg.image.height
        )));
    }
    if spec.wave_type != req.calibration.wave_type {
        return Err(Error::Input(format!(
            "calibration is for {}, profile is {}",
            req.calibration.wave_type, spec.wave_type
        )));
    }
    let params = req.calibration.params(&req.refraction);
    params.validate()?;
    let level = req.calibration.level;
    let manifest = Manifest {
        sequence_id: Manifest::sequence_id_for(spec.wave_type, level, &bg.id, spec.seed),
        wave_type: spec.wave_type,
        level,
        profile_index: req.profile_index,
        profile_seed: spec.seed,
        background_id: bg.id.clone(),
        frame_count: req.frame_count,
        resolution: spec.resolution,
        calibration: req.calibration,
        refraction: params,
        toolchain_version: TOOLCHAIN_VERSION.to_string(),
        config: req.config.clone(),
        files: Default::default(),
        content_hash: String::new(),
    };
    Ok((params, manifest))
}

/// Renders frames `range` of a profile: normals in time order (shallow water
/// is sequential), then refraction and warping in parallel.
fn render_range(
    bg: &Background,
    profile: &mut ProfileGenerator,
    params: &RefractionParams,
    range: std::ops::Range<usize>,
) -> Result<Vec<(Image, DisplacementField)>> {
    let normals = range
        .clone()
        .map(|i| profile.normals(i))
        .collect::<Result<Vec<_>>>()?;
    normals
        .par_iter()
        .zip(range)
        .map(|(n, i)| {
            let mut disp = displacement_field(n, params)?;
            disp.frame_index = i;
            Ok((warp(&bg.image, &disp)?, disp))
        })
        .collect()
}

pub fn render_sequence(bg: &Background, profile: &mut ProfileGenerator, req: &RenderRequest) -> Result<VideoSequence> {
    let (params, mut manifest) = prepare(bg, profile, req)?;
    let rendered = render_range(bg, profile, &params, 0..req.frame_count)?;
    let (frames, disps): (Vec<Image>, Vec<DisplacementField>) = rendered.into_iter().unzip();
    manifest.content_hash = content_hash(&bg.image, &frames);
    Ok(VideoSequence {
        ground_truth: bg.image.clone(),
        frames,
        displacements: req.keep_displacements.then_some(disps),
        manifest,
    })
}

/// Frames rendered and written per batch by [`render_sequence_to_dir`].
const STREAM_BATCH: usize = 16;

/// Renders straight into a sequence directory, holding only one batch of
/// frames in memory. The directory appears atomically when complete.
pub fn render_sequence_to_dir(
    bg: &Background,
    profile: &mut ProfileGenerator,
    req: &RenderRequest,
    dir: &Path,
) -> Result<Manifest> {
    let (params, mut manifest) = prepare(bg, profile, req)?;
    let staged = io::StagedDir::new(dir)?;
    let count = req.frame_count;
    let mut hasher = ContentHasher::new();
    hasher.add(&bg.image);
    manifest.files.insert(
        io::GROUND_TRUTH_FILE.into(),
        staged.put(io::GROUND_TRUTH_FILE, &bg.image.encode_png16()?)?,
    );
    for start in (0..count).step_by(STREAM_BATCH) {
        let batch = render_range(bg, profile, &params, start..(start + STREAM_BATCH).min(count))?;
        let encoded = batch
            .par_iter()
            .map(|(img, disp)| {
                let raw = req.keep_displacements.then(|| RawField::from_displacement(disp).encode());
                Ok((img.encode_png16()?, raw))
            })
            .collect::<Result<Vec<_>>>()?;
        for (((img, _), (png, raw)), i) in batch.iter().zip(encoded).zip(start..) {
            hasher.add(img);
            let name = io::frame_file(i, count);
            manifest.files.insert(name.clone(), staged.put(&name, &png)?);
            if let Some(raw) = raw {
                let name = io::displacement_file(i, count);
                manifest.files.insert(name.clone(), staged.put(&name, &raw)?);
            }
        }
    }
    manifest.content_hash = hasher.finish();
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Numerical(e.to_string()))?;
    staged.put(io::MANIFEST_FILE, &json)?;
    staged.commit()?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, 3, |x, y, c| (x as f32 * 0.05 + y as f32 * 0.01 + c as f32 * 0.1).min(1.0))
    }

    #[test]
    fn zero_displacement_is_identity() {
        let bg = ramp(9, 7);
        let out = warp(&bg, &DisplacementField::zeros(9, 7)).unwrap();
        assert_eq!(out, bg);
    }

    #[test]
    fn integer_shift_replicates_border() {
        let bg = ramp(8, 4);
        let f = DisplacementField::constant(8, 4, [1.0 / 8.0, 0.0]);
        let out = warp(&bg, &f).unwrap();
        for y in 0..4 {
            for x in 0..8 {
                let src = (x + 1).min(7);
                for c in 0..3 {
                    assert_eq!(out.get(x, y, c), bg.get(src, y, c));
                }
            }
        }
    }

    #[test]
    fn half_pixel_shift_on_linear_ramp() {
        let n = 16;
        let bg = Image::from_fn(n, n, 3, |x, _, _| x as f32 / 32.0);
        let f = DisplacementField::constant(n, n, [0.5 / n as f32, 0.0]);
        let out = warp(&bg, &f).unwrap();
        for x in 0..n - 1 {
            let exact = (x as f64 + 0.5) / 32.0;
            assert!((out.get(x, 3, 0) as f64 - exact).abs() < 1e-7);
        }
        assert_eq!(out.get(n - 1, 3, 0), bg.get(n - 1, 3, 0));
    }

    #[test]
    fn warp_rejects_mismatched_shapes() {
        assert!(matches!(
            warp(&ramp(4, 4), &DisplacementField::zeros(5, 4)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn synthetic_backgrounds_are_valid_and_distinct() {
        let a = synthetic_background(1, 64);
        let b = synthetic_background(2, 64);
        assert_eq!(a.image.width, 64);
        assert!(Background::new("x", a.image.clone()).is_ok());
        assert_ne!(a.image, b.image);
        assert_eq!(a, synthetic_background(1, 64));
    }
}
