//! Refraction of vertical camera rays through the water surface and the
//! resulting lateral displacement fields.

pub mod calibrate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{cross3, dot3, normalize3, NormalField};

pub use calibrate::{
    calibrate_amplitude, calibrate_speed, calibrate_to_target, distortion_rate, AmplitudeCalibration, CalibrationRecord,
    ProfileSet, SpeedCalibration,
};

/// Optical and geometric parameters of the water-to-air refraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefractionParams {
    /// Index below the surface (water).
    pub n1: f64,
    /// Index above the surface (air).
    pub n2: f64,
    /// Surface-to-background distance in image side lengths.
    pub background_distance: f64,
    /// Blend between the flat normal (0) and the true normal (1).
    pub alpha: f64,
    pub distance_scale: f64,
}

impl Default for RefractionParams {
    fn default() -> Self {
        Self {
            n1: 1.33,
            n2: 1.0,
            background_distance: 1.0,
            alpha: 1.0,
            distance_scale: 1.0,
        }
    }
}

impl RefractionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n1 >= self.n2 && self.n2 >= 1.0) {
            return Err(Error::Parameter(format!(
                "refractive indices must satisfy n1 >= n2 >= 1 (got {}, {})",
                self.n1, self.n2
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Parameter(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.background_distance > 0.0) || !(self.distance_scale >= 0.0) {
            return Err(Error::Parameter(format!(
                "background distance must be positive (got {} x {})",
                self.background_distance, self.distance_scale
            )));
        }
        Ok(())
    }

    /// Applies the single severity knob: `alpha = clamp(s, 0, 1)`,
    /// `distance_scale = max(1, s)`.
    pub fn with_severity(self, s: f64) -> Self {
        Self {
            alpha: s.clamp(0.0, 1.0),
            distance_scale: s.max(1.0),
            ..self
        }
    }

    pub fn propagation_distance(&self) -> f64 {
        self.background_distance * self.distance_scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeverityLevel {
    Low,
    Mid,
    High,
    Extreme,
}

impl SeverityLevel {
    pub const ALL: [SeverityLevel; 4] = [
        SeverityLevel::Low,
        SeverityLevel::Mid,
        SeverityLevel::High,
        SeverityLevel::Extreme,
    ];

    /// Pooled displacement std, as a fraction of the image side.
    pub fn target_std(self) -> f64 {
        match self {
            SeverityLevel::Low => 0.002,
            SeverityLevel::Mid => 0.006,
            SeverityLevel::High => 0.018,
            SeverityLevel::Extreme => 0.054,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SeverityLevel::Low => "low",
            SeverityLevel::Mid => "mid",
            SeverityLevel::High => "high",
            SeverityLevel::Extreme => "extreme",
        }
    }
}

impl fmt::Display for SeverityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SeverityLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SeverityLevel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown level {s:?}; expected low, mid, high or extreme")))
    }
}

/// Outcome of refracting one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refracted {
    /// Unit transmitted direction. Under total internal reflection this is
    /// the grazing direction obtained by clamping the radicand to zero.
    pub direction: [f64; 3],
    pub tir: bool,
}

/// Vector Snell's law for a unit ray `v1` hitting a surface with unit normal
/// `normal`, going from index `n1` into index `n2`.
///
/// The normal may point to either side of the surface; it is oriented
/// against the incoming ray before the transmitted direction
/// `eta N x (-N x v1) - N sqrt(1 - eta^2 |N x v1|^2)` is evaluated.
pub fn refract(v1: [f64; 3], normal: [f64; 3], n1: f64, n2: f64) -> Refracted {
    let n = if dot3(normal, v1) > 0.0 {
        [-normal[0], -normal[1], -normal[2]]
    } else {
        normal
    };
    let eta = n1 / n2;
    let nxv = cross3(n, v1);
    let tangential = cross3(n, [-nxv[0], -nxv[1], -nxv[2]]);
    let radicand = 1.0 - eta * eta * dot3(nxv, nxv);
    if radicand < 0.0 {
        return Refracted {
            direction: normalize3(tangential),
            tir: true,
        };
    }
    let root = radicand.sqrt();
    Refracted {
        direction: [
            eta * tangential[0] - n[0] * root,
            eta * tangential[1] - n[1] * root,
            eta * tangential[2] - n[2] * root,
        ],
        tir: false,
    }
}

/// `normalize((1 - alpha) * (0, 0, 1) + alpha * n)`.
#[inline]
pub fn blend_normal(n: [f64; 3], alpha: f64) -> [f64; 3] {
    normalize3([alpha * n[0], alpha * n[1], (1.0 - alpha) + alpha * n[2]])
}

pub fn blend_normals(normals: &NormalField, alpha: f64) -> Result<NormalField> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("alpha {alpha} outside [0, 1]")));
    }
    Ok(NormalField {
        width: normals.width,
        height: normals.height,
        data: normals.data.iter().map(|&n| blend_normal(n, alpha)).collect(),
    })
}

/// Lateral landing offset (image side fractions) of the vertical ray through
/// a surface with z-up unit normal `n`, plus the TIR flag.
#[inline]
pub fn ray_offset(n: [f64; 3], p: &RefractionParams) -> ([f64; 2], bool) {
    let r = refract([0.0, 0.0, 1.0], blend_normal(n, p.alpha), p.n1, p.n2);
    let d = p.propagation_distance();
    let v = r.direction;
    ([d * v[0] / v[2], d * v[1] / v[2]], r.tir)
}

/// Same as [`ray_offset`] for a normal given by its height slopes, using the
/// closed form of the vertical-ray case.
#[inline]
pub(crate) fn ray_offset_from_slope(g: [f64; 2], p: &RefractionParams) -> ([f64; 2], bool) {
    let n = crate::wavefield::normals::normal_from_slope(g);
    let b = blend_normal(n, p.alpha);
    let (a, bb, c) = (b[0], b[1], b[2]);
    let eta = p.n1 / p.n2;
    let sin2 = a * a + bb * bb;
    let radicand = 1.0 - eta * eta * sin2;
    let d = p.propagation_distance();
    if radicand < 0.0 {
        // grazing direction along the tangential component (-a c, -b c, 1 - c^2)
        let k = d * c / sin2;
        return ([-a * k, -bb * k], true);
    }
    let root = radicand.sqrt();
    let lateral = root - eta * c;
    let vz = eta * sin2 + c * root;
    let k = d * lateral / vz;
    ([a * k, bb * k], false)
}

/// Per-pixel lateral ray displacement, in fractions of the image side.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub width: usize,
    pub height: usize,
    pub frame_index: usize,
    /// `(dx, dy)` per pixel, row-major.
    pub offsets: Vec<[f32; 2]>,
    pub tir: Vec<bool>,
}

impl DisplacementField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            frame_index: 0,
            offsets: vec![[0.0; 2]; width * height],
            tir: vec![false; width * height],
        }
    }

    pub fn constant(width: usize, height: usize, offset: [f32; 2]) -> Self {
        Self {
            offsets: vec![offset; width * height],
            ..Self::zeros(width, height)
        }
    }

    pub fn tir_count(&self) -> usize {
        self.tir.iter().filter(|&&t| t).count()
    }
}

pub fn displacement_field(normals: &NormalField, p: &RefractionParams) -> Result<DisplacementField> {
    p.validate()?;
    let mut offsets = Vec::with_capacity(normals.data.len());
    let mut tir = Vec::with_capacity(normals.data.len());
    for &n in &normals.data {
        let (o, t) = ray_offset(n, p);
        offsets.push([o[0] as f32, o[1] as f32]);
        tir.push(t);
    }
    Ok(DisplacementField {
        width: normals.width,
        height: normals.height,
        frame_index: 0,
        offsets,
        tir,
    })
}

/// Population std of all `dx` and `dy` components pooled over every pixel
/// of every field.
pub fn displacement_std(fields: &[DisplacementField]) -> Result<f64> {
    let count: usize = fields.iter().map(|f| 2 * f.offsets.len()).sum();
    if count == 0 {
        return Err(Error::Input("displacement std of an empty set".into()));
    }
    let components = || fields.iter().flat_map(|f| f.offsets.iter().flat_map(|o| [o[0] as f64, o[1] as f64]));
    let mean = components().sum::<f64>() / count as f64;
    let var = components().map(|c| (c - mean).powi(2)).sum::<f64>() / count as f64;
    Ok(var.sqrt())
}
