//! Severity and speed calibration over a set of wave profiles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavefield::{ProfileGenerator, ProfileSpec, WaveSettings, WaveType};

use super::{ray_offset_from_slope, RefractionParams, SeverityLevel};

/// Surface slopes of several profiles, cached frame by frame.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    pub width: usize,
    pub height: usize,
    /// `profiles[p][f]` holds the per-pixel `(dh/dx, dh/dy)` of frame `f`.
    pub profiles: Vec<Vec<Vec<[f32; 2]>>>,
}

impl ProfileSet {
    /// Samples frames `0, stride, 2 stride, ...` below `frame_count` of each profile.
    pub fn generate(
        specs: &[ProfileSpec],
        settings: &WaveSettings,
        frame_count: usize,
        stride: usize,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Input("calibration needs at least one profile".into()));
        }
        let stride = stride.max(1);
        let profiles = specs
            .par_iter()
            .map(|spec| {
                let mut gen = ProfileGenerator::new(*spec, settings)?;
                (0..frame_count)
                    .step_by(stride)
                    .map(|f| {
                        Ok(gen
                            .slopes(f)?
                            .into_iter()
                            .map(|g| [g[0] as f32, g[1] as f32])
                            .collect())
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let n = specs[0].resolution;
        Ok(Self {
            width: n,
            height: n,
            profiles,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.profiles.iter().map(Vec::len).sum()
    }

    /// Pooled displacement std over every pixel, frame and profile.
    pub fn displacement_std(&self, p: &RefractionParams) -> f64 {
        // per-profile partial sums, reduced in profile order
        let sums: Vec<(f64, f64, usize)> = self
            .profiles
            .par_iter()
            .map(|frames| {
                let (mut s, mut s2, mut n) = (0.0, 0.0, 0usize);
                for frame in frames {
                    for g in frame {
                        let (o, _) = ray_offset_from_slope([g[0] as f64, g[1] as f64], p);
                        s += o[0] + o[1];
                        s2 += o[0] * o[0] + o[1] * o[1];
                        n += 2;
                    }
                }
                (s, s2, n)
            })
            .collect();
        let (s, s2, n) = sums
            .into_iter()
            .fold((0.0, 0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        if n == 0 {
            return 0.0;
        }
        let mean = s / n as f64;
        (s2 / n as f64 - mean * mean).max(0.0).sqrt()
    }
}

/// Mean per-pixel L2 change of the displacement between consecutive cached
/// frames of each profile, in image side fractions per frame.
pub fn distortion_rate(set: &ProfileSet, p: &RefractionParams) -> f64 {
    let sums: Vec<(f64, usize)> = set
        .profiles
        .par_iter()
        .map(|frames| {
            let (mut s, mut n) = (0.0, 0usize);
            for pair in frames.windows(2) {
                for (a, b) in pair[0].iter().zip(&pair[1]) {
                    let (oa, _) = ray_offset_from_slope([a[0] as f64, a[1] as f64], p);
                    let (ob, _) = ray_offset_from_slope([b[0] as f64, b[1] as f64], p);
                    s += (ob[0] - oa[0]).hypot(ob[1] - oa[1]);
                    n += 1;
                }
            }
            (s, n)
        })
        .collect();
    let (s, n) = sums.into_iter().fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeCalibration {
    pub level: SeverityLevel,
    /// Severity knob.
    pub s: f64,
    pub params: RefractionParams,
    pub achieved_std: f64,
    pub iterations: usize,
}

/// Finds the severity knob whose profile-averaged displacement std lands
/// within `tolerance` (relative) of `target`, by bracketing then bisection.
pub fn calibrate_to_target(
    set: &ProfileSet,
    target: f64,
    base: &RefractionParams,
    tolerance: f64,
    max_iterations: usize,
) -> Result<(f64, f64, usize)> {
    base.validate()?;
    if target <= 0.0 {
        return Ok((0.0, 0.0, 0));
    }
    let eval = |s: f64| set.displacement_std(&base.with_severity(s));
    let within = |v: f64| (v - target).abs() <= tolerance * target;
    let fail = |message: &str, lo: f64, hi: f64, lo_value: f64, hi_value: f64| Error::Calibration {
        message: message.to_string(),
        lo,
        hi,
        lo_value,
        hi_value,
        target,
    };

    let (mut lo, mut lo_value) = (0.0, 0.0);
    let (mut hi, mut hi_value) = (1.0, eval(1.0));
    let mut iterations = 1;
    if within(hi_value) {
        return Ok((hi, hi_value, iterations));
    }
    while hi_value < target {
        if iterations >= max_iterations || hi > 1e6 {
            return Err(fail("could not bracket the target", lo, hi, lo_value, hi_value));
        }
        lo = hi;
        lo_value = hi_value;
        hi *= 2.0;
        hi_value = eval(hi);
        iterations += 1;
        if within(hi_value) {
            return Ok((hi, hi_value, iterations));
        }
    }
    while iterations < max_iterations {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        let v = eval(mid);
        iterations += 1;
        if within(v) {
            return Ok((mid, v, iterations));
        }
        if v < target {
            lo = mid;
            lo_value = v;
        } else {
            hi = mid;
            hi_value = v;
        }
    }
    Err(fail(
        &format!("no convergence after {max_iterations} steps"),
        lo,
        hi,
        lo_value,
        hi_value,
    ))
}

pub fn calibrate_amplitude(
    set: &ProfileSet,
    level: SeverityLevel,
    base: &RefractionParams,
    tolerance: f64,
    max_iterations: usize,
) -> Result<AmplitudeCalibration> {
    let (s, achieved_std, iterations) =
        calibrate_to_target(set, level.target_std(), base, tolerance, max_iterations)?;
    Ok(AmplitudeCalibration {
        level,
        s,
        params: base.with_severity(s),
        achieved_std,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedCalibration {
    /// Multiplier on the base frame interval.
    pub multiplier: f64,
    pub achieved_rate: f64,
    pub reference_rate: f64,
}

/// Chooses the frame-interval multiplier of `wave` whose distortion rate
/// (as reported by `rate_at`) matches `reference_rate` within `tolerance`.
/// The ocean family is the reference and always gets 1.
pub fn calibrate_speed(
    wave: WaveType,
    reference_rate: f64,
    tolerance: f64,
    max_iterations: usize,
    mut rate_at: impl FnMut(f64) -> Result<f64>,
) -> Result<SpeedCalibration> {
    if wave == WaveType::Ocean {
        return Ok(SpeedCalibration {
            multiplier: 1.0,
            achieved_rate: reference_rate,
            reference_rate,
        });
    }
    let within = |r: f64| (r - reference_rate).abs() <= tolerance * reference_rate;
    let done = |m: f64, r: f64| SpeedCalibration {
        multiplier: m,
        achieved_rate: r,
        reference_rate,
    };
    let fail = |message: String, lo: f64, hi: f64, lo_value: f64, hi_value: f64| Error::Calibration {
        message,
        lo,
        hi,
        lo_value,
        hi_value,
        target: reference_rate,
    };
    let mut iterations = 1;
    let r1 = rate_at(1.0)?;
    if within(r1) {
        return Ok(done(1.0, r1));
    }
    // bracket in log space
    let (mut lo, mut lo_rate, mut hi, mut hi_rate) = if r1 < reference_rate {
        let (mut m, mut r) = (1.0, r1);
        loop {
            let next = m * 2.0;
            let rn = rate_at(next)?;
            iterations += 1;
            if within(rn) {
                return Ok(done(next, rn));
            }
            if rn >= reference_rate {
                break (m, r, next, rn);
            }
            if iterations >= max_iterations || next >= 1024.0 {
                return Err(fail(format!("{wave}: rate saturates below reference"), m, next, r, rn));
            }
            m = next;
            r = rn;
        }
    } else {
        let (mut m, mut r) = (1.0, r1);
        loop {
            let next = m * 0.5;
            let rn = rate_at(next)?;
            iterations += 1;
            if within(rn) {
                return Ok(done(next, rn));
            }
            if rn <= reference_rate {
                break (next, rn, m, r);
            }
            if iterations >= max_iterations || next <= 1.0 / 1024.0 {
                return Err(fail(format!("{wave}: rate stays above reference"), next, m, rn, r));
            }
            m = next;
            r = rn;
        }
    };
    while iterations < max_iterations {
        let mid = (lo * hi).sqrt();
        let r = rate_at(mid)?;
        iterations += 1;
        if within(r) {
            return Ok(done(mid, r));
        }
        if r < reference_rate {
            lo = mid;
            lo_rate = r;
        } else {
            hi = mid;
            hi_rate = r;
        }
    }
    Err(fail(
        format!("{wave}: no speed convergence after {max_iterations} steps"),
        lo,
        hi,
        lo_rate,
        hi_rate,
    ))
}

/// Persisted calibration outcome of one (wave type, level) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRecord {
    pub wave_type: WaveType,
    pub level: SeverityLevel,
    pub s: f64,
    pub alpha: f64,
    pub distance_scale: f64,
    pub target_std: f64,
    pub achieved_std: f64,
    pub speed_multiplier: f64,
    /// Displacement change per frame over displacement std, at unit severity;
    /// 0 when speed matching was skipped.
    pub achieved_rate: f64,
    /// The same quantity for the ocean family.
    pub reference_rate: f64,
}

impl CalibrationRecord {
    /// Calibrated refraction parameters on top of `base` optics.
    pub fn params(&self, base: &RefractionParams) -> RefractionParams {
        RefractionParams {
            alpha: self.alpha,
            distance_scale: self.distance_scale,
            ..*base
        }
    }
}
