//! Seeded wave profiles: one surface realisation per (seed, wave type,
//! profile index), sampled at evenly spaced frame times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, HeightField, NormalField};
use crate::rng::CounterRng;

use super::normals::{height_gradient, normals_from_height};
use super::ocean::{ocean_spectral_init, OceanParams, OceanSurface};
use super::ripples::RippleParams;
use super::shallow::{Bump, ShallowSimulator, ShallowState};
use super::sine::SineParams;
use super::WaveType;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OceanSettings {
    pub domain_length: f64,
    pub amplitude: f64,
    pub wind_speed: f64,
    pub gravity: f64,
    /// Small-wave damping length; `None` means `domain_length / 1000`.
    pub cutoff: Option<f64>,
}

impl Default for OceanSettings {
    fn default() -> Self {
        Self {
            domain_length: 4.0,
            amplitude: 2e-5,
            wind_speed: 8.0,
            gravity: 9.81,
            cutoff: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SineSettings {
    pub domain_length: f64,
    pub amplitude: f64,
    pub wavelength: f64,
    /// Relative spread of the per-profile wavelength.
    pub wavelength_jitter: f64,
    pub gravity: f64,
}

impl Default for SineSettings {
    fn default() -> Self {
        Self {
            domain_length: 10.0,
            amplitude: 0.05,
            wavelength: 2.5,
            wavelength_jitter: 0.2,
            gravity: 9.81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShallowSettings {
    pub domain_length: f64,
    pub rest_depth: f64,
    pub mean_bumps: f64,
    pub bump_amplitude: f64,
    pub bump_sigma: f64,
    pub gravity: f64,
}

impl Default for ShallowSettings {
    fn default() -> Self {
        Self {
            domain_length: 10.0,
            rest_depth: 1.0,
            mean_bumps: 4.0,
            bump_amplitude: 0.05,
            bump_sigma: 0.4,
            gravity: 9.81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RippleSettings {
    pub domain_length: f64,
    pub mean_sources: f64,
    pub wavelength: f64,
    pub decay_length: f64,
    pub amplitude: f64,
    /// `None` uses the deep-water phase speed `sqrt(g / k)`.
    pub phase_speed: Option<f64>,
    pub gravity: f64,
}

impl Default for RippleSettings {
    fn default() -> Self {
        Self {
            domain_length: 10.0,
            mean_sources: 3.0,
            wavelength: 0.8,
            decay_length: 3.0,
            amplitude: 0.02,
            phase_speed: None,
            gravity: 9.81,
        }
    }
}

/// Physical defaults for every wave family plus the base frame interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveSettings {
    /// Seconds between consecutive frames before speed calibration.
    pub frame_dt: f64,
    pub ocean: OceanSettings,
    pub sine: SineSettings,
    pub shallow_water: ShallowSettings,
    pub ripples: RippleSettings,
}

impl Default for WaveSettings {
    fn default() -> Self {
        Self {
            frame_dt: 1.0 / 30.0,
            ocean: OceanSettings::default(),
            sine: SineSettings::default(),
            shallow_water: ShallowSettings::default(),
            ripples: RippleSettings::default(),
        }
    }
}

/// Seed of profile `index` of `wave` under a run-level seed.
pub fn profile_seed(run_seed: u64, wave: WaveType, index: u64) -> u64 {
    CounterRng::new(run_seed).substream(wave.tag()).u64_at(index)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSpec {
    pub wave_type: WaveType,
    pub seed: u64,
    /// Square grid side, equal to the render resolution.
    pub resolution: usize,
    /// Seconds of simulated time between frames.
    pub frame_interval: f64,
}

#[derive(Debug)]
enum Source {
    Ocean(OceanSurface),
    Sine(SineParams),
    Ripples(RippleParams),
    Shallow {
        initial: ShallowState,
        sim: ShallowSimulator,
    },
}

/// Produces the height field of one profile at any frame index.
#[derive(Debug)]
pub struct ProfileGenerator {
    spec: ProfileSpec,
    grid: Grid,
    source: Source,
}

impl ProfileGenerator {
    pub fn new(spec: ProfileSpec, settings: &WaveSettings) -> Result<Self> {
        if spec.resolution < 2 {
            return Err(Error::Parameter(format!("resolution {} too small", spec.resolution)));
        }
        if !(spec.frame_interval >= 0.0) {
            return Err(Error::Parameter(format!("negative frame interval {}", spec.frame_interval)));
        }
        let n = spec.resolution;
        let mut cur = CounterRng::new(spec.seed).substream(spec.wave_type.tag()).substream(0x5052_4f46).cursor();
        let (grid, source) = match spec.wave_type {
            WaveType::Ocean => {
                let s = &settings.ocean;
                let mut p = OceanParams::square(
                    n,
                    s.domain_length,
                    s.amplitude,
                    s.wind_speed,
                    cur.range(0.0, std::f64::consts::TAU),
                    spec.seed,
                );
                p.gravity = s.gravity;
                if let Some(c) = s.cutoff {
                    p.cutoff = c;
                }
                let spectral = ocean_spectral_init(&p)?;
                (Grid::square(n, s.domain_length), Source::Ocean(OceanSurface::new(spectral)))
            }
            WaveType::Sine => {
                let s = &settings.sine;
                let wavelength = s.wavelength * (1.0 + s.wavelength_jitter * cur.range(-1.0, 1.0));
                let k = std::f64::consts::TAU / wavelength;
                let p = SineParams {
                    amplitude: s.amplitude,
                    wavenumber: k,
                    angular_freq: (s.gravity * k).sqrt(),
                    phase: cur.range(0.0, std::f64::consts::TAU),
                    direction_angle: cur.range(0.0, std::f64::consts::TAU),
                };
                (Grid::square(n, s.domain_length), Source::Sine(p))
            }
            WaveType::Ripples => {
                let s = &settings.ripples;
                let k = std::f64::consts::TAU / s.wavelength;
                let speed = s.phase_speed.unwrap_or_else(|| (s.gravity / k).sqrt());
                let p = RippleParams::seeded(
                    spec.seed,
                    [s.domain_length, s.domain_length],
                    s.mean_sources,
                    k,
                    s.decay_length,
                    s.amplitude,
                    speed,
                );
                p.validate()?;
                (Grid::square(n, s.domain_length), Source::Ripples(p))
            }
            WaveType::ShallowWater => {
                let s = &settings.shallow_water;
                let count = cur.poisson(s.mean_bumps).max(1);
                let bumps: Vec<Bump> = (0..count)
                    .map(|_| {
                        let center = [cur.range(0.0, s.domain_length), cur.range(0.0, s.domain_length)];
                        let sign = if cur.uniform() < 0.5 { -1.0 } else { 1.0 };
                        Bump {
                            center,
                            amplitude: sign * s.bump_amplitude * cur.range(0.5, 1.0),
                            sigma: s.bump_sigma * cur.range(0.75, 1.25),
                        }
                    })
                    .collect();
                let grid = Grid::square(n, s.domain_length);
                let mut initial = ShallowState::with_bumps(n, n, grid.dx, grid.dy, s.rest_depth, &bumps);
                initial.gravity = s.gravity;
                if initial.depth.iter().any(|&h| h <= 0.0) {
                    return Err(Error::Parameter("shallow-water bumps drain the basin".into()));
                }
                let sim = ShallowSimulator::new(initial.clone());
                (grid, Source::Shallow { initial, sim })
            }
        };
        Ok(Self { spec, grid, source })
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn time_of(&self, frame: usize) -> f64 {
        frame as f64 * self.spec.frame_interval
    }

    /// Height field at `frame`. Shallow-water profiles simulate forward and
    /// restart from the initial state when asked for an earlier frame.
    pub fn height(&mut self, frame: usize) -> Result<HeightField> {
        let t = self.time_of(frame);
        match &mut self.source {
            Source::Ocean(s) => Ok(s.height_at(t)),
            Source::Sine(p) => Ok(self.grid.height_from_fn(|x, z| p.height(x, z, t))),
            Source::Ripples(p) => Ok(self.grid.height_from_fn(|x, z| p.height(x, z, t))),
            Source::Shallow { initial, sim } => {
                if t < sim.state().time {
                    *sim = ShallowSimulator::new(initial.clone());
                }
                Ok(sim.advance_to(t)?.surface())
            }
        }
    }

    pub fn normals(&mut self, frame: usize) -> Result<NormalField> {
        normals_from_height(&self.height(frame)?)
    }

    pub fn slopes(&mut self, frame: usize) -> Result<Vec<[f64; 2]>> {
        height_gradient(&self.height(frame)?)
    }
}
