//! Spectral ocean surface: Phillips spectrum, Gaussian initial amplitudes and
//! dispersive time evolution synthesised with an inverse 2D FFT.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::HeightField;
use crate::rng::CounterRng;

use super::WaveType;

#[derive(Debug, Clone, PartialEq)]
pub struct OceanParams {
    /// Dimensionless spectrum scale.
    pub amplitude: f64,
    /// Wind speed in m/s.
    pub wind_speed: f64,
    /// Unit wind direction.
    pub wind_dir: [f64; 2],
    pub gravity: f64,
    /// Grid cells along x (columns) and z (rows).
    pub nx: usize,
    pub nz: usize,
    /// Physical extent in metres.
    pub lx: f64,
    pub lz: f64,
    /// Small-wave damping length in metres.
    pub cutoff: f64,
    pub seed: u64,
}

impl OceanParams {
    /// Square domain with the default small-wave cutoff of `length / 1000`.
    pub fn square(n: usize, length: f64, amplitude: f64, wind_speed: f64, wind_angle: f64, seed: u64) -> Self {
        Self {
            amplitude,
            wind_speed,
            wind_dir: [wind_angle.cos(), wind_angle.sin()],
            gravity: 9.81,
            nx: n,
            nz: n,
            lx: length,
            lz: length,
            cutoff: length / 1000.0,
            seed,
        }
    }

    /// Largest wave scale sustained by the wind, `V^2 / g`.
    pub fn largest_wave(&self) -> f64 {
        self.wind_speed * self.wind_speed / self.gravity
    }

    pub fn validate(&self) -> Result<()> {
        let wn = (self.wind_dir[0].powi(2) + self.wind_dir[1].powi(2)).sqrt();
        if (wn - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("wind direction norm {wn} is not 1")));
        }
        if !self.nx.is_power_of_two() || !self.nz.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "ocean grid {}x{} must have power-of-two sides",
                self.nx, self.nz
            )));
        }
        if !(self.amplitude >= 0.0) || !(self.wind_speed > 0.0) || !(self.cutoff >= 0.0) {
            return Err(Error::Parameter(format!(
                "need amplitude >= 0, wind speed > 0, cutoff >= 0 (got {}, {}, {})",
                self.amplitude, self.wind_speed, self.cutoff
            )));
        }
        if !(self.gravity > 0.0) || !(self.lx > 0.0) || !(self.lz > 0.0) {
            return Err(Error::Parameter("gravity and domain lengths must be positive".into()));
        }
        Ok(())
    }
}

/// Phillips power at wavevector `k` (rad/m), including the small-wave
/// suppression factor `exp(-k^2 l^2)`.
pub fn phillips_spectrum(k: [f64; 2], p: &OceanParams) -> f64 {
    let k2 = k[0] * k[0] + k[1] * k[1];
    if k2 == 0.0 {
        return 0.0;
    }
    let kk = k2.sqrt();
    let l = p.largest_wave();
    let align = ((k[0] * p.wind_dir[0] + k[1] * p.wind_dir[1]) / kk).abs();
    p.amplitude * (-1.0 / (k2 * l * l)).exp() / (k2 * k2) * align * (-k2 * p.cutoff * p.cutoff).exp()
}

/// Initial Fourier amplitudes plus per-cell wavevector and frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub nx: usize,
    pub nz: usize,
    pub lx: f64,
    pub lz: f64,
    pub h0: Vec<Complex64>,
    pub k_grid: Vec<[f64; 2]>,
    pub omega: Vec<f64>,
}

/// Signed frequency index for FFT bin `i` of an `n`-point transform.
#[inline]
pub(crate) fn signed_bin(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl SpectralField {
    /// Cell holding `-k` for cell `idx` (Nyquist bins map onto themselves).
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        let (r, c) = (idx / self.nx, idx % self.nx);
        ((self.nz - r) % self.nz) * self.nx + (self.nx - c) % self.nx
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            h0: vec![Complex64::new(0.0, 0.0); self.h0.len()],
            ..self.clone()
        }
    }

    /// Spectral coefficients at time `t`, paired over `+k` and `-k`.
    pub fn coefficients_at(&self, t: f64) -> Vec<Complex64> {
        (0..self.h0.len())
            .map(|idx| {
                let m = self.mirror(idx);
                let phase = Complex64::from_polar(1.0, self.omega[idx] * t);
                self.h0[idx] * phase + self.h0[m].conj() * phase.conj()
            })
            .collect()
    }
}

pub fn ocean_spectral_init(p: &OceanParams) -> Result<SpectralField> {
    p.validate()?;
    let rng = CounterRng::new(p.seed).substream(WaveType::Ocean.tag());
    let n = p.nx * p.nz;
    let mut h0 = Vec::with_capacity(n);
    let mut k_grid = Vec::with_capacity(n);
    let mut omega = Vec::with_capacity(n);
    let dkx = std::f64::consts::TAU / p.lx;
    let dkz = std::f64::consts::TAU / p.lz;
    for r in 0..p.nz {
        let kz = signed_bin(r, p.nz) as f64 * dkz;
        for c in 0..p.nx {
            let kx = signed_bin(c, p.nx) as f64 * dkx;
            let k = [kx, kz];
            let (xr, xi) = rng.normal_pair_at((r * p.nx + c) as u64);
            let amp = (phillips_spectrum(k, p) * 0.5).sqrt();
            h0.push(Complex64::new(xr * amp, xi * amp));
            k_grid.push(k);
            omega.push((p.gravity * (kx * kx + kz * kz).sqrt()).sqrt());
        }
    }
    Ok(SpectralField {
        nx: p.nx,
        nz: p.nz,
        lx: p.lx,
        lz: p.lz,
        h0,
        k_grid,
        omega,
    })
}

/// Reusable inverse-FFT synthesiser for one spectral field.
pub struct OceanSurface {
    spectral: SpectralField,
    row_fft: Arc<dyn Fft<f64>>,
    col_fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for OceanSurface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OceanSurface")
            .field("nx", &self.spectral.nx)
            .field("nz", &self.spectral.nz)
            .finish()
    }
}

impl OceanSurface {
    pub fn new(spectral: SpectralField) -> Self {
        let mut planner = FftPlanner::new();
        let row_fft = planner.plan_fft_inverse(spectral.nx);
        let col_fft = planner.plan_fft_inverse(spectral.nz);
        Self {
            spectral,
            row_fft,
            col_fft,
        }
    }

    pub fn spectral(&self) -> &SpectralField {
        &self.spectral
    }

    /// Complex spatial field; the imaginary part is round-off only.
    pub fn complex_height_at(&self, t: f64) -> Vec<Complex64> {
        let (nx, nz) = (self.spectral.nx, self.spectral.nz);
        let mut buf = self.spectral.coefficients_at(t);
        for row in buf.chunks_exact_mut(nx) {
            self.row_fft.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); nz];
        for c in 0..nx {
            for r in 0..nz {
                col[r] = buf[r * nx + c];
            }
            self.col_fft.process(&mut col);
            for r in 0..nz {
                buf[r * nx + c] = col[r];
            }
        }
        buf
    }

    pub fn height_at(&self, t: f64) -> HeightField {
        self.height_with_residue(t).0
    }

    /// Height field and the largest absolute imaginary residue.
    pub fn height_with_residue(&self, t: f64) -> (HeightField, f64) {
        let s = &self.spectral;
        let z = self.complex_height_at(t);
        let residue = z.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        let field = HeightField {
            width: s.nx,
            height: s.nz,
            dx: s.lx / s.nx as f64,
            dy: s.lz / s.nz as f64,
            data: z.into_iter().map(|v| v.re).collect(),
        };
        (field, residue)
    }
}

pub fn ocean_height_at(s: &SpectralField, t: f64) -> HeightField {
    OceanSurface::new(s.clone()).height_at(t)
}
