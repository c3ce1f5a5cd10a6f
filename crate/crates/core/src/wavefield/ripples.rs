//! Ripples: superposed radially expanding, exponentially damped sinusoids
//! emitted from point sources.

use crate::error::{Error, Result};
use crate::field::{Grid, HeightField};
use crate::rng::CounterRng;

use super::WaveType;

#[derive(Debug, Clone, PartialEq)]
pub struct RippleParams {
    /// Source positions in metres.
    pub source_positions: Vec<[f64; 2]>,
    pub source_phases: Vec<f64>,
    /// rad/m.
    pub carrier_wavenumber: f64,
    /// Metres.
    pub decay_length: f64,
    /// Metres.
    pub amplitude: f64,
    /// m/s.
    pub phase_speed: f64,
    pub seed: u64,
}

impl RippleParams {
    /// Poisson-distributed source count (at least one) with positions uniform
    /// over `extent` and uniform phases, all drawn from `seed`.
    pub fn seeded(
        seed: u64,
        extent: [f64; 2],
        mean_sources: f64,
        carrier_wavenumber: f64,
        decay_length: f64,
        amplitude: f64,
        phase_speed: f64,
    ) -> Self {
        let mut cur = CounterRng::new(seed).substream(WaveType::Ripples.tag()).cursor();
        let count = cur.poisson(mean_sources).max(1) as usize;
        let mut source_positions = Vec::with_capacity(count);
        let mut source_phases = Vec::with_capacity(count);
        for _ in 0..count {
            source_positions.push([cur.range(0.0, extent[0]), cur.range(0.0, extent[1])]);
            source_phases.push(cur.range(0.0, std::f64::consts::TAU));
        }
        Self {
            source_positions,
            source_phases,
            carrier_wavenumber,
            decay_length,
            amplitude,
            phase_speed,
            seed,
        }
    }

    pub fn source_count(&self) -> usize {
        self.source_positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.source_positions.is_empty() || self.source_positions.len() != self.source_phases.len() {
            return Err(Error::Parameter("ripples need at least one source with a phase".into()));
        }
        if !(self.decay_length > 0.0) {
            return Err(Error::Parameter(format!(
                "ripple decay length must be positive, got {}",
                self.decay_length
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn height(&self, x: f64, z: f64, t: f64) -> f64 {
        let mut h = 0.0;
        for (pos, phase) in self.source_positions.iter().zip(&self.source_phases) {
            let r = ((x - pos[0]).powi(2) + (z - pos[1]).powi(2)).sqrt();
            h += (-r / self.decay_length).exp()
                * (self.carrier_wavenumber * (r - self.phase_speed * t) + phase).sin();
        }
        self.amplitude * h
    }
}

pub fn ripples_height(p: &RippleParams, t: f64, grid: &Grid) -> Result<HeightField> {
    p.validate()?;
    Ok(grid.height_from_fn(|x, z| p.height(x, z, t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(pos: [f64; 2], phase: f64) -> RippleParams {
        RippleParams {
            source_positions: vec![pos],
            source_phases: vec![phase],
            carrier_wavenumber: 6.0,
            decay_length: 2.0,
            amplitude: 0.03,
            phase_speed: 1.2,
            seed: 0,
        }
    }

    #[test]
    fn zero_at_source_when_argument_vanishes() {
        let p = single([0.0, 0.0], 0.9);
        // k (0 - c t) + phase = 0
        let t = 0.9 / (6.0 * 1.2);
        assert!(p.height(0.0, 0.0, t).abs() < 1e-15);
    }

    #[test]
    fn zero_amplitude_is_flat() {
        let p = RippleParams { amplitude: 0.0, ..single([1.0, 1.0], 0.2) };
        let h = ripples_height(&p, 2.0, &Grid::square(16, 4.0)).unwrap();
        assert!(h.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn superposition_of_two_sources() {
        let grid = Grid::square(32, 4.0);
        let a = single([1.0, 3.0], 0.2);
        let b = single([2.5, 0.5], 2.1);
        let both = RippleParams {
            source_positions: vec![a.source_positions[0], b.source_positions[0]],
            source_phases: vec![0.2, 2.1],
            ..a.clone()
        };
        let (ha, hb, hab) = (
            ripples_height(&a, 0.8, &grid).unwrap(),
            ripples_height(&b, 0.8, &grid).unwrap(),
            ripples_height(&both, 0.8, &grid).unwrap(),
        );
        for i in 0..grid.len() {
            assert!((ha.data[i] + hb.data[i] - hab.data[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_sources_are_deterministic() {
        let a = RippleParams::seeded(5, [4.0, 4.0], 3.0, 6.0, 2.0, 0.03, 1.2);
        let b = RippleParams::seeded(5, [4.0, 4.0], 3.0, 6.0, 2.0, 0.03, 1.2);
        assert_eq!(a, b);
        assert!(a.source_count() >= 1);
        assert!(a.source_positions.iter().all(|p| (0.0..4.0).contains(&p[0]) && (0.0..4.0).contains(&p[1])));
    }

    #[test]
    fn rejects_non_positive_decay() {
        let p = RippleParams { decay_length: 0.0, ..single([0.0, 0.0], 0.0) };
        assert!(ripples_height(&p, 0.0, &Grid::square(4, 1.0)).is_err());
    }
}
