use crate::field::{Grid, HeightField};

/// Rotated plane sine wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineParams {
    /// Metres.
    pub amplitude: f64,
    /// rad/m along the propagation direction.
    pub wavenumber: f64,
    /// rad/s.
    pub angular_freq: f64,
    pub phase: f64,
    /// Propagation direction, radians from the +x axis.
    pub direction_angle: f64,
}

impl SineParams {
    #[inline]
    pub fn height(&self, x: f64, z: f64, t: f64) -> f64 {
        let (s, c) = self.direction_angle.sin_cos();
        let along = x * c + z * s;
        self.amplitude * (self.wavenumber * along - self.angular_freq * t + self.phase).sin()
    }

    /// Analytic `(dh/dx, dh/dz)`.
    pub fn gradient(&self, x: f64, z: f64, t: f64) -> [f64; 2] {
        let (s, c) = self.direction_angle.sin_cos();
        let along = x * c + z * s;
        let d = self.amplitude
            * self.wavenumber
            * (self.wavenumber * along - self.angular_freq * t + self.phase).cos();
        [d * c, d * s]
    }
}

pub fn sine_height(p: &SineParams, t: f64, grid: &Grid) -> HeightField {
    grid.height_from_fn(|x, z| p.height(x, z, t))
}
