//! Regular-grid scalar and vector fields shared by the wave generators.

use crate::error::{Error, Result};

/// Surface height on a regular grid, row-major with `x` along columns and
/// `y` along rows. Cell sizes are in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub width: usize,
    pub height: usize,
    pub dx: f64,
    pub dy: f64,
    pub data: Vec<f64>,
}

impl HeightField {
    pub fn zeros(width: usize, height: usize, dx: f64, dy: f64) -> Self {
        Self {
            width,
            height,
            dx,
            dy,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        dx: f64,
        dy: f64,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(c as f64 * dx, r as f64 * dy));
            }
        }
        Self {
            width,
            height,
            dx,
            dy,
            data,
        }
    }

    #[inline]
    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn std(&self) -> f64 {
        let n = self.data.len() as f64;
        let mean = self.data.iter().sum::<f64>() / n;
        (self.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    }
}

/// Unit surface normals, z-up.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f64; 3]>,
}

impl NormalField {
    pub fn flat(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![[0.0, 0.0, 1.0]; width * height],
        }
    }

    #[inline]
    pub fn at(&self, col: usize, row: usize) -> [f64; 3] {
        self.data[row * self.width + col]
    }

    pub fn check_same_shape(&self, width: usize, height: usize) -> Result<()> {
        if self.width != width || self.height != height {
            return Err(Error::Shape(format!(
                "normal field is {}x{}, expected {}x{}",
                self.width, self.height, width, height
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

#[inline]
pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
#[inline]
pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Sampling lattice of a wave domain: `width x height` cells of `dx x dy` metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub dx: f64,
    pub dy: f64,
}

impl Grid {
    pub fn square(n: usize, length: f64) -> Self {
        Self {
            width: n,
            height: n,
            dx: length / n as f64,
            dy: length / n as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn height_from_fn(&self, f: impl FnMut(f64, f64) -> f64) -> HeightField {
        HeightField::from_fn(self.width, self.height, self.dx, self.dy, f)
    }
}
