use crate::error::{Error, Result};
use crate::field::{HeightField, NormalField};

/// Height gradients `(dh/dx, dh/dy)`: central differences inside, one-sided
/// differences on the border.
pub fn height_gradient(h: &HeightField) -> Result<Vec<[f64; 2]>> {
    let (w, ht) = (h.width, h.height);
    if w < 2 || ht < 2 {
        return Err(Error::Shape(format!("gradient needs at least 2x2 cells, got {w}x{ht}")));
    }
    let mut out = Vec::with_capacity(w * ht);
    for r in 0..ht {
        for c in 0..w {
            let gx = if c == 0 {
                (h.at(1, r) - h.at(0, r)) / h.dx
            } else if c == w - 1 {
                (h.at(c, r) - h.at(c - 1, r)) / h.dx
            } else {
                (h.at(c + 1, r) - h.at(c - 1, r)) / (2.0 * h.dx)
            };
            let gy = if r == 0 {
                (h.at(c, 1) - h.at(c, 0)) / h.dy
            } else if r == ht - 1 {
                (h.at(c, r) - h.at(c, r - 1)) / h.dy
            } else {
                (h.at(c, r + 1) - h.at(c, r - 1)) / (2.0 * h.dy)
            };
            out.push([gx, gy]);
        }
    }
    Ok(out)
}

#[inline]
pub fn normal_from_slope(g: [f64; 2]) -> [f64; 3] {
    let inv = 1.0 / (g[0] * g[0] + g[1] * g[1] + 1.0).sqrt();
    [-g[0] * inv, -g[1] * inv, inv]
}

pub fn normals_from_height(h: &HeightField) -> Result<NormalField> {
    let grad = height_gradient(h)?;
    Ok(NormalField {
        width: h.width,
        height: h.height,
        data: grad.into_iter().map(normal_from_slope).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::wavefield::sine::{sine_height, SineParams};

    #[test]
    fn flat_field_points_up() {
        let n = normals_from_height(&HeightField::zeros(5, 4, 0.1, 0.1)).unwrap();
        assert!(n.data.iter().all(|&v| v == [0.0, 0.0, 1.0]));
    }

    #[test]
    fn plane_normals_are_exact() {
        let (a, b) = (0.3, -0.7);
        let h = Grid::square(9, 2.0).height_from_fn(|x, z| a * x + b * z);
        let n = normals_from_height(&h).unwrap();
        let len = (a * a + b * b + 1.0f64).sqrt();
        let want = [-a / len, -b / len, 1.0 / len];
        for v in &n.data {
            for k in 0..3 {
                assert!((v[k] - want[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_degenerate_grid() {
        assert!(normals_from_height(&HeightField::zeros(1, 5, 1.0, 1.0)).is_err());
    }

    fn interior_error(n: usize, p: &SineParams) -> f64 {
        let grid = Grid::square(n, 8.0);
        let h = sine_height(p, 0.3, &grid);
        let g = height_gradient(&h).unwrap();
        let mut err = 0.0f64;
        for r in 1..n - 1 {
            for c in 1..n - 1 {
                let exact = p.gradient(c as f64 * grid.dx, r as f64 * grid.dy, 0.3);
                let got = g[r * n + c];
                err = err.max((got[0] - exact[0]).abs()).max((got[1] - exact[1]).abs());
            }
        }
        err
    }

    #[test]
    fn sine_gradient_is_second_order() {
        let p = SineParams {
            amplitude: 0.1,
            wavenumber: 2.0,
            angular_freq: 1.0,
            phase: 0.3,
            direction_angle: 0.6,
        };
        let coarse = interior_error(256, &p);
        let fine = interior_error(512, &p);
        let dx = 8.0 / 256.0;
        // central difference error bound A k^3 dx^2 / 6
        assert!(coarse <= 0.1 * 8.0 * dx * dx / 6.0 * 1.01, "{coarse}");
        let ratio = coarse / fine;
        assert!((ratio - 4.0).abs() < 0.2, "refinement ratio {ratio}");
    }
}
