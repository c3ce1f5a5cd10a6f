//! Depth-averaged shallow-water equations on a periodic grid.
//!
//! Conservative variables `(rho h, rho h u, rho h v)` are advanced with a
//! finite-volume update using local Lax-Friedrichs (Rusanov) interface
//! fluxes. Interface fluxes telescope under periodic boundaries, so total
//! mass changes only by floating-point summation error.

use crate::error::{Error, Result};
use crate::field::HeightField;

/// Courant number used for every step.
pub const CFL: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct ShallowState {
    pub width: usize,
    pub height: usize,
    /// Water depth per cell (m).
    pub depth: Vec<f64>,
    /// Depth-averaged velocities (m/s).
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub rho: f64,
    pub gravity: f64,
    pub dx: f64,
    pub dy: f64,
    pub time: f64,
}

/// A Gaussian depth perturbation, positioned in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: [f64; 2],
    pub amplitude: f64,
    pub sigma: f64,
}

impl ShallowState {
    pub fn rest(width: usize, height: usize, dx: f64, dy: f64, depth: f64) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            depth: vec![depth; n],
            u: vec![0.0; n],
            v: vec![0.0; n],
            rho: 1.0,
            gravity: 9.81,
            dx,
            dy,
            time: 0.0,
        }
    }

    /// Still water of `rest_depth` plus Gaussian bumps, using periodic distances.
    pub fn with_bumps(
        width: usize,
        height: usize,
        dx: f64,
        dy: f64,
        rest_depth: f64,
        bumps: &[Bump],
    ) -> Self {
        let mut state = Self::rest(width, height, dx, dy, rest_depth);
        let (lx, ly) = (width as f64 * dx, height as f64 * dy);
        for r in 0..height {
            for c in 0..width {
                let (x, y) = (c as f64 * dx, r as f64 * dy);
                let mut h = rest_depth;
                for b in bumps {
                    let ddx = periodic_delta(x - b.center[0], lx);
                    let ddy = periodic_delta(y - b.center[1], ly);
                    h += b.amplitude * (-(ddx * ddx + ddy * ddy) / (2.0 * b.sigma * b.sigma)).exp();
                }
                state.depth[r * width + c] = h;
            }
        }
        state
    }

    pub fn total_mass(&self) -> f64 {
        self.depth.iter().sum::<f64>() * self.rho * self.dx * self.dy
    }

    /// Largest stable step for this state.
    pub fn max_stable_dt(&self) -> f64 {
        let mut speed = 0.0f64;
        for i in 0..self.depth.len() {
            let c = (self.gravity * self.depth[i].max(0.0)).sqrt();
            speed = speed.max(self.u[i].abs() + c).max(self.v[i].abs() + c);
        }
        if speed == 0.0 {
            return f64::INFINITY;
        }
        CFL * self.dx.min(self.dy) / speed
    }

    pub fn surface(&self) -> HeightField {
        HeightField {
            width: self.width,
            height: self.height,
            dx: self.dx,
            dy: self.dy,
            data: self.depth.clone(),
        }
    }
}

fn periodic_delta(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

#[derive(Clone, Copy)]
struct Cons {
    h: f64,
    hu: f64,
    hv: f64,
}

#[inline]
fn rusanov(left: Cons, right: Cons, g: f64, along_x: bool) -> Cons {
    let vel = |s: Cons| {
        if s.h > 0.0 {
            (s.hu / s.h, s.hv / s.h)
        } else {
            (0.0, 0.0)
        }
    };
    let ((ul, vl), (ur, vr)) = (vel(left), vel(right));
    let (cl, cr) = ((g * left.h.max(0.0)).sqrt(), (g * right.h.max(0.0)).sqrt());
    let flux = |s: Cons, u: f64, v: f64| {
        if along_x {
            Cons {
                h: s.hu,
                hu: s.hu * u + 0.5 * g * s.h * s.h,
                hv: s.hu * v,
            }
        } else {
            Cons {
                h: s.hv,
                hu: s.hv * u,
                hv: s.hv * v + 0.5 * g * s.h * s.h,
            }
        }
    };
    let (fl, fr) = (flux(left, ul, vl), flux(right, ur, vr));
    let a = if along_x {
        (ul.abs() + cl).max(ur.abs() + cr)
    } else {
        (vl.abs() + cl).max(vr.abs() + cr)
    };
    Cons {
        h: 0.5 * (fl.h + fr.h) - 0.5 * a * (right.h - left.h),
        hu: 0.5 * (fl.hu + fr.hu) - 0.5 * a * (right.hu - left.hu),
        hv: 0.5 * (fl.hv + fr.hv) - 0.5 * a * (right.hv - left.hv),
    }
}

/// Advances `state` by `dt` seconds.
pub fn shallow_step(state: &ShallowState, dt: f64) -> Result<ShallowState> {
    let limit = state.max_stable_dt();
    if !(dt >= 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, limit });
    }
    let (w, hgt) = (state.width, state.height);
    let n = w * hgt;
    // rho is constant, so it factors out of every flux; work per unit density
    let cons: Vec<Cons> = (0..n)
        .map(|i| Cons {
            h: state.depth[i],
            hu: state.depth[i] * state.u[i],
            hv: state.depth[i] * state.v[i],
        })
        .collect();
    let g = state.gravity;

    // flux through the right face of each cell and the bottom face of each cell
    let mut fx = Vec::with_capacity(n);
    let mut fy = Vec::with_capacity(n);
    for r in 0..hgt {
        let rd = (r + 1) % hgt;
        for c in 0..w {
            let cr = (c + 1) % w;
            fx.push(rusanov(cons[r * w + c], cons[r * w + cr], g, true));
            fy.push(rusanov(cons[r * w + c], cons[rd * w + c], g, false));
        }
    }

    let (kx, ky) = (dt / state.dx, dt / state.dy);
    let mut next = ShallowState {
        depth: vec![0.0; n],
        u: vec![0.0; n],
        v: vec![0.0; n],
        time: state.time + dt,
        ..state.clone()
    };
    let mut min_depth = f64::INFINITY;
    for r in 0..hgt {
        let ru = (r + hgt - 1) % hgt;
        for c in 0..w {
            let cl = (c + w - 1) % w;
            let i = r * w + c;
            let (e, wst, s, nth) = (fx[i], fx[r * w + cl], fy[i], fy[ru * w + c]);
            let h = cons[i].h - kx * (e.h - wst.h) - ky * (s.h - nth.h);
            let hu = cons[i].hu - kx * (e.hu - wst.hu) - ky * (s.hu - nth.hu);
            let hv = cons[i].hv - kx * (e.hv - wst.hv) - ky * (s.hv - nth.hv);
            min_depth = min_depth.min(h);
            next.depth[i] = h;
            if h > 0.0 {
                next.u[i] = hu / h;
                next.v[i] = hv / h;
            }
        }
    }
    if !(min_depth > 0.0) {
        return Err(Error::Stability {
            min_depth,
            time: next.time,
        });
    }
    Ok(next)
}

/// Advances a state through arbitrary target times with CFL-limited substeps.
#[derive(Debug, Clone)]
pub struct ShallowSimulator {
    state: ShallowState,
}

impl ShallowSimulator {
    pub fn new(state: ShallowState) -> Self {
        Self { state }
    }

    pub fn state(&self) -> &ShallowState {
        &self.state
    }

    pub fn advance_to(&mut self, time: f64) -> Result<&ShallowState> {
        if time < self.state.time {
            return Err(Error::Input(format!(
                "cannot rewind shallow-water simulation from t={} to t={time}",
                self.state.time
            )));
        }
        while self.state.time < time {
            let remaining = time - self.state.time;
            let dt = self.state.max_stable_dt().min(remaining);
            let mut next = shallow_step(&self.state, dt)?;
            if dt == remaining {
                next.time = time;
            }
            self.state = next;
        }
        Ok(&self.state)
    }
}
