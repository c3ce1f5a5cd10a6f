//! Counter-based pseudorandom numbers.
//!
//! Every draw is a pure function of a 64-bit key and a 64-bit counter, so a
//! value depends only on *where* it is used (seed, wave type, profile, cell)
//! and never on how many other values were drawn before it or on which
//! worker drew them.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A keyed counter-based generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ 0x5851_F42D_4C95_7F2D),
        }
    }

    /// Derives an independent generator for a named sub-stream.
    pub fn substream(self, tag: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(tag.wrapping_add(GOLDEN))),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        let x = mix64(self.key ^ counter.wrapping_mul(GOLDEN));
        mix64(x.wrapping_add(self.key.rotate_left(17)) ^ counter)
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform_at(&self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Two independent standard normals (Box-Muller) for one counter slot.
    #[inline]
    pub fn normal_pair_at(&self, counter: u64) -> (f64, f64) {
        let u1 = self.uniform_at(counter.wrapping_mul(2));
        let u2 = self.uniform_at(counter.wrapping_mul(2).wrapping_add(1));
        // 1 - u1 lies in (0, 1], so the log is finite
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        (r * theta.cos(), r * theta.sin())
    }

    /// Uniform integer in `[0, n)`.
    #[inline]
    pub fn below_at(&self, counter: u64, n: u64) -> u64 {
        assert!(n > 0);
        ((self.u64_at(counter) as u128 * n as u128) >> 64) as u64
    }

    pub fn cursor(self) -> RngCursor {
        RngCursor { rng: self, next: 0 }
    }
}

/// Sequential view over a [`CounterRng`], for places where draw order is fixed.
#[derive(Debug, Clone)]
pub struct RngCursor {
    rng: CounterRng,
    next: u64,
}

impl RngCursor {
    pub fn next_u64(&mut self) -> u64 {
        let v = self.rng.u64_at(self.next);
        self.next += 1;
        v
    }

    pub fn uniform(&mut self) -> f64 {
        let v = self.rng.uniform_at(self.next);
        self.next += 1;
        v
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        let v = self.rng.below_at(self.next, n);
        self.next += 1;
        v
    }

    pub fn normal(&mut self) -> f64 {
        let v = self.rng.normal_pair_at(self.next).0;
        self.next += 1;
        v
    }

    /// Poisson draw by inversion; fine for the small means used here.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        let limit = (-mean).exp();
        let mut k = 0;
        let mut p = self.uniform();
        while p > limit && k < 10_000 {
            k += 1;
            p *= self.uniform();
        }
        k
    }
}
