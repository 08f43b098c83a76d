//! Deterministic random numbers.
//!
//! Disorder ensembles must be reproducible from `(seed, i, j)` alone,
//! independent of evaluation order and platform, so couplings come from a
//! counter-based mix rather than a sequential generator.

/// SplitMix64 finalizer: a single stateless mixing step.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[inline]
fn to_unit_f64(bits: u64) -> f64 {
    // 53 high bits -> [0, 1)
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in [0, 1) keyed by (seed, i, j). Symmetric keys (i, j) and
/// (j, i) intentionally produce different streams; callers canonicalize.
#[inline]
pub fn keyed_uniform(seed: u64, i: u32, j: u32) -> f64 {
    let counter = ((i as u64) << 32) | j as u64;
    to_unit_f64(splitmix64(seed ^ splitmix64(counter)))
}

/// Sequential SplitMix64 stream, used for reproducible test states and
/// random parameter draws.
#[derive(Clone, Debug)]
pub struct SplitMix {
    state: u64,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        to_unit_f64(self.next_u64())
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
