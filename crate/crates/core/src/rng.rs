//! Deterministic random streams.
//!
//! Every random quantity in the crate comes from [`DetRng`], a PCG-XSL-RR
//! 128/64 generator (`rand_pcg::Pcg64`) seeded through `SeedableRng::seed_from_u64`.
//! The float conversions are defined here rather than borrowed from a
//! distribution crate so that the produced values are pinned:
//!
//! * `unit()` = `(next_u64() >> 11) * 2^-53`, in `[0, 1)`;
//! * `uniform(lo, hi)` = `lo + (hi - lo) * unit()`;
//! * `gaussian()` uses the basic Box–Muller transform on two `unit()` draws,
//!   returning the cosine branch first and caching the sine branch.
//!
//! Independent streams derived from one experiment seed are separated with
//! [`DetRng::stream`].

use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;

const STREAM_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct DetRng {
    inner: Pcg64,
    spare_normal: Option<f64>,
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Pcg64::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Generator for a named sub-stream of `seed`.
    pub fn stream(seed: u64, stream: u64) -> Self {
        Self::new(seed ^ stream.wrapping_add(1).wrapping_mul(STREAM_MIX))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform index in `0..n`. `n` must be nonzero.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.unit() * n as f64) as usize).min(n - 1)
    }

    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - unit() lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }
}
