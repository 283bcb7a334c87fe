//! Seeded random source shared by the adversary model and artefact nonces.
//!
//! The generator is PCG64 (128-bit LCG state, XSL-RR output permutation) as
//! published by O'Neill. A stream is seeded with `state = seed` and
//! `stream = STREAM_BASE + stream_id`. Floats are built from the top 53 bits
//! of one 64-bit draw, so any PCG64 implementation reproduces identical
//! values from identical seeds.

use rand_core::Rng;
use rand_pcg::Pcg64;

const STREAM_BASE: u128 = 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96;

/// Stream used for trust-gap sampling and other adversary draws.
pub const ADVERSARY_STREAM: u64 = 0;
/// Stream used for artefact nonces.
pub const NONCE_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: Pcg64,
}

impl SimRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        SimRng {
            inner: Pcg64::new(seed as u128, STREAM_BASE.wrapping_add(stream_id as u128)),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi]` (the upper end is reached only when `lo == hi`).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// 128-bit nonce: high word first.
    pub fn nonce(&mut self) -> u128 {
        let hi = self.next_u64() as u128;
        let lo = self.next_u64() as u128;
        (hi << 64) | lo
    }
}
