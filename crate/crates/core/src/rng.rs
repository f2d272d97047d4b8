//! Counter-based random substreams.
//!
//! A stream is keyed by a 64-bit seed plus a path of integers such as
//! `[stage, realization, antenna, slot]`. The key is a pure function of the
//! pair, and the `n`-th output is a pure function of `(key, n)`, so any work
//! unit can regenerate its draws without knowing what other units consumed.
//! Outputs use the SplitMix64 finalizer.

use rand::rand_core::impls;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    key: u64,
    counter: u64,
}

impl RandomStream {
    pub fn new(seed: u64, path: &[u64]) -> Self {
        let mut key = mix64(seed ^ 0x6a09_e667_f3bc_c908);
        for &p in path {
            key = mix64(key ^ mix64(p.wrapping_add(GOLDEN_GAMMA)));
        }
        Self { key, counter: 0 }
    }

    /// Fresh stream one level further down the path. Independent of how many
    /// draws `self` has already produced.
    pub fn child(&self, index: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(index.wrapping_add(GOLDEN_GAMMA))),
            counter: 0,
        }
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}
