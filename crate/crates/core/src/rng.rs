//! Counter-based generator with keyed streams.
//!
//! A stream is a 64-bit key; draw `k` of a stream is
//! `mix64(key + (k + 1) * GOLDEN)`, i.e. SplitMix64 started at the key.
//! Keys are derived by hashing `(master seed, a, b)` through the same
//! finalizer, so the value of any cell depends only on the seed and the
//! cell coordinates, never on iteration or thread order.

use rand_core::{impls, RngCore};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const K_A: u64 = 0xD1B5_4A32_D192_ED03;
const K_B: u64 = 0xAEF1_7502_108E_F2D9;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream key for the pair `(a, b)` under `seed`.
#[inline]
pub fn stream_key(seed: u64, a: u64, b: u64) -> u64 {
    let h = mix64(seed ^ 0x6A09_E667_F3BC_C908);
    let h = mix64(h ^ a.wrapping_mul(K_A));
    mix64(h ^ b.wrapping_mul(K_B))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn from_key(key: u64) -> Self {
        CounterRng { key, counter: 0 }
    }

    /// Stream of lattice cell `(i, j)`.
    pub fn for_cell(seed: u64, i: u64, j: u64) -> Self {
        Self::from_key(stream_key(seed, i, j))
    }

    /// Stream `index` of a one-dimensional family, e.g. replicates.
    pub fn for_index(seed: u64, index: u64) -> Self {
        Self::from_key(stream_key(seed, index, u64::MAX))
    }

    /// Derived master seed for replicate `r`.
    pub fn derive_seed(seed: u64, r: u64) -> u64 {
        stream_key(seed, u64::MAX, r)
    }

    /// Uniform in the open interval (0, 1) with 53 random bits.
    #[inline]
    pub fn open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}
