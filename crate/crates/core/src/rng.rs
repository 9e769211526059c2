//! Seeded, stream-addressable random numbers.
//!
//! Every stochastic operation takes an explicit [`Rng`]. Floats are built from
//! raw 64-bit words with integer arithmetic only, so a given `(seed, stream)`
//! yields the same sequence on every platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl Rng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Independent child stream, a pure function of `(seed, stream_id, index)`.
    pub fn fork(&self, index: u64) -> Rng {
        let stream = splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)));
        Rng::new(self.seed, stream)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform in the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * TWO_POW_NEG_53
    }

    /// Uniform in `[lo, hi]` (returns `lo` when the range is empty).
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        (lo + (hi - lo) * self.uniform()).min(hi)
    }

    /// Unbiased integer in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Poisson draw by multiplication of uniforms; `exp_neg_lambda` is `e^-λ`.
    ///
    /// Cost is linear in λ, which is fine for the per-source rates used here.
    pub fn poisson_with(&mut self, exp_neg_lambda: f64) -> u64 {
        let mut k = 0;
        let mut prod = self.uniform_open();
        while prod > exp_neg_lambda {
            k += 1;
            prod *= self.uniform_open();
        }
        k
    }
}
