//! Counter-addressed Gaussian draws.
//!
//! Draw number `i` of stream `s` under seed `k` is a pure function of
//! `(k, s, i)`: ChaCha8 keyed by the seed, with the stream id as the ChaCha
//! stream and the draw index as the block-word position. Gaussians use the
//! inverse normal CDF so each consumes exactly one 64-bit word pair.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Clone, Debug)]
pub struct CounterRng {
    seed: u64,
    base: ChaCha8Rng,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sequential reader positioned at draw 0 of `stream`.
    pub fn stream(&self, stream: u64) -> DrawStream {
        let mut rng = self.base.clone();
        rng.set_stream(stream);
        rng.set_word_pos(0);
        DrawStream {
            rng,
            normal: Normal::standard(),
        }
    }

    pub fn normal_at(&self, stream: u64, index: u64) -> f64 {
        let mut s = self.stream(stream);
        s.seek(index);
        s.normal()
    }

    pub fn uniform_at(&self, stream: u64, index: u64) -> f64 {
        let mut s = self.stream(stream);
        s.seek(index);
        s.uniform()
    }
}

pub struct DrawStream {
    rng: ChaCha8Rng,
    normal: Normal,
}

impl DrawStream {
    /// Jump to draw `index`.
    pub fn seek(&mut self, index: u64) {
        self.rng.set_word_pos(2 * index as u128);
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        let x = self.rng.next_u64();
        ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let p = self.uniform();
        self.normal.inverse_cdf(p)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.normal();
        }
    }
}
