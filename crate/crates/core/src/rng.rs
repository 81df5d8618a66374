//! Seedable, splittable random streams.
//!
//! Every stream is a ChaCha8 generator keyed by `seed_from_u64(seed)` with the
//! ChaCha stream word set to the sub-stream id. Floating-point and integer
//! draws are derived here from raw 64-bit outputs rather than through a
//! distribution library, so the draw sequence for a given `(seed, stream)`
//! depends only on ChaCha8 itself:
//!
//! * `uniform()` takes the top 53 bits of `next_u64` and scales by 2⁻⁵³,
//!   giving a value in `[0, 1)`.
//! * `below(n)` is the high word of the 128-bit product `next_u64 · n`
//!   (multiply-shift; the bias is at most `n / 2⁶⁴`).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Sub-stream ids used by experiment runs.
pub mod streams {
    pub const ENVIRONMENT: u64 = 1;
    pub const AGENT: u64 = 2;
    pub const NETWORK_INIT: u64 = 3;
    pub const REPLAY: u64 = 4;
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    /// Independent sub-stream sharing this stream's seed. Draws from the child
    /// never perturb the parent, and vice versa.
    pub fn split(&self, stream: u64) -> Self {
        Self::with_stream(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw from `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `[lo, hi)`.
    #[inline]
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.inner.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Fair coin.
    #[inline]
    pub fn coin(&mut self) -> bool {
        self.inner.next_u64() >> 63 == 1
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn substreams_are_independent_of_parent_draws() {
        let parent = RngStream::new(7);
        let mut child_a = parent.split(streams::ENVIRONMENT);
        let mut drained = parent.clone();
        for _ in 0..100 {
            drained.next_u64();
        }
        let mut child_b = drained.split(streams::ENVIRONMENT);
        for _ in 0..100 {
            assert_eq!(child_a.next_u64(), child_b.next_u64());
        }
        let mut env = parent.split(streams::ENVIRONMENT);
        let mut agent = parent.split(streams::AGENT);
        assert_ne!(env.next_u64(), agent.next_u64());
    }

    #[test]
    fn uniform_is_in_unit_interval() {
        let mut rng = RngStream::new(1);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn below_stays_in_range_and_covers_it() {
        let mut rng = RngStream::new(3);
        let mut seen = [0usize; 13];
        for _ in 0..13_000 {
            seen[rng.below(13)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }

    const PINNED_FIRST_DRAW: u64 = 0xb585_f767_a79a_3b6c;

    #[test]
    fn known_first_draw_is_stable() {
        // Pins the generator choice; changing it silently would break
        // byte-identical reruns of stored experiments.
        let mut a = RngStream::new(0);
        let first = a.next_u64();
        let mut b = RngStream::with_stream(0, 0);
        assert_eq!(first, b.next_u64());
        assert_ne!(first, RngStream::new(1).next_u64());
        assert_eq!(first, PINNED_FIRST_DRAW, "{first:#x}");
    }
}
