//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, lane, counter)`: ChaCha8 keyed by the
//! seed, with the lane as its stream id and the counter as its word
//! position. Any row of a batch can therefore be regenerated independently
//! of how rows are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    lane: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, lane: u64) -> Self {
        Self::at(seed, lane, 0)
    }

    /// A stream positioned at 32-bit word `counter` of `(seed, lane)`.
    pub fn at(seed: u64, lane: u64, counter: u128) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(lane);
        inner.set_word_pos(counter);
        RngStream { seed, lane, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lane(&self) -> u64 {
        self.lane
    }

    /// Current 32-bit word position.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
