//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, stream, step, counter)`, so the
//! numbers a particle sees do not depend on how work was split across
//! threads.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key shared by every stream at one step.
#[inline]
pub fn step_key(seed: u64, step: u64) -> u64 {
    mix(mix(seed ^ GOLDEN).wrapping_add(step))
}


/// SplitMix64 sequence started from a stream key.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64, step: u64) -> Self {
        Self::from_step_key(step_key(seed, step), stream)
    }

    /// Same stream as `new(seed, stream, step)` given `step_key(seed, step)`.
    #[inline]
    pub fn from_step_key(key: u64, stream: u64) -> Self {
        Self {
            key: mix(key ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)),
            counter: 0,
        }
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Uniform in the open interval `(0, 1)` from 53 random bits.
#[inline]
pub fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
