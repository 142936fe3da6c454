//! Splittable, seedable random streams.
//!
//! A [`SeedStream`] is a 256-bit key. Child streams are derived by mixing a
//! child index into the key with SplitMix64, so any node of the derivation
//! tree can be reached without touching its siblings. Generators are
//! ChaCha8 instances keyed from a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator handle passed to every stochastic operation.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedStream {
    key: [u64; 4],
}

impl SeedStream {
    pub fn new(master_seed: u64) -> Self {
        let mut key = [0u64; 4];
        let mut state = master_seed;
        for word in key.iter_mut() {
            state = splitmix64(state);
            *word = state;
        }
        SeedStream { key }
    }

    /// Derives the `index`-th child stream. Distinct indices give unrelated keys.
    pub fn child(&self, index: u64) -> Self {
        let mut key = [0u64; 4];
        let mut acc = splitmix64(index ^ 0x5851_f42d_4c95_7f2d);
        for (i, word) in key.iter_mut().enumerate() {
            acc = splitmix64(acc ^ self.key[i]);
            *word = acc;
        }
        SeedStream { key }
    }

    /// Shorthand for a chain of [`child`](Self::child) calls.
    pub fn path(&self, indices: &[u64]) -> Self {
        indices.iter().fold(*self, |s, &i| s.child(i))
    }

    pub fn rng(&self) -> SimRng {
        let mut seed = [0u8; 32];
        for (chunk, word) in seed.chunks_exact_mut(8).zip(self.key.iter()) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}
