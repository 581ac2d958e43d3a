//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a 64-bit
//! value obtained by [`split`]ting a parent seed with an index. The mixing
//! function is the SplitMix64 finalizer (increment `0x9E3779B97F4A7C15`,
//! multipliers `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`, shifts 30/27/31),
//! so a single image or dataset sample can be reproduced in isolation from
//! the master seed and its index path.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the child seed number `index` of `seed`.
pub fn split(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index))
}

pub fn stream(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for child `index` of `seed`.
pub fn substream(seed: u64, index: u64) -> Rng {
    stream(split(seed, index))
}

/// Domain tags used as `split` indices so unrelated streams never collide.
pub mod tags {
    pub const SAMPLES: u64 = 0x5341_4d50;
    pub const BIJECTION: u64 = 0x4249_4a45;
    pub const PATTERN: u64 = 0x5041_5454;
    pub const TRAIN: u64 = 0x5452_4149;
    pub const VAL: u64 = 0x5641_4c49;
    pub const TEST: u64 = 0x5445_5354;
    pub const PROBE: u64 = 0x5052_4f42;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn mix64_reference_values() {
        // First outputs of the reference SplitMix64 generator seeded with 0:
        // state advances by the golden gamma before finalizing.
        assert_eq!(mix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(mix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn split_is_deterministic_and_index_sensitive() {
        assert_eq!(split(7, 3), split(7, 3));
        assert_ne!(split(7, 3), split(7, 4));
        assert_ne!(split(7, 3), split(8, 3));
        let a: u64 = substream(1, 2).random();
        let b: u64 = substream(1, 2).random();
        assert_eq!(a, b);
    }
}
