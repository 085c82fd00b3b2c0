//! Deterministic random-stream derivation.
//!
//! Every random choice in a run is drawn from a stream whose seed is a pure
//! function of (experiment seed, place in the structure): the level, the
//! stage of the recursion, the instance or link or message index. Nothing
//! depends on execution order, so results are identical across thread counts
//! and sub-instance scheduling — the property the determinism criteria rely
//! on.
//!
//! Two generators are used:
//! - [`ChaCha8Rng`] for experiment-level streams (traffic generation, one
//!   stream per clique instance) where a full-strength generator is cheap;
//! - [`SplitMix64`] for hot-path streams (per-message relay draws, per-link
//!   queue shuffles) where millions of generator initializations per second
//!   matter. SplitMix64 is the stream generator of Java's SplittableRandom
//!   and passes BigCrush; it is more than adequate for tie-breaking.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function: a bijective avalanche mix over `u64`.
#[inline]
pub fn mix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a tagged path (seed, level, stage, index, …) into one stream seed.
///
/// Each part passes through the full mixer before being chained, so seeds
/// that differ in any single part land in unrelated streams.
#[inline]
pub fn derive(parts: &[u64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3; // pi fraction: arbitrary nonzero start
    for &p in parts {
        h = mix64(h ^ mix64(p));
    }
    h
}

/// Maps a mixed word to `0..m` without modulo bias (Lemire reduction).
#[inline]
pub fn bounded(x: u64, m: u64) -> u64 {
    debug_assert!(m > 0);
    ((x as u128 * m as u128) >> 64) as u64
}

/// Experiment-level stream addressed by a derivation path.
pub fn chacha(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(parts))
}

/// Minimal sequential SplitMix64 stream for hot paths.
#[derive(Clone, Debug)]
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn from_parts(parts: &[u64]) -> Self {
        SplitMix64(derive(parts))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(GOLDEN);
        // mix64 adds GOLDEN itself; feed the raw counter so state and output
        // stay the standard SplitMix64 sequence.
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from `0..m` (Lemire reduction).
    #[inline]
    pub fn below(&mut self, m: u64) -> u64 {
        bounded(self.next_u64(), m)
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}

// Stage tags for stream derivation. Values are arbitrary distinct constants.
pub const TAG_TRAFFIC: u64 = 0x54_52_41_46; // "TRAF"
pub const TAG_CLIQUE: u64 = 0x43_4C_49_51; // "CLIQ"
pub const TAG_RELAY: u64 = 0x52_45_4C_59; // "RELY"
pub const TAG_XING: u64 = 0x58_49_4E_47; // "XING"
pub const TAG_VALIANT: u64 = 0x56_41_4C_54; // "VALT"
pub const TAG_SAMPLE: u64 = 0x53_41_4D_50; // "SAMP"
