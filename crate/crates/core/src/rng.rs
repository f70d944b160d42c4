//! Reproducible RNG streams.
//!
//! Every stochastic routine in this crate takes either an explicit RNG or a
//! `u64` seed. Monte Carlo drivers derive per-cell streams from a master seed
//! with [`child_seed`], so cells can run in any order (or in parallel) and
//! still reproduce bit-identical results.
//!
//! The split function is a SplitMix64 finalizer folded over the path of tag
//! words: `s_0 = mix(master ^ C)`, `s_{k+1} = mix(s_k * C + tag_k + 1)`,
//! where `C = 0x9e3779b97f4a7c15`. Distinct paths give independent-looking
//! streams; the `+ 1` keeps a zero tag from acting as a near no-op.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e3779b97f4a7c15;

/// SplitMix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of tag words.
pub fn child_seed(master: u64, path: &[u64]) -> u64 {
    let mut s = mix(master ^ GOLDEN);
    for &tag in path {
        s = mix(s.wrapping_mul(GOLDEN).wrapping_add(tag).wrapping_add(1));
    }
    s
}

/// A seeded ChaCha stream for the given path under a master seed.
///
/// ChaCha8 is used everywhere because its output is stable across platforms
/// and library versions, unlike `StdRng`.
pub fn stream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(master, path))
}

/// A stream seeded directly (no path).
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
