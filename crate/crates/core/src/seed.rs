//! Deterministic seed derivation.
//!
//! Every random quantity in this crate flows from one explicit 64-bit master
//! seed. Sub-streams (per replicate, per restart, per pair) are derived by
//! counter so that concurrent execution cannot change results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Bijective on `u64`, good avalanche behavior.
#[inline]
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from a master seed and a counter.
#[inline]
pub fn derive(master: u64, counter: u64) -> u64 {
    splitmix64(splitmix64(master) ^ counter.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Derives a sub-seed from a master seed and two counters (e.g. cell, replicate).
#[inline]
pub fn derive2(master: u64, a: u64, b: u64) -> u64 {
    derive(derive(master, a), b)
}

/// A seeded RNG for a derived stream.
pub fn rng(master: u64, counter: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, counter))
}

/// A uniform draw in `[0, 1)` keyed by `(seed, lo, hi)`.
///
/// Stateless: re-asking with the same key returns the same value, so pairwise
/// verdicts are reproducible regardless of query order or scheduling.
#[inline]
pub fn pair_uniform(seed: u64, lo: u64, hi: u64) -> f64 {
    let z = splitmix64(splitmix64(splitmix64(seed) ^ lo) ^ hi.wrapping_mul(0xA24B_AED4_963E_E407));
    // 53 high bits -> [0, 1)
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A Bernoulli draw keyed by `(seed, unordered pair {i, j})`.
///
/// `prob = 1.0` always yields `true` and `prob = 0.0` always `false`, because
/// the uniform variate lies in the half-open interval `[0, 1)`.
#[inline]
pub fn pair_bernoulli(seed: u64, i: usize, j: usize, prob: f64) -> bool {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    pair_uniform(seed, lo as u64, hi as u64) < prob
}
