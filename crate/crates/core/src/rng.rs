//! Seed derivation and deterministic sampling helpers.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`] whose
//! 64-bit seed is derived from a master seed by [`mix64`]. Parallel workers
//! never share RNG state: each task derives its own child seed from
//! `(master, stream index)`, so results are independent of scheduling order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64-style mixer used to derive child seed `i` from `seed`.
///
/// The child state is `seed + (i + 1) * 0x9E3779B97F4A7C15` passed through
/// the SplitMix64 finalizer (xor-shift/multiply rounds with constants
/// `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`, shifts 30/27/31). The
/// `i + 1` offset keeps stream 0 distinct from the raw seed.
pub fn mix64(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add((i.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a tag chain into a single child seed: `mix64(mix64(seed, t0), t1)…`
pub fn mix_chain(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(seed, |acc, &t| mix64(acc, t))
}

/// Deterministic RNG for the given seed chain.
pub fn rng_for(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_chain(seed, tags))
}

/// One standard-normal draw via Box-Muller.
///
/// Uses two uniform draws per call; the second Box-Muller output is
/// discarded so each call consumes a fixed amount of RNG state.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// A Rademacher sign, +1.0 or -1.0 with equal probability.
pub fn rademacher_sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}
