//! Seeded randomness.
//!
//! Every stochastic step draws from ChaCha8 (`rand_chacha::ChaCha8Rng`), seeded
//! through [`seeded`]. ChaCha8's output stream is fixed by its algorithm, so the
//! same seed yields the same draws across builds and platforms. Uniform variates
//! and categorical draws are derived here from raw `u64` output rather than via
//! `rand`'s distribution code, so they cannot drift with a `rand` upgrade.
//!
//! Sub-seeds are derived with [`derive_seed`]: the first eight bytes
//! (little-endian) of `SHA-256(parent.to_le_bytes() || label)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SamplerRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SamplerRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derive_seed(parent: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in `0..n`. `n` must be positive.
#[inline]
pub fn below<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    debug_assert!(n > 0);
    ((uniform(rng) * n as f64) as usize).min(n - 1)
}

/// Draws an index from unnormalized non-negative `weights` whose sum is `total`.
#[inline]
pub fn categorical<R: RngCore + ?Sized>(rng: &mut R, weights: &[f64], total: f64) -> usize {
    let mut target = uniform(rng) * total;
    for (i, &w) in weights.iter().enumerate() {
        target -= w;
        if target < 0.0 {
            return i;
        }
    }
    // rounding left a sliver past the last bucket
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T, R: RngCore + ?Sized>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i + 1);
        items.swap(i, j);
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
