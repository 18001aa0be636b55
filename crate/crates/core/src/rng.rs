//! Counter-based random numbers keyed by (seed, sample, site).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a word sequence.
pub fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(0x5eed_u64, |h, &w| mix64(h ^ mix64(w)))
}

/// Seed for one task of a parameter grid.
pub fn task_seed(global: u64, d: usize, t_idx: usize, theta_idx: usize, sample: u64) -> u64 {
    hash_words(&[global, d as u64, t_idx as u64, theta_idx as u64, sample])
}

/// Generator positioned at the block reserved for `site`.
pub fn site_rng(seed: u64, sample: u64, site: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(sample);
    rng.set_word_pos(site as u128 * 2);
    rng
}

/// Uniform draw in `[0, 1)` for `(seed, sample, site)`.
pub fn uniform(seed: u64, sample: u64, site: usize) -> f64 {
    site_rng(seed, sample, site).random::<f64>()
}
