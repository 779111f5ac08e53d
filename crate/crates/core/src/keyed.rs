//! Counter-based randomness keyed on `(seed, index)`.
//!
//! Word `index` of a table is the 64-bit word at position `2 * index` of the
//! ChaCha8 stream seeded with `seed`, so a value never depends on the order
//! in which indices are visited. Sequential fills produce exactly the same
//! words as random access.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The word at `(seed, index)`.
pub fn keyed_u64(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// Words for indices `0..len`, identical to `keyed_u64(seed, i)`.
pub fn keyed_words(seed: u64, len: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.next_u64()).collect()
}

/// Uniform in `[0, 1)` with 53 random bits.
pub fn unit_interval(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `[-1, 1)`.
pub fn symmetric_unit(word: u64) -> f64 {
    2.0 * unit_interval(word) - 1.0
}

/// Independent sub-seed for stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_add(1));
    rng.next_u64()
}
