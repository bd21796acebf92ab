use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use sha2::{Digest, Sha256};

use crate::textnorm::NormalizedText;

pub fn reverse_words(t: &NormalizedText) -> NormalizedText {
    let words: Vec<&str> = t.words().collect();
    NormalizedText::from_words(words.into_iter().rev(), t.source_hash())
}

/// Fisher–Yates shuffle of the word tokens.
///
/// The generator is SplitMix64 with its state initialised to `seed`. For
/// `i` from `n-1` down to 1, `j = (next_u64() · (i+1)) >> 64` (128-bit
/// product) and words `i` and `j` are swapped.
pub fn shuffle_words(t: &NormalizedText, seed: u64) -> NormalizedText {
    let mut words: Vec<&str> = t.words().collect();
    let mut rng = SplitMix64::seed_from_u64(seed);
    for i in (1..words.len()).rev() {
        let j = ((rng.next_u64() as u128 * (i as u128 + 1)) >> 64) as usize;
        words.swap(i, j);
    }
    NormalizedText::from_words(words, t.source_hash())
}

/// Per-utterance seed: the first 8 bytes (little-endian) of
/// `SHA-256(run_seed as u64 LE ‖ utterance_id UTF-8)`.
pub fn utterance_seed(run_seed: u64, utterance_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(run_seed.to_le_bytes());
    h.update(utterance_id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("sha256 is 32 bytes"))
}
