//! Synthetic inputs shared by the benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "soft", "comfy", "fabric", "fit", "small", "large", "color", "red", "dress", "shirt", "wash", "shrink", "love",
    "return", "price", "quality", "zipper", "sleeve", "waist", "length", "pretty", "cheap", "perfect", "tight",
];

/// `n` documents of 8 to 40 tokens drawn from a fixed vocabulary.
pub fn token_docs(n: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(8..=40);
            (0..len).map(|_| WORDS.choose(&mut rng).unwrap().to_string()).collect()
        })
        .collect()
}

/// `n` points in `dim` dimensions with uniform coordinates.
pub fn points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}
