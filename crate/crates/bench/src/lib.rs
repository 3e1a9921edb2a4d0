//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semf1_core::continuous::VectorLabelSet;
use semf1_core::{EvaluationBatch, LabelSet, LabelUniverse};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_set<R: Rng>(rng: &mut R, n: usize, len: usize) -> LabelSet {
    LabelSet::from_indices((0..len).map(|_| rng.random_range(0..n)))
}

/// `examples` rows over `n` labels with up to `max_len` labels per side.
pub fn random_batch(n: usize, examples: usize, max_len: usize, seed: u64) -> EvaluationBatch {
    let mut r = rng(seed);
    let universe = Arc::new(LabelUniverse::numbered(n).unwrap());
    let side = |r: &mut ChaCha8Rng| {
        (0..examples)
            .map(|_| {
                let len = r.random_range(0..=max_len);
                random_set(r, n, len)
            })
            .collect::<Vec<_>>()
    };
    let gold = side(&mut r);
    let pred = side(&mut r);
    EvaluationBatch::new(universe, gold, pred).unwrap()
}

pub fn random_points(count: usize, dim: usize, seed: u64) -> VectorLabelSet {
    let mut r = rng(seed);
    VectorLabelSet::new(
        (0..count)
            .map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect(),
    )
    .unwrap()
}
