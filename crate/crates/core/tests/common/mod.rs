#![allow(dead_code)]

use bidguard_core::instance::{BidLevel, BidMatrix, ConferenceInstance};
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Similarities on a 0.001 grid so ties occur now and then.
pub fn random_matrix<R: Rng>(rng: &mut R, m: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_fn((m, n), |_| rng.random_range(0..=1000) as f64 / 1000.0)
}

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub papers: usize,
    pub reviewers: usize,
    pub load: usize,
    pub cap: usize,
}

impl Shape {
    pub fn random<R: Rng>(rng: &mut R, max_side: usize, max_load: usize, max_cap: usize) -> Self {
        Shape {
            papers: rng.random_range(1..=max_side),
            reviewers: rng.random_range(1..=max_side),
            load: rng.random_range(1..=max_load),
            cap: rng.random_range(1..=max_cap),
        }
    }
}

/// Random text and subject matrices, random conflicts with probability
/// `conflict_p`, and each paper authored by a random reviewer with
/// probability `author_p`. Regions are drawn from `regions` labels.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    shape: Shape,
    conflict_p: f64,
    author_p: f64,
    regions: usize,
) -> ConferenceInstance {
    let (m, n) = (shape.papers, shape.reviewers);
    let mut inst = ConferenceInstance::from_similarity(random_matrix(rng, m, n), shape.load, shape.cap);
    inst.subject_overlap = random_matrix(rng, m, n);
    for p in 0..m {
        for r in 0..n {
            if rng.random_bool(conflict_p) {
                inst.add_conflict(r, p);
            }
        }
        if rng.random_bool(author_p) {
            inst.add_author(rng.random_range(0..n), p);
        }
    }
    let label = |i: usize| format!("R{i}");
    let reviewer_region = (0..n).map(|_| label(rng.random_range(0..regions))).collect();
    let paper_region = (0..m).map(|_| label(rng.random_range(0..regions))).collect();
    inst.set_regions(reviewer_region, paper_region);
    inst
}

pub fn random_bids<R: Rng>(rng: &mut R, instance: &ConferenceInstance) -> BidMatrix {
    let (m, n) = instance.dim();
    let levels = Array2::from_shape_fn((m, n), |_| match rng.random_range(0..6) {
        0 | 1 => BidLevel::NoBid,
        i => BidLevel::LEVELS[i - 2],
    });
    BidMatrix { levels }.sanitized(instance)
}
