//! Instances shared by the benchmarks in `benches/`.

use bidguard_core::instance::{BidLevel, BidMatrix, ConferenceInstance};
use bidguard_core::rng::rng_from_seed;
use ndarray::Array2;
use rand::Rng;

/// Random similarities, a 10% sprinkle of bids, one author per paper for
/// the first half of the papers and three regions.
pub fn instance(m: usize, n: usize, load: usize, cap: usize, seed: u64) -> (ConferenceInstance, BidMatrix) {
    let mut rng = rng_from_seed(seed);
    let text = Array2::from_shape_fn((m, n), |_| rng.random::<f64>());
    let mut inst = ConferenceInstance::from_similarity(text, load, cap);
    inst.subject_overlap = Array2::from_shape_fn((m, n), |_| rng.random::<f64>());
    for p in 0..m / 2 {
        inst.add_author(rng.random_range(0..n), p);
    }
    let regions = |k: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<String> {
        (0..k).map(|_| format!("R{}", rng.random_range(0..3))).collect()
    };
    let reviewer_region = regions(n, &mut rng);
    let paper_region = regions(m, &mut rng);
    inst.set_regions(reviewer_region, paper_region);
    let levels = Array2::from_shape_fn((m, n), |_| {
        if rng.random_bool(0.1) {
            BidLevel::LEVELS[rng.random_range(0..4)]
        } else {
            BidLevel::NoBid
        }
    });
    let bids = BidMatrix { levels }.sanitized(&inst);
    (inst, bids)
}
