use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::{eligible_pairs, BidMatrix, ConferenceInstance, DisplayMatrix};
use crate::rng::rng_from_seed;
use crate::similarity::{compute_similarity, SimilarityConfig};
use crate::solver::solve_max_similarity;

use super::{AssignmentOutcome, BidOracle, RandomDisplayParams};

/// Shows each reviewer `round(q·m)` papers drawn uniformly without
/// replacement, independently across reviewers.
pub fn sample_display<R: Rng + ?Sized>(
    instance: &ConferenceInstance,
    q: f64,
    rng: &mut R,
) -> Result<DisplayMatrix> {
    let (m, n) = instance.dim();
    let k = DisplayMatrix::papers_per_reviewer(q, m);
    if k == 0 || k > m {
        return Err(Error::param(
            "display_fraction",
            format!("{q} shows {k} of {m} papers per reviewer"),
        ));
    }
    let mut shown = Array2::from_elem((m, n), false);
    for r in 0..n {
        for p in sample(rng, m, k) {
            shown[[p, r]] = true;
        }
    }
    Ok(DisplayMatrix { shown })
}

/// Collects bids on the displayed papers and solves. Under the hard
/// constraint only displayed pairs may be assigned.
pub fn assign_with_display(
    instance: &ConferenceInstance,
    bids: &dyn BidOracle,
    display: &DisplayMatrix,
    hard_constraint: bool,
    config: &SimilarityConfig,
) -> Result<AssignmentOutcome> {
    let (m, n) = instance.dim();
    let mut submitted = BidMatrix::empty(m, n);
    for r in 0..n {
        let papers = display.shown_to(r);
        for (p, level) in papers.iter().zip(bids.bids_on(r, &papers)) {
            submitted.set(*p, r, level);
        }
    }
    let submitted = submitted.sanitized(instance);
    let s = compute_similarity(instance, &submitted, config)?;
    let eligibility = eligible_pairs(instance, hard_constraint.then_some(display))?;
    let assignment = solve_max_similarity(&s, instance, &eligibility)?;
    let mut outcome = AssignmentOutcome::deterministic(assignment, s, 1);
    outcome.display = Some(display.clone());
    Ok(outcome)
}

pub fn run_random_display(
    instance: &ConferenceInstance,
    bids: &dyn BidOracle,
    params: &RandomDisplayParams,
    config: &SimilarityConfig,
    seed: u64,
) -> Result<AssignmentOutcome> {
    let mut rng = rng_from_seed(seed);
    let display = sample_display(instance, params.display_fraction, &mut rng)?;
    assign_with_display(instance, bids, &display, params.hard_constraint, config)
}
