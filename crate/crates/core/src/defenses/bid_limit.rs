use crate::error::Result;
use crate::instance::{eligible_pairs, BidLevel, BidMatrix, ConferenceInstance};
use crate::similarity::{compute_similarity_weighted, SimilarityConfig};
use crate::solver::solve_max_similarity;

use super::{AssignmentOutcome, BidLimitParams, ViolationPolicy};

/// Reviewers with too few positive bids (Willing or Eager) or too many
/// negative ones (Not willing).
pub fn bid_limit_violators(bids: &BidMatrix, params: &BidLimitParams) -> Vec<usize> {
    let (_, n) = bids.dim();
    (0..n)
        .filter(|&r| {
            let column = bids.levels.column(r);
            let positive = column.iter().filter(|l| l.is_positive()).count();
            let negative = column.iter().filter(|l| l.is_negative()).count();
            positive < params.min_positive_bids
                || params.max_negative_bids.is_some_and(|max| negative > max)
        })
        .collect()
}

/// Standard assignment after discounting the bids of reviewers who break
/// the bid-count rules.
pub fn run_bid_limit(
    instance: &ConferenceInstance,
    bids: &BidMatrix,
    params: &BidLimitParams,
    config: &SimilarityConfig,
) -> Result<AssignmentOutcome> {
    bids.check_shape(instance)?;
    let flagged = bid_limit_violators(bids, params);
    let mut effective = bids.clone();
    let mut weights = vec![config.bid_weight; instance.n_reviewers()];
    for &r in &flagged {
        match params.violation_policy {
            ViolationPolicy::IgnoreBids => effective.levels.column_mut(r).fill(BidLevel::NoBid),
            ViolationPolicy::Downweight(alpha) => weights[r] *= alpha,
        }
    }
    let s = compute_similarity_weighted(instance, &effective, config, &weights)?;
    let assignment = solve_max_similarity(&s, instance, &eligible_pairs(instance, None)?)?;
    let mut outcome = AssignmentOutcome::deterministic(assignment, s, 1);
    outcome.diagnostics.flagged_reviewers = flagged;
    Ok(outcome)
}
