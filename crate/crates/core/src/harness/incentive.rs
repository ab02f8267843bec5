use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defenses::{run_defense, DefensePolicy};
use crate::error::Result;
use crate::instance::{BidMatrix, ConferenceInstance};
use crate::similarity::SimilarityConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricDifferenceResult {
    /// Per reviewer, the size of the symmetric difference between their
    /// papers with honest bids and with no bids.
    pub differences: Vec<usize>,
    pub mean: f64,
    pub median: f64,
    /// `histogram[d]` reviewers had difference `d`, for `d` up to twice the
    /// reviewer cap.
    pub histogram: Vec<usize>,
}

impl SymmetricDifferenceResult {
    pub fn from_differences(differences: Vec<usize>, reviewer_cap: usize) -> Self {
        let mut histogram = vec![0; 2 * reviewer_cap + 1];
        for &d in &differences {
            if d >= histogram.len() {
                histogram.resize(d + 1, 0);
            }
            histogram[d] += 1;
        }
        let n = differences.len();
        let mean = if n == 0 {
            0.0
        } else {
            differences.iter().sum::<usize>() as f64 / n as f64
        };
        let mut sorted = differences.clone();
        sorted.sort_unstable();
        let median = match n {
            0 => 0.0,
            _ if n % 2 == 1 => sorted[n / 2] as f64,
            _ => (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0,
        };
        SymmetricDifferenceResult {
            differences,
            mean,
            median,
            histogram,
        }
    }
}

pub fn symmetric_difference(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> usize {
    a.symmetric_difference(b).count()
}

/// For every reviewer, compares their assigned papers when everyone bids
/// honestly with those when only they withhold their bids. Both arms share
/// `seed`, so differences come from bids rather than randomness.
pub fn incentive_experiment(
    instance: &ConferenceInstance,
    honest: &BidMatrix,
    policy: &DefensePolicy,
    config: &SimilarityConfig,
    seed: u64,
) -> Result<SymmetricDifferenceResult> {
    let honest = honest.sanitized(instance);
    let baseline = run_defense(policy, instance, &honest, config, seed)?;
    let differences = (0..instance.n_reviewers())
        .into_par_iter()
        .map(|r| {
            let silent = honest.without_reviewer(r);
            let outcome = run_defense(policy, instance, &silent, config, seed)?;
            Ok(symmetric_difference(
                &baseline.assignment.papers_of(r),
                &outcome.assignment.papers_of(r),
            ))
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(SymmetricDifferenceResult::from_differences(differences, instance.reviewer_cap))
}
