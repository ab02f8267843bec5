use serde::{Deserialize, Serialize};

use crate::defenses::{run_defense, DefensePolicy};
use crate::error::Result;
use crate::instance::{eligible_pairs, BidMatrix, ConferenceInstance};
use crate::similarity::{compute_similarity, SimilarityConfig};
use crate::solver::{objective_units, quantize_matrix, solve_max_similarity, QUANT_SCALE};

use super::{run_trials, Estimate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityRecord {
    /// Expected total similarity under the honest similarities.
    pub total_similarity: Estimate,
    /// Total similarity of the standard assignment on the same bids.
    pub optimum: f64,
    /// `total_similarity / optimum`, clamped to [0, 1]; 1 when the optimum is 0.
    pub optimality_ratio: f64,
}

/// Expected similarity of `policy` on honest bids, scored by the standard
/// similarity, and its ratio to the standard optimum.
///
/// Exact when the defense reports marginals or is deterministic, sampled
/// over `trials` seeds for random display.
pub fn quality_report(
    policy: &DefensePolicy,
    instance: &ConferenceInstance,
    honest: &BidMatrix,
    config: &SimilarityConfig,
    trials: usize,
    seed: u64,
) -> Result<QualityRecord> {
    let honest = honest.sanitized(instance);
    let s = compute_similarity(instance, &honest, config)?;
    let units = quantize_matrix(&s);
    let optimum = objective_units(&solve_max_similarity(&s, instance, &eligible_pairs(instance, None)?)?, &s);

    let total_units = if let DefensePolicy::RandomDisplay(_) = policy {
        let samples = run_trials(trials.max(1), seed, "quality", |trial_seed| {
            let outcome = run_defense(policy, instance, &honest, config, trial_seed)?;
            Ok(objective_units(&outcome.assignment, &s) as f64)
        })?;
        Estimate::from_samples(&samples, seed)
    } else {
        let outcome = run_defense(policy, instance, &honest, config, seed)?;
        let value = match &outcome.marginals {
            Some(f) => f.marginals.iter().zip(units.iter()).map(|(x, &u)| x * u as f64).sum(),
            None => objective_units(&outcome.assignment, &s) as f64,
        };
        Estimate::exact(value)
    };

    let ratio = if optimum == 0 {
        1.0
    } else {
        (total_units.value / optimum as f64).clamp(0.0, 1.0)
    };
    let scale = QUANT_SCALE as f64;
    Ok(QualityRecord {
        total_similarity: Estimate {
            value: total_units.value / scale,
            half_width: total_units.half_width / scale,
            ..total_units
        },
        optimum: optimum as f64 / scale,
        optimality_ratio: ratio,
    })
}
