use serde::{Deserialize, Serialize};

use crate::adversary::AttackScenario;
use crate::defenses::{run_defense, DefensePolicy};
use crate::error::{Error, Result};
use crate::instance::{BidMatrix, ConferenceInstance};
use crate::similarity::SimilarityConfig;

use super::{run_trials, Estimate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManipulationEstimate {
    pub attacker: usize,
    pub target: usize,
    pub probability: Estimate,
}

/// Probability that each attacker ends up assigned to their target.
///
/// Exact for deterministic defenses (the 0/1 outcome) and for
/// probability-limited assignment (the marginal). Random display and
/// reviewer clustering are sampled over `trials` fresh seeds.
pub fn manipulation_probability(
    policy: &DefensePolicy,
    instance: &ConferenceInstance,
    honest: &BidMatrix,
    scenario: &AttackScenario,
    config: &SimilarityConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<ManipulationEstimate>> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let oracle = scenario.oracle(instance, honest)?;
    let sampled = matches!(
        policy,
        DefensePolicy::RandomDisplay(_) | DefensePolicy::ReviewerClustering(_)
    );
    if !sampled {
        let outcome = run_defense(policy, instance, &oracle, config, seed)?;
        return Ok(scenario
            .pairs()
            .map(|(attacker, target)| ManipulationEstimate {
                attacker,
                target,
                probability: Estimate::exact(outcome.assignment_probability(target, attacker)),
            })
            .collect());
    }
    let hits = run_trials(trials, seed, "manipulation", |trial_seed| {
        let outcome = run_defense(policy, instance, &oracle, config, trial_seed)?;
        Ok(scenario
            .pairs()
            .map(|(a, t)| outcome.assignment.contains(t, a))
            .collect::<Vec<bool>>())
    })?;
    Ok(scenario
        .pairs()
        .enumerate()
        .map(|(i, (attacker, target))| {
            let samples: Vec<f64> = hits.iter().map(|h| f64::from(u8::from(h[i]))).collect();
            ManipulationEstimate {
                attacker,
                target,
                probability: Estimate::from_samples(&samples, seed),
            }
        })
        .collect())
}
