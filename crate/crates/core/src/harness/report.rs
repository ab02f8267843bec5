use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adversary::{AttackScenario, AttackStrategy};
use crate::defenses::{run_defense, DefensePolicy};
use crate::error::{Error, Result};
use crate::instance::{BidMatrix, ConferenceInstance};
use crate::rng::derive_seed;
use crate::similarity::SimilarityConfig;

use super::{
    incentive_experiment, manipulation_probability, quality_report, ManipulationEstimate, QualityRecord,
    SymmetricDifferenceResult,
};

const BUILTIN_ANNOTATIONS: &str = include_str!("../../data/desiderata.toml");

/// Judgments for the desiderata that are not measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenseAnnotation {
    pub strengths: Vec<String>,
    pub weaknesses: Vec<String>,
    pub expressiveness: String,
    pub attack_cost: String,
    pub adjustability: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotations {
    /// Keyed by defense kind.
    pub defenses: BTreeMap<String, DefenseAnnotation>,
    /// Information each attack strategy needs, keyed by strategy kind.
    pub attacks: BTreeMap<String, String>,
}

impl Annotations {
    /// The annotation table shipped with the crate.
    pub fn builtin() -> Self {
        toml::from_str(BUILTIN_ANNOTATIONS).expect("bundled annotation file is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::param("annotations", e.to_string()))
    }
}

fn strategy_kind(strategy: &AttackStrategy) -> &'static str {
    match strategy {
        AttackStrategy::Naive => "naive",
        AttackStrategy::BidLimitEvasion { .. } => "bid_limit_evasion",
        AttackStrategy::DisplayConditional => "display_conditional",
        AttackStrategy::CollusionRing { .. } => "collusion_ring",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub label: String,
    pub scenario: AttackScenario,
    pub estimates: Vec<ManipulationEstimate>,
}

impl AttackResult {
    /// Largest success probability over the scenario's attackers.
    pub fn worst_case(&self) -> f64 {
        self.estimates
            .iter()
            .map(|e| e.probability.value)
            .fold(0.0, f64::max)
    }
}

/// Everything measured for one defense. Contains no timing information so
/// that it is reproducible bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub defense: DefensePolicy,
    pub label: String,
    pub seed: u64,
    pub quality: QualityRecord,
    pub manipulation: Vec<AttackResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incentive: Option<SymmetricDifferenceResult>,
    /// Solver calls plus search nodes of one run on honest bids.
    pub work: usize,
}

/// Runs quality, manipulation and optionally incentive experiments for one
/// defense. Each experiment gets its own stream derived from `seed`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_defense(
    policy: &DefensePolicy,
    instance: &ConferenceInstance,
    honest: &BidMatrix,
    scenarios: &[(String, AttackScenario)],
    config: &SimilarityConfig,
    trials: usize,
    seed: u64,
    with_incentive: bool,
) -> Result<EvaluationReport> {
    let label = policy.label();
    let stream = |what: &str| derive_seed(seed, &format!("{label}/{what}"));
    let quality = quality_report(policy, instance, honest, config, trials, stream("quality"))?;
    let manipulation = scenarios
        .iter()
        .map(|(name, scenario)| {
            let estimates = manipulation_probability(
                policy,
                instance,
                honest,
                scenario,
                config,
                trials,
                stream(&format!("attack/{name}")),
            )?;
            Ok(AttackResult {
                label: name.clone(),
                scenario: scenario.clone(),
                estimates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let incentive = if with_incentive {
        Some(incentive_experiment(instance, honest, policy, config, stream("incentive"))?)
    } else {
        None
    };
    let work = run_defense(policy, instance, &honest.sanitized(instance), config, stream("work"))?
        .diagnostics
        .work;
    Ok(EvaluationReport {
        defense: policy.clone(),
        label,
        seed,
        quality,
        manipulation,
        incentive,
        work,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorecardRow {
    pub defense: String,
    /// (A) expected similarity over the standard optimum.
    pub quality_ratio: f64,
    /// (B) annotated.
    pub expressiveness: String,
    /// (C) median symmetric difference between honest and no-bid arms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incentive_median: Option<f64>,
    /// (D) worst-case success probability per attack.
    pub manipulation: BTreeMap<String, f64>,
    /// (E) annotated, plus what each evaluated attack needed to know.
    pub attack_cost: String,
    pub attack_information: BTreeMap<String, String>,
    /// (F) annotated.
    pub adjustability: String,
    /// (G) deterministic work measure.
    pub work: usize,
    pub strengths: Vec<String>,
    pub weaknesses: Vec<String>,
}

/// One row per report, with measured columns filled from the report and
/// qualitative ones from `annotations`.
pub fn build_scorecard(reports: &[EvaluationReport], annotations: &Annotations) -> Vec<ScorecardRow> {
    reports
        .iter()
        .map(|r| {
            let note = annotations.defenses.get(r.defense.kind());
            let text = |f: fn(&DefenseAnnotation) -> &String| {
                note.map_or_else(|| "not annotated".to_string(), |n| f(n).clone())
            };
            ScorecardRow {
                defense: r.label.clone(),
                quality_ratio: r.quality.optimality_ratio,
                expressiveness: text(|n| &n.expressiveness),
                incentive_median: r.incentive.as_ref().map(|i| i.median),
                manipulation: r
                    .manipulation
                    .iter()
                    .map(|a| (a.label.clone(), a.worst_case()))
                    .collect(),
                attack_cost: text(|n| &n.attack_cost),
                attack_information: r
                    .manipulation
                    .iter()
                    .map(|a| {
                        let kind = strategy_kind(&a.scenario.strategy);
                        let info = annotations.attacks.get(kind).cloned().unwrap_or_default();
                        (a.label.clone(), info)
                    })
                    .collect(),
                adjustability: text(|n| &n.adjustability),
                work: r.work,
                strengths: note.map(|n| n.strengths.clone()).unwrap_or_default(),
                weaknesses: note.map(|n| n.weaknesses.clone()).unwrap_or_default(),
            }
        })
        .collect()
}
