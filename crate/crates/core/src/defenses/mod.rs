//! End-to-end assignment algorithms, each hardened against a different way
//! of manipulating bids.
//!
//! Every defense takes an instance, the submitted bids, its parameters and a
//! seed, and produces an [`AssignmentOutcome`]. Deterministic defenses ignore
//! the seed.

mod bid_limit;
mod bid_model;
mod clustering;
mod random_display;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{
    eligible_pairs, BidLevel, BidMatrix, ConferenceInstance, DeterministicAssignment,
    DisplayMatrix, FractionalAssignment,
};
use crate::similarity::{compute_similarity, SimilarityConfig};
use crate::solver::{
    sample_assignment, solve_constrained_exact, solve_fractional_capped, solve_max_similarity,
    AssignmentConstraints, GeoVariant,
};

pub use bid_limit::{bid_limit_violators, run_bid_limit};
pub use bid_model::{fit_bid_model, fit_ridge, run_bid_modeling, BidModel};
pub use clustering::{cluster_reviewers, run_reviewer_clustering};
pub use random_display::{assign_with_display, run_random_display, sample_display};

/// What happens to a reviewer whose bids break the bid-limit rules.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationPolicy {
    #[default]
    IgnoreBids,
    /// Scale the reviewer's bid weight by this factor.
    Downweight(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidLimitParams {
    pub min_positive_bids: usize,
    /// `None` means unlimited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_negative_bids: Option<usize>,
    #[serde(default)]
    pub violation_policy: ViolationPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDisplayParams {
    pub display_fraction: f64,
    #[serde(default)]
    pub hard_constraint: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclePreventionParams {
    #[serde(default = "default_cycle_length")]
    pub cycle_length: usize,
}

fn default_cycle_length() -> usize {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeoChoice {
    /// Reviewers of a paper come from pairwise distinct regions.
    A,
    /// At least one reviewer comes from outside the authors' region.
    B,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoDiversityParams {
    pub variant: GeoChoice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidModelingParams {
    #[serde(default)]
    pub ridge_lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringParams {
    pub group_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlraParams {
    pub q: f64,
}

/// A defense and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefensePolicy {
    Standard,
    BidLimit(BidLimitParams),
    RandomDisplay(RandomDisplayParams),
    CyclePrevention(CyclePreventionParams),
    GeoDiversity(GeoDiversityParams),
    BidModeling(BidModelingParams),
    ReviewerClustering(ClusteringParams),
    Plra(PlraParams),
}

impl DefensePolicy {
    pub fn kind(&self) -> &'static str {
        match self {
            DefensePolicy::Standard => "standard",
            DefensePolicy::BidLimit(_) => "bid_limit",
            DefensePolicy::RandomDisplay(_) => "random_display",
            DefensePolicy::CyclePrevention(_) => "cycle_prevention",
            DefensePolicy::GeoDiversity(_) => "geo_diversity",
            DefensePolicy::BidModeling(_) => "bid_modeling",
            DefensePolicy::ReviewerClustering(_) => "reviewer_clustering",
            DefensePolicy::Plra(_) => "plra",
        }
    }

    /// Kind plus the parameters that distinguish instances of it.
    pub fn label(&self) -> String {
        match self {
            DefensePolicy::Standard => "standard".into(),
            DefensePolicy::BidLimit(p) => format!("bid_limit(k={})", p.min_positive_bids),
            DefensePolicy::RandomDisplay(p) => format!(
                "random_display(q={},{})",
                p.display_fraction,
                if p.hard_constraint { "hard" } else { "soft" }
            ),
            DefensePolicy::CyclePrevention(p) => format!("cycle_prevention(len={})", p.cycle_length),
            DefensePolicy::GeoDiversity(p) => format!("geo_diversity({:?})", p.variant),
            DefensePolicy::BidModeling(p) => format!("bid_modeling(lambda={})", p.ridge_lambda),
            DefensePolicy::ReviewerClustering(p) => format!("reviewer_clustering(g={})", p.group_size),
            DefensePolicy::Plra(p) => format!("plra(q={})", p.q),
        }
    }

    /// True if the outcome depends on the seed.
    pub fn is_randomized(&self) -> bool {
        matches!(
            self,
            DefensePolicy::RandomDisplay(_)
                | DefensePolicy::ReviewerClustering(_)
                | DefensePolicy::Plra(_)
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DefensePolicy::Standard | DefensePolicy::GeoDiversity(_) => Ok(()),
            DefensePolicy::BidLimit(p) => match p.violation_policy {
                ViolationPolicy::Downweight(a) if !(0.0..=1.0).contains(&a) => {
                    Err(Error::param("downweight", format!("{a} is outside [0, 1]")))
                }
                _ => Ok(()),
            },
            DefensePolicy::RandomDisplay(p) => {
                if p.display_fraction > 0.0 && p.display_fraction <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::param(
                        "display_fraction",
                        format!("{} is outside (0, 1]", p.display_fraction),
                    ))
                }
            }
            DefensePolicy::CyclePrevention(p) => {
                if p.cycle_length == 2 || p.cycle_length == 3 {
                    Ok(())
                } else {
                    Err(Error::param("cycle_length", format!("{} is not 2 or 3", p.cycle_length)))
                }
            }
            DefensePolicy::BidModeling(p) => {
                if p.ridge_lambda >= 0.0 && p.ridge_lambda.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("ridge_lambda", format!("{} is negative", p.ridge_lambda)))
                }
            }
            DefensePolicy::ReviewerClustering(p) => {
                if p.group_size >= 1 {
                    Ok(())
                } else {
                    Err(Error::param("group_size", "must be at least 1"))
                }
            }
            DefensePolicy::Plra(p) => {
                if (0.0..=1.0).contains(&p.q) {
                    Ok(())
                } else {
                    Err(Error::param("q", format!("{} is outside [0, 1]", p.q)))
                }
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// Total of the realized assignment under the defense's own scores.
    pub objective: f64,
    /// Expected total under the reported marginals, when present.
    pub expected_objective: Option<f64>,
    pub shortfall: usize,
    /// False only when a branch-and-bound search ran out of budget.
    pub proven_optimal: bool,
    /// Deterministic effort measure: solver calls plus search nodes.
    pub work: usize,
    pub model: Option<BidModel>,
    /// Reviewers whose bids were ignored or down-weighted.
    pub flagged_reviewers: Vec<usize>,
    pub groups: Option<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentOutcome {
    pub assignment: DeterministicAssignment,
    pub marginals: Option<FractionalAssignment>,
    pub display: Option<DisplayMatrix>,
    /// Scores the defense optimized.
    pub scores: Array2<f64>,
    pub diagnostics: Diagnostics,
}

impl AssignmentOutcome {
    pub(crate) fn deterministic(assignment: DeterministicAssignment, scores: Array2<f64>, work: usize) -> Self {
        let diagnostics = Diagnostics {
            objective: assignment.total(&scores),
            shortfall: assignment.total_shortfall(),
            proven_optimal: true,
            work,
            ..Default::default()
        };
        AssignmentOutcome {
            assignment,
            marginals: None,
            display: None,
            scores,
            diagnostics,
        }
    }

    /// Probability that `reviewer` is assigned `paper`: the reported marginal
    /// when there is one, otherwise the 0/1 indicator.
    pub fn assignment_probability(&self, paper: usize, reviewer: usize) -> f64 {
        match &self.marginals {
            Some(f) => f.get(paper, reviewer),
            None => f64::from(u8::from(self.assignment.contains(paper, reviewer))),
        }
    }
}

/// Source of bids for a reviewer given the papers shown to them. Lets bids
/// depend on the display, which only matters under random display.
pub trait BidOracle: Sync {
    fn dim(&self) -> (usize, usize);

    /// Bids of `reviewer` on each of `displayed`, in the same order.
    fn bids_on(&self, reviewer: usize, displayed: &[usize]) -> Vec<BidLevel>;

    /// Bids when every paper is shown.
    fn full_bids(&self) -> BidMatrix {
        let (m, n) = self.dim();
        let all: Vec<usize> = (0..m).collect();
        let mut bids = BidMatrix::empty(m, n);
        for r in 0..n {
            for (p, level) in self.bids_on(r, &all).into_iter().enumerate() {
                bids.set(p, r, level);
            }
        }
        bids
    }
}

/// Honest reviewers bid their true preferences on whatever is shown.
impl BidOracle for BidMatrix {
    fn dim(&self) -> (usize, usize) {
        BidMatrix::dim(self)
    }

    fn bids_on(&self, reviewer: usize, displayed: &[usize]) -> Vec<BidLevel> {
        displayed.iter().map(|&p| self.get(p, reviewer)).collect()
    }

    fn full_bids(&self) -> BidMatrix {
        self.clone()
    }
}

/// Runs any defense. Bids are requested per display under random display
/// and with everything shown otherwise; bids on conflicted pairs are dropped.
pub fn run_defense(
    policy: &DefensePolicy,
    instance: &ConferenceInstance,
    bids: &dyn BidOracle,
    config: &SimilarityConfig,
    seed: u64,
) -> Result<AssignmentOutcome> {
    policy.validate()?;
    if bids.dim() != instance.dim() {
        return Err(Error::ShapeMismatch {
            what: "bid matrix",
            expected: instance.dim(),
            actual: bids.dim(),
        });
    }
    if let DefensePolicy::RandomDisplay(p) = policy {
        return run_random_display(instance, bids, p, config, seed);
    }
    let full = bids.full_bids().sanitized(instance);
    match policy {
        DefensePolicy::Standard => run_standard(instance, &full, config),
        DefensePolicy::BidLimit(p) => run_bid_limit(instance, &full, p, config),
        DefensePolicy::CyclePrevention(p) => run_cycle_prevention(instance, &full, p, config),
        DefensePolicy::GeoDiversity(p) => run_geo_diversity(instance, &full, p, config),
        DefensePolicy::BidModeling(p) => run_bid_modeling(instance, &full, p, config),
        DefensePolicy::ReviewerClustering(p) => run_reviewer_clustering(instance, &full, p, config, seed),
        DefensePolicy::Plra(p) => run_plra(instance, &full, p, config, seed),
        DefensePolicy::RandomDisplay(_) => unreachable!("handled above"),
    }
}

/// Maximum total similarity with no defense.
pub fn run_standard(
    instance: &ConferenceInstance,
    bids: &BidMatrix,
    config: &SimilarityConfig,
) -> Result<AssignmentOutcome> {
    let s = compute_similarity(instance, bids, config)?;
    let assignment = solve_max_similarity(&s, instance, &eligible_pairs(instance, None)?)?;
    Ok(AssignmentOutcome::deterministic(assignment, s, 1))
}

/// Forbids reviewers from reviewing each other's papers in cycles of up to
/// `cycle_length` reviewers.
pub fn run_cycle_prevention(
    instance: &ConferenceInstance,
    bids: &BidMatrix,
    params: &CyclePreventionParams,
    config: &SimilarityConfig,
) -> Result<AssignmentOutcome> {
    let constraints = AssignmentConstraints::cycles(params.cycle_length);
    run_constrained(instance, bids, &constraints, config)
}

pub fn run_geo_diversity(
    instance: &ConferenceInstance,
    bids: &BidMatrix,
    params: &GeoDiversityParams,
    config: &SimilarityConfig,
) -> Result<AssignmentOutcome> {
    let variant = match params.variant {
        GeoChoice::A => GeoVariant::AllDistinctRegions,
        GeoChoice::B => GeoVariant::OneDifferentFromAuthors,
    };
    run_constrained(instance, bids, &AssignmentConstraints::geo(variant), config)
}

fn run_constrained(
    instance: &ConferenceInstance,
    bids: &BidMatrix,
    constraints: &AssignmentConstraints,
    config: &SimilarityConfig,
) -> Result<AssignmentOutcome> {
    let s = compute_similarity(instance, bids, config)?;
    let sol = solve_constrained_exact(&s, instance, &eligible_pairs(instance, None)?, constraints)?;
    let mut outcome = AssignmentOutcome::deterministic(sol.assignment, s, sol.nodes);
    outcome.diagnostics.proven_optimal = sol.proven_optimal;
    Ok(outcome)
}

/// Best randomized assignment with every assignment probability at most `q`,
/// realized by sampling.
pub fn run_plra(
    instance: &ConferenceInstance,
    bids: &BidMatrix,
    params: &PlraParams,
    config: &SimilarityConfig,
    seed: u64,
) -> Result<AssignmentOutcome> {
    let s = compute_similarity(instance, bids, config)?;
    let sol = solve_fractional_capped(&s, instance, &eligible_pairs(instance, None)?, params.q)?;
    let assignment = sample_assignment(&sol.assignment, instance, seed)?;
    let mut outcome = AssignmentOutcome::deterministic(assignment, s, 2);
    outcome.diagnostics.expected_objective = Some(sol.expected_similarity());
    outcome.marginals = Some(sol.assignment);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Pair;
    use ndarray::array;

    fn t1() -> ConferenceInstance {
        ConferenceInstance::from_similarity(array![[0.9, 0.1], [0.2, 0.8]], 1, 1)
    }

    #[test]
    fn policy_toml_round_trip() {
        let policies = vec![
            DefensePolicy::Standard,
            DefensePolicy::BidLimit(BidLimitParams {
                min_positive_bids: 3,
                max_negative_bids: None,
                violation_policy: ViolationPolicy::Downweight(0.5),
            }),
            DefensePolicy::RandomDisplay(RandomDisplayParams {
                display_fraction: 0.5,
                hard_constraint: true,
            }),
            DefensePolicy::CyclePrevention(CyclePreventionParams { cycle_length: 3 }),
            DefensePolicy::GeoDiversity(GeoDiversityParams { variant: GeoChoice::B }),
            DefensePolicy::BidModeling(BidModelingParams { ridge_lambda: 0.1 }),
            DefensePolicy::ReviewerClustering(ClusteringParams { group_size: 4 }),
            DefensePolicy::Plra(PlraParams { q: 0.3 }),
        ];
        #[derive(Serialize, Deserialize)]
        struct Wrapper {
            defenses: Vec<DefensePolicy>,
        }
        let text = toml::to_string(&Wrapper { defenses: policies.clone() }).unwrap();
        let back: Wrapper = toml::from_str(&text).unwrap();
        assert_eq!(back.defenses, policies);
    }

    #[test]
    fn unknown_kind_and_field_rejected() {
        assert!(toml::from_str::<DefensePolicy>("kind = \"magic\"").is_err());
        assert!(toml::from_str::<DefensePolicy>("kind = \"plra\"\nq = 0.5\nextra = 1").is_err());
        let p: DefensePolicy = toml::from_str("kind = \"cycle_prevention\"").unwrap();
        assert_eq!(p, DefensePolicy::CyclePrevention(CyclePreventionParams { cycle_length: 2 }));
    }

    #[test]
    fn parameter_validation() {
        assert!(DefensePolicy::Plra(PlraParams { q: 1.5 }).validate().is_err());
        assert!(DefensePolicy::CyclePrevention(CyclePreventionParams { cycle_length: 4 })
            .validate()
            .is_err());
        assert!(DefensePolicy::RandomDisplay(RandomDisplayParams {
            display_fraction: 0.0,
            hard_constraint: false
        })
        .validate()
        .is_err());
        assert!(DefensePolicy::BidModeling(BidModelingParams { ridge_lambda: -1.0 })
            .validate()
            .is_err());
    }

    #[test]
    fn standard_on_t1() {
        let inst = t1();
        let config = SimilarityConfig::default().with_bid_weight(0.0);
        let out = run_standard(&inst, &BidMatrix::empty(2, 2), &config).unwrap();
        assert_eq!(out.assignment.pairs, [Pair::new(0, 0), Pair::new(1, 1)].into());
        assert!((out.diagnostics.objective - 1.7).abs() < 1e-12);
    }

    #[test]
    fn standard_ignores_bids_at_zero_weight() {
        let inst = t1();
        let config = SimilarityConfig::default().with_bid_weight(0.0);
        let a = run_standard(&inst, &BidMatrix::uniform(2, 2, BidLevel::Eager), &config).unwrap();
        let mut weird = BidMatrix::empty(2, 2);
        weird.set(0, 1, BidLevel::Eager);
        weird.set(0, 0, BidLevel::NotWilling);
        let b = run_standard(&inst, &weird, &config).unwrap();
        assert_eq!(a.assignment, b.assignment);
    }

    #[test]
    fn plra_on_t1() {
        let inst = t1();
        let config = SimilarityConfig::default().with_bid_weight(0.0);
        let out = run_plra(&inst, &BidMatrix::empty(2, 2), &PlraParams { q: 0.5 }, &config, 3).unwrap();
        assert!((out.diagnostics.expected_objective.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(out.assignment_probability(0, 0), 0.5);
        assert_eq!(out.assignment.len(), 2);
    }

    #[test]
    fn plra_full_cap_matches_standard() {
        let inst = t1();
        let config = SimilarityConfig::default().with_bid_weight(0.0);
        let bids = BidMatrix::empty(2, 2);
        let p = run_plra(&inst, &bids, &PlraParams { q: 1.0 }, &config, 11).unwrap();
        let s = run_standard(&inst, &bids, &config).unwrap();
        assert_eq!(p.assignment, s.assignment);
    }

    #[test]
    fn dispatcher_drops_conflicted_bids() {
        let mut inst = t1();
        inst.add_conflict(0, 0);
        let config = SimilarityConfig::default();
        let bids = BidMatrix::uniform(2, 2, BidLevel::Eager);
        let out = run_defense(&DefensePolicy::Standard, &inst, &bids, &config, 0).unwrap();
        assert!(!out.assignment.contains(0, 0));
        assert_eq!(out.scores[[0, 0]], 0.0);
    }
}
