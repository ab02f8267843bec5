//! Experiments: how often attacks succeed, what a defense costs in
//! similarity, whether reviewers still have a reason to bid, and how random
//! display compares with probability-limited assignment.
//!
//! Randomized quantities are either computed exactly from marginals or
//! estimated by Monte Carlo with a 95% normal-approximation half-width.
//! Trial `i` of an experiment always uses a seed derived from the root seed
//! and a key naming the trial, so results do not depend on thread count.

mod comparison;
mod incentive;
mod manipulation;
mod quality;
mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::derive_seed;

pub use comparison::{
    q_sweep, rd_vs_plra_comparison, ComparisonMode, ComparisonResult, SweepPoint, ENUMERATION_BUDGET,
};
pub use incentive::{incentive_experiment, symmetric_difference, SymmetricDifferenceResult};
pub use manipulation::{manipulation_probability, ManipulationEstimate};
pub use quality::{quality_report, QualityRecord};
pub use report::{
    build_scorecard, evaluate_defense, Annotations, AttackResult, DefenseAnnotation, EvaluationReport,
    ScorecardRow,
};

/// 95% two-sided normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub method: EstimateMethod,
    /// 0 for exact values.
    pub trials: usize,
    /// Half-width of the 95% interval; 0 for exact values.
    pub half_width: f64,
    /// Root seed of the trials, when sampled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            method: EstimateMethod::Exact,
            trials: 0,
            half_width: 0.0,
            seed: None,
        }
    }

    /// Mean of `samples` with a normal-approximation interval.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            value: mean,
            method: EstimateMethod::MonteCarlo,
            trials: samples.len(),
            half_width: Z95 * (var / n).sqrt(),
            seed: Some(seed),
        }
    }

    /// Standard error implied by the half-width.
    pub fn std_error(&self) -> f64 {
        self.half_width / Z95
    }
}

/// Runs `f` once per trial with that trial's derived seed, in parallel,
/// returning results in trial order.
pub(crate) fn run_trials<T, F>(trials: usize, seed: u64, key: &str, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| f(derive_seed(seed, &format!("{key}/{i}"))))
        .collect()
}
