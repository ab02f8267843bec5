use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::defenses::sample_display;
use crate::error::{Error, Result};
use crate::instance::{check_dim, eligible_pairs, ConferenceInstance, DisplayMatrix};
use crate::rng::rng_from_seed;
use crate::solver::{objective_units, solve_fractional_capped, solve_max_similarity, QUANT_SCALE};

use super::{run_trials, Estimate, EstimateMethod};

/// Most display realizations enumerated in exhaustive mode.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ComparisonMode {
    Exhaustive,
    MonteCarlo { trials: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    /// Expected similarity of hard-constraint random display.
    pub rd: Estimate,
    /// Expected similarity of probability-limited assignment.
    pub plra_expected: f64,
    pub dominance_holds: bool,
    /// Average of the realized random-display assignments.
    pub realized_average: Array2<f64>,
    pub max_realized_marginal: f64,
    /// Every averaged entry is within the cap (allowing sampling noise in
    /// Monte Carlo mode).
    pub cap_respected: bool,
    /// Realizations enumerated or sampled.
    pub realizations: u64,
}

fn k_subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn extend(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for p in start..m {
            if m - p < k - cur.len() {
                break;
            }
            cur.push(p);
            extend(p + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    extend(0, m, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Quantized total and assignment indicator for one display realization.
fn realize(
    s: &Array2<f64>,
    instance: &ConferenceInstance,
    display: &DisplayMatrix,
) -> Result<(i64, Array2<u64>)> {
    let a = solve_max_similarity(s, instance, &eligible_pairs(instance, Some(display))?)?;
    let mut counts = Array2::zeros(instance.dim());
    for p in &a.pairs {
        counts[[p.paper, p.reviewer]] = 1;
    }
    Ok((objective_units(&a, s), counts))
}

/// Compares hard-constraint random display with display fraction `q`
/// against probability-limited assignment with cap `q`, both scored by the
/// same fixed similarities `s` (bids do not react to the algorithm).
pub fn rd_vs_plra_comparison(
    instance: &ConferenceInstance,
    s: &Array2<f64>,
    q: f64,
    mode: ComparisonMode,
    seed: u64,
) -> Result<ComparisonResult> {
    check_dim("similarity matrix", instance.dim(), s.dim())?;
    let (m, n) = instance.dim();
    let plra = solve_fractional_capped(s, instance, &eligible_pairs(instance, None)?, q)?;
    let plra_expected = plra.expected_similarity();
    let scale = QUANT_SCALE as f64;

    let (rd, realized_average, realizations, cap_slack) = match mode {
        ComparisonMode::Exhaustive => {
            let k = DisplayMatrix::papers_per_reviewer(q, m);
            if k == 0 {
                return Err(Error::param("q", format!("{q} displays no papers")));
            }
            let subsets = k_subsets(m, k);
            let per_reviewer = subsets.len() as u128;
            let total = (0..n).try_fold(1u128, |acc, _| {
                acc.checked_mul(per_reviewer).filter(|&t| t <= ENUMERATION_BUDGET)
            });
            let Some(total) = total else {
                return Err(Error::EnumerationBudget {
                    realizations: per_reviewer.saturating_pow(n as u32),
                    budget: ENUMERATION_BUDGET,
                });
            };
            let (units, counts) = (0..total as u64)
                .into_par_iter()
                .map(|mut index| {
                    let mut shown = Array2::from_elem((m, n), false);
                    for r in 0..n {
                        let choice = (index % per_reviewer as u64) as usize;
                        index /= per_reviewer as u64;
                        for &p in &subsets[choice] {
                            shown[[p, r]] = true;
                        }
                    }
                    realize(s, instance, &DisplayMatrix { shown })
                })
                .try_reduce(
                    || (0i64, Array2::zeros((m, n))),
                    |(u1, c1), (u2, c2)| Ok((u1 + u2, c1 + c2)),
                )?;
            let t = total as f64;
            let rd = Estimate::exact(units as f64 / t / scale);
            (rd, counts.mapv(|c| c as f64 / t), total as u64, 1e-9)
        }
        ComparisonMode::MonteCarlo { trials } => {
            if trials == 0 {
                return Err(Error::param("trials", "must be at least 1"));
            }
            let samples = run_trials(trials, seed, "rd_vs_plra", |trial_seed| {
                let display = sample_display(instance, q, &mut rng_from_seed(trial_seed))?;
                realize(s, instance, &display)
            })?;
            let values: Vec<f64> = samples.iter().map(|(u, _)| *u as f64 / scale).collect();
            let mut counts = Array2::<u64>::zeros((m, n));
            for (_, c) in &samples {
                counts += c;
            }
            let t = trials as f64;
            let slack = 3.0 * (q * (1.0 - q) / t).sqrt() + 1e-9;
            (
                Estimate::from_samples(&values, seed),
                counts.mapv(|c| c as f64 / t),
                trials as u64,
                slack,
            )
        }
    };
    let max_realized_marginal = realized_average.iter().copied().fold(0.0, f64::max);
    let dominance_holds = match rd.method {
        EstimateMethod::Exact => plra_expected >= rd.value - 1e-9,
        EstimateMethod::MonteCarlo => plra_expected >= rd.value - rd.half_width - 1e-9,
    };
    Ok(ComparisonResult {
        rd,
        plra_expected,
        dominance_holds,
        max_realized_marginal,
        cap_respected: max_realized_marginal <= q + cap_slack,
        realized_average,
        realizations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub q: f64,
    pub expected_similarity: f64,
    /// Expected similarity over the unconstrained optimum, clamped to [0, 1].
    pub ratio: f64,
    pub max_marginal: f64,
    /// Unfilled expected review slots.
    pub shortfall: f64,
}

/// Expected similarity of probability-limited assignment at each cap.
pub fn q_sweep(instance: &ConferenceInstance, s: &Array2<f64>, qs: &[f64]) -> Result<Vec<SweepPoint>> {
    let eligibility = eligible_pairs(instance, None)?;
    let optimum = objective_units(&solve_max_similarity(s, instance, &eligibility)?, s);
    qs.iter()
        .map(|&q| {
            let sol = solve_fractional_capped(s, instance, &eligibility, q)?;
            Ok(SweepPoint {
                q,
                expected_similarity: sol.expected_similarity(),
                ratio: sol.ratio_to(optimum).min(1.0),
                max_marginal: sol.assignment.max_marginal(),
                shortfall: sol.assignment.shortfall.values().sum(),
            })
        })
        .collect()
}
