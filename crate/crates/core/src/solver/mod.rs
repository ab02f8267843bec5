//! Assignment solvers.
//!
//! Similarities are quantized to integers (`QUANT_SCALE` units per 1.0)
//! before any flow computation, so optima are exact and identical across
//! platforms. Every solver maximizes total similarity first and the number
//! of filled review slots second. Papers left below their load are reported
//! as a per-paper shortfall.

mod brute;
mod constrained;
mod decompose;
mod fractional;
mod maxflow;
mod network;

use ndarray::Array2;

use crate::error::Result;
use crate::instance::{check_dim, ConferenceInstance, DeterministicAssignment, Pair};

pub use brute::{brute_force_optimal, BRUTE_FORCE_BUDGET};
pub use constrained::{
    first_violation, solve_constrained_exact, solve_constrained_with_budget, AssignmentConstraints,
    ExactSolution, GeoVariant, DEFAULT_NODE_BUDGET,
};
pub use decompose::{decompose, sample_assignment, DecompositionResult};
pub use fractional::{rational_cap, solve_fractional_capped, CappedSolution};

use network::CostFlow;

/// Quantization units per unit of similarity.
pub const QUANT_SCALE: i64 = 1_000_000;

pub fn quantize(value: f64) -> i64 {
    (value * QUANT_SCALE as f64).round() as i64
}

pub fn quantize_matrix(s: &Array2<f64>) -> Array2<i64> {
    s.mapv(quantize)
}

/// Total quantized similarity of an assignment.
pub fn objective_units(assignment: &DeterministicAssignment, s: &Array2<f64>) -> i64 {
    assignment
        .pairs
        .iter()
        .map(|p| quantize(s[[p.paper, p.reviewer]]))
        .sum()
}

pub fn units_to_similarity(units: i64) -> f64 {
    units as f64 / QUANT_SCALE as f64
}

/// Lexicographic comparison key of a solution: similarity, then filled slots.
pub(crate) type Score = (i64, usize);

pub(crate) fn score_of(pairs: &[Pair], weights: &Array2<i64>) -> Score {
    (pairs.iter().map(|p| weights[[p.paper, p.reviewer]]).sum(), pairs.len())
}

/// True if `a` comes before `b` in the tie-breaking order: the smallest
/// pair on which they differ belongs to `a`.
pub(crate) fn lex_preferred(a: &DeterministicAssignment, b: &DeterministicAssignment) -> bool {
    let mut ia = a.pairs.iter();
    let mut ib = b.pairs.iter();
    loop {
        match (ia.next(), ib.next()) {
            (Some(x), Some(y)) if x == y => continue,
            (Some(x), Some(y)) => return x < y,
            (Some(_), None) => return true,
            _ => return false,
        }
    }
}

/// Maximum-similarity assignment subject to loads, caps and eligibility.
///
/// Among assignments of maximum similarity, returns one filling the most
/// slots, and among those the one that includes the lowest (paper,
/// reviewer) pairs.
pub fn solve_max_similarity(
    s: &Array2<f64>,
    instance: &ConferenceInstance,
    eligibility: &Array2<bool>,
) -> Result<DeterministicAssignment> {
    check_dim("similarity matrix", instance.dim(), s.dim())?;
    check_dim("eligibility matrix", instance.dim(), eligibility.dim())?;
    let weights = quantize_matrix(s);
    Ok(solve_integral(&weights, eligibility, instance.paper_load, instance.reviewer_cap).0)
}

/// Integral solve on quantized weights. Also returns the number of flow
/// augmentations performed.
pub(crate) fn solve_integral(
    weights: &Array2<i64>,
    eligibility: &Array2<bool>,
    paper_load: usize,
    reviewer_cap: usize,
) -> (DeterministicAssignment, usize) {
    let (m, n) = weights.dim();
    let (shipped, augmentations) = solve_transport(
        weights,
        &eligibility.mapv(i64::from),
        &vec![paper_load as i64; m],
        &vec![reviewer_cap as i64; n],
    );
    let pairs = shipped
        .indexed_iter()
        .filter(|(_, &x)| x > 0)
        .map(|((p, r), _)| Pair::new(p, r));
    (DeterministicAssignment::from_pairs(pairs, paper_load, m), augmentations)
}

/// Optional shared capacities inside rows: pair `(p, c)` with
/// `group[[p, c]] = Some(i)` counts against `caps[i]`. A group's pairs must
/// all lie in one row.
pub(crate) struct PairGroups {
    pub group: Array2<Option<usize>>,
    pub caps: Vec<i64>,
}

/// Integral transportation problem with per-pair capacities: row `p` ships
/// at most `row_demands[p]` units, column `c` accepts at most `col_caps[c]`.
/// Maximizes total weight, then shipped units, with the tie-breaking of
/// [`solve_max_similarity`]. Returns the shipped amount per pair and the
/// number of augmentations.
pub(crate) fn solve_transport(
    weights: &Array2<i64>,
    pair_caps: &Array2<i64>,
    row_demands: &[i64],
    col_caps: &[i64],
) -> (Array2<i64>, usize) {
    solve_grouped_transport(weights, pair_caps, row_demands, col_caps, None)
}

/// [`solve_transport`] with group capacities between rows and columns.
pub(crate) fn solve_grouped_transport(
    weights: &Array2<i64>,
    pair_caps: &Array2<i64>,
    row_demands: &[i64],
    col_caps: &[i64],
    groups: Option<&PairGroups>,
) -> (Array2<i64>, usize) {
    let (m, n) = weights.dim();
    let source = 0;
    let sink = m + n + 1;
    let n_groups = groups.map_or(0, |g| g.caps.len());
    let mut g = CostFlow::new(m + n + 2 + n_groups);
    let mut group_linked = vec![false; n_groups];
    // Every arc earns `w * k + 1` with `k` above the total demand, so the
    // similarity decides first and the shipped amount breaks ties. A bypass
    // arc per row earns nothing and absorbs unshipped demand; costs are
    // shifted by the largest earning so they stay nonnegative, which does
    // not change the optimum because the flow value is fixed.
    let k = row_demands.iter().sum::<i64>() + 1;
    let earning = |w: i64| w.max(0) * k + 1;
    let top = weights
        .iter()
        .zip(pair_caps.iter())
        .filter(|(_, &c)| c > 0)
        .map(|(&w, _)| earning(w))
        .max()
        .unwrap_or(0);
    for (p, &demand) in row_demands.iter().enumerate() {
        g.add_arc(source, 1 + p, demand, 0);
        g.add_arc(1 + p, sink, demand, top);
    }
    let mut arcs = Vec::new();
    for ((p, c), &cap) in pair_caps.indexed_iter() {
        if cap > 0 {
            let cost = top - earning(weights[[p, c]]);
            let from = match groups.and_then(|gr| gr.group[[p, c]].map(|i| (i, gr.caps[i]))) {
                Some((i, group_cap)) => {
                    if !group_linked[i] {
                        group_linked[i] = true;
                        g.add_arc(1 + p, m + n + 2 + i, group_cap, 0);
                    }
                    m + n + 2 + i
                }
                None => 1 + p,
            };
            arcs.push(((p, c), g.add_arc(from, 1 + m + c, cap, cost)));
        }
    }
    for (c, &cap) in col_caps.iter().enumerate() {
        g.add_arc(1 + m + c, sink, cap, 0);
    }
    g.min_cost_max_flow(source, sink);
    let order: Vec<usize> = arcs.iter().map(|&(_, e)| e).collect();
    g.canonicalize(&order);
    let mut shipped = Array2::zeros((m, n));
    for &(ix, e) in &arcs {
        shipped[ix] = g.flow(e);
    }
    (shipped, g.augmentations)
}

/// Largest number of review slots that can be filled.
pub fn max_assignable(instance: &ConferenceInstance, eligibility: &Array2<bool>) -> usize {
    let (m, n) = instance.dim();
    let mut g = maxflow::Dinic::new(m + n + 2);
    let sink = m + n + 1;
    for p in 0..m {
        g.add_arc(0, 1 + p, instance.paper_load as i64);
        for r in 0..n {
            if eligibility[[p, r]] {
                g.add_arc(1 + p, 1 + m + r, 1);
            }
        }
    }
    for r in 0..n {
        g.add_arc(1 + m + r, sink, instance.reviewer_cap as i64);
    }
    g.max_flow(0, sink) as usize
}
