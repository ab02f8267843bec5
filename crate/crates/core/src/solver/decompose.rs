//! Writes a fractional assignment as a lottery over integral ones.
//!
//! Each round picks an integral assignment `A` on the smallest face of the
//! bounded polytope that contains the current (normalized) residual `x`,
//! then removes the largest multiple of `A` that keeps the rest inside the
//! polytope. The residual lands on a proper subface, so the face dimension
//! drops every round and there are at most `nnz + 1` components.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::maxflow::{feasible_flow, BoundedArc};
use crate::error::{Error, Result};
use crate::instance::{ConferenceInstance, DeterministicAssignment, FractionalAssignment, Pair};

const INPUT_TOL: f64 = 1e-9;
const TIGHT_TOL: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionResult {
    /// Weights are positive and sum to 1.
    pub components: Vec<(f64, DeterministicAssignment)>,
}

impl DecompositionResult {
    /// Recombined marginals.
    pub fn marginals(&self, dim: (usize, usize)) -> Array2<f64> {
        let mut out = Array2::zeros(dim);
        for (w, a) in &self.components {
            for p in &a.pairs {
                out[[p.paper, p.reviewer]] += w;
            }
        }
        out
    }

    /// Draws a component with probability equal to its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &DeterministicAssignment {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (w, a) in &self.components {
            acc += w;
            if u < acc {
                return a;
            }
        }
        &self.components.last().expect("decomposition has a component").1
    }
}

struct Bounds {
    lo: usize,
    hi: usize,
}

fn bounds(sum: f64, limit: usize) -> Bounds {
    let lo = (sum + TIGHT_TOL).floor().max(0.0) as usize;
    let hi = ((sum - TIGHT_TOL).ceil().max(0.0) as usize).min(limit);
    Bounds { lo: lo.min(hi), hi }
}

pub fn decompose(f: &FractionalAssignment, instance: &ConferenceInstance) -> Result<DecompositionResult> {
    let (m, n) = instance.dim();
    if f.dim() != (m, n) {
        return Err(Error::ShapeMismatch {
            what: "marginals",
            expected: (m, n),
            actual: f.dim(),
        });
    }
    for ((p, r), &v) in f.marginals.indexed_iter() {
        if !(-INPUT_TOL..=1.0 + INPUT_TOL).contains(&v) {
            return Err(Error::InvalidMarginals(format!(
                "marginal ({p}, {r}) = {v} is outside [0, 1]"
            )));
        }
    }
    let rows: Vec<f64> = f.marginals.rows().into_iter().map(|r| r.sum()).collect();
    let cols: Vec<f64> = f.marginals.columns().into_iter().map(|c| c.sum()).collect();
    for (p, &s) in rows.iter().enumerate() {
        if s > instance.paper_load as f64 + INPUT_TOL {
            return Err(Error::InvalidMarginals(format!(
                "paper {p} has mass {s} above its load {}",
                instance.paper_load
            )));
        }
    }
    for (r, &s) in cols.iter().enumerate() {
        if s > instance.reviewer_cap as f64 + INPUT_TOL {
            return Err(Error::InvalidMarginals(format!(
                "reviewer {r} has mass {s} above the cap {}",
                instance.reviewer_cap
            )));
        }
    }

    let row_bounds: Vec<Bounds> = rows.iter().map(|&s| bounds(s, instance.paper_load)).collect();
    let col_bounds: Vec<Bounds> = cols.iter().map(|&s| bounds(s, instance.reviewer_cap)).collect();

    // Support entries in (paper, reviewer) order, with residual mass.
    let mut support: Vec<(Pair, f64)> = f
        .marginals
        .indexed_iter()
        .filter(|(_, &v)| v > TIGHT_TOL)
        .map(|((p, r), &v)| (Pair::new(p, r), v.min(1.0)))
        .collect();
    let nnz = support.len();

    let mut mass = 1.0;
    let mut components = Vec::new();
    let mut row_res = rows.clone();
    let mut col_res = cols.clone();
    while mass > TIGHT_TOL {
        if components.len() > nnz {
            return Err(Error::Decomposition(format!(
                "no convergence after {} components",
                components.len()
            )));
        }
        let chosen = face_vertex(&support, &row_res, &col_res, &row_bounds, &col_bounds, mass, m, n)
            .ok_or_else(|| Error::Decomposition("no integral point on the current face".into()))?;

        let mut row_a = vec![0usize; m];
        let mut col_a = vec![0usize; n];
        for (i, (pair, _)) in support.iter().enumerate() {
            if chosen[i] {
                row_a[pair.paper] += 1;
                col_a[pair.reviewer] += 1;
            }
        }

        let mut theta = mass;
        for (i, &(_, x)) in support.iter().enumerate() {
            theta = theta.min(if chosen[i] { x } else { mass - x });
        }
        let mut limit = |res: f64, a: usize, b: &Bounds| {
            if b.hi > a {
                theta = theta.min((b.hi as f64 * mass - res) / (b.hi - a) as f64);
            }
            if a > b.lo {
                theta = theta.min((res - b.lo as f64 * mass) / (a - b.lo) as f64);
            }
        };
        for p in 0..m {
            limit(row_res[p], row_a[p], &row_bounds[p]);
        }
        for r in 0..n {
            limit(col_res[r], col_a[r], &col_bounds[r]);
        }
        let theta = theta.max(0.0);

        let mut pairs = Vec::new();
        for (i, (pair, x)) in support.iter_mut().enumerate() {
            if chosen[i] {
                *x -= theta;
                pairs.push(*pair);
                row_res[pair.paper] -= theta;
                col_res[pair.reviewer] -= theta;
            }
        }
        mass -= theta;
        support.retain(|&(_, x)| x > TIGHT_TOL);
        components.push((
            theta,
            DeterministicAssignment::from_pairs(pairs, instance.paper_load, m),
        ));
    }

    let total: f64 = components.iter().map(|(w, _)| w).sum();
    components.retain(|(w, _)| *w > 0.0);
    for (w, _) in &mut components {
        *w /= total;
    }
    Ok(DecompositionResult { components })
}

/// An integral assignment satisfying every constraint that is tight at the
/// residual: zero entries stay out, full entries stay in, and rows or
/// columns at a bound stay at that bound.
#[allow(clippy::too_many_arguments)]
fn face_vertex(
    support: &[(Pair, f64)],
    row_res: &[f64],
    col_res: &[f64],
    row_bounds: &[Bounds],
    col_bounds: &[Bounds],
    mass: f64,
    m: usize,
    n: usize,
) -> Option<Vec<bool>> {
    let source = 0;
    let sink = m + n + 1;
    let mut arcs = Vec::with_capacity(support.len() + m + n);
    for &(pair, x) in support {
        let full = x >= mass - TIGHT_TOL;
        arcs.push(BoundedArc {
            from: 1 + pair.paper,
            to: 1 + m + pair.reviewer,
            lower: full as i64,
            upper: 1,
        });
    }
    let side = |res: f64, b: &Bounds| {
        let (mut lo, mut hi) = (b.lo as i64, b.hi as i64);
        if res >= b.hi as f64 * mass - TIGHT_TOL {
            lo = hi;
        } else if res <= b.lo as f64 * mass + TIGHT_TOL {
            hi = lo;
        }
        (lo, hi)
    };
    for p in 0..m {
        let (lower, upper) = side(row_res[p], &row_bounds[p]);
        arcs.push(BoundedArc { from: source, to: 1 + p, lower, upper });
    }
    for r in 0..n {
        let (lower, upper) = side(col_res[r], &col_bounds[r]);
        arcs.push(BoundedArc { from: 1 + m + r, to: sink, lower, upper });
    }
    let flow = feasible_flow(m + n + 2, &arcs, source, sink)?;
    Some(flow[..support.len()].iter().map(|&f| f > 0).collect())
}

/// Draws one integral assignment whose marginals are `f`, deterministically
/// for a given seed.
pub fn sample_assignment(
    f: &FractionalAssignment,
    instance: &ConferenceInstance,
    seed: u64,
) -> Result<DeterministicAssignment> {
    let decomposition = decompose(f, instance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(decomposition.sample(&mut rng).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::eligible_pairs;
    use crate::solver::solve_fractional_capped;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};
    use rand::Rng;

    fn t1() -> ConferenceInstance {
        ConferenceInstance::from_similarity(array![[0.9, 0.1], [0.2, 0.8]], 1, 1)
    }

    fn frac(marginals: Array2<f64>) -> FractionalAssignment {
        FractionalAssignment {
            marginals,
            shortfall: Default::default(),
        }
    }

    #[test]
    fn t1_half_splits_into_two_matchings() {
        let inst = t1();
        let d = decompose(&frac(Array2::from_elem((2, 2), 0.5)), &inst).unwrap();
        assert_eq!(d.components.len(), 2);
        let diag = DeterministicAssignment::from_pairs([Pair::new(0, 0), Pair::new(1, 1)], 1, 2);
        let anti = DeterministicAssignment::from_pairs([Pair::new(0, 1), Pair::new(1, 0)], 1, 2);
        for (w, a) in &d.components {
            assert_abs_diff_eq!(*w, 0.5, epsilon = 1e-12);
            assert!(*a == diag || *a == anti);
        }
        assert_ne!(d.components[0].1, d.components[1].1);
    }

    #[test]
    fn integral_input_is_one_component() {
        let inst = t1();
        let d = decompose(&frac(array![[0.0, 1.0], [1.0, 0.0]]), &inst).unwrap();
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.components[0].0, 1.0);
        assert_eq!(
            d.components[0].1.pairs,
            [Pair::new(0, 1), Pair::new(1, 0)].into()
        );
        let s = sample_assignment(&frac(array![[0.0, 1.0], [1.0, 0.0]]), &inst, 17).unwrap();
        assert_eq!(s, d.components[0].1);
    }

    #[test]
    fn single_row_split() {
        let inst = ConferenceInstance::new(1, 2, 1, 1);
        let d = decompose(&frac(array![[0.3, 0.7]]), &inst).unwrap();
        let mut weights: Vec<(usize, f64)> = d
            .components
            .iter()
            .map(|(w, a)| (a.pairs.iter().next().unwrap().reviewer, *w))
            .collect();
        weights.sort_by_key(|&(r, _)| r);
        assert_eq!(weights.len(), 2);
        assert_abs_diff_eq!(weights[0].1, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(weights[1].1, 0.7, epsilon = 1e-12);
    }

    #[test]
    fn rejects_out_of_bounds_marginals() {
        let inst = t1();
        assert!(matches!(
            decompose(&frac(array![[0.9, 0.9], [0.1, 0.1]]), &inst),
            Err(Error::InvalidMarginals(_))
        ));
        assert!(matches!(
            decompose(&frac(array![[1.2, 0.0], [0.0, 1.0]]), &inst),
            Err(Error::InvalidMarginals(_))
        ));
    }

    #[test]
    fn partial_marginals_decompose() {
        // Zero cap leaves nothing assigned: one empty component.
        let inst = t1();
        let d = decompose(&frac(Array2::zeros((2, 2))), &inst).unwrap();
        assert_eq!(d.components.len(), 1);
        assert!(d.components[0].1.is_empty());
        assert_eq!(d.components[0].1.total_shortfall(), 2);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let inst = t1();
        let f = frac(Array2::from_elem((2, 2), 0.5));
        for seed in 0..20 {
            assert_eq!(
                sample_assignment(&f, &inst, seed).unwrap(),
                sample_assignment(&f, &inst, seed).unwrap()
            );
        }
    }

    fn random_capped(seed: u64, m: usize, n: usize, load: usize, cap: usize, q: f64) -> (ConferenceInstance, FractionalAssignment) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Array2::from_shape_fn((m, n), |_| (rng.random_range(0..1000) as f64) / 1000.0);
        let mut inst = ConferenceInstance::from_similarity(s, load, cap);
        for _ in 0..(m * n / 6) {
            let p = rng.random_range(0..m);
            let r = rng.random_range(0..n);
            inst.add_conflict(r, p);
        }
        let elig = eligible_pairs(&inst, None).unwrap();
        let sol = solve_fractional_capped(&inst.text_similarity, &inst, &elig, q).unwrap();
        (inst, sol.assignment)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn reconstruction_and_validity(
            seed in 0u64..10_000,
            m in 1usize..7,
            n in 1usize..7,
            load in 1usize..3,
            cap in 1usize..4,
            qi in 1usize..10,
        ) {
            let q = qi as f64 / 10.0;
            let (inst, f) = random_capped(seed, m, n, load, cap, q);
            let d = decompose(&f, &inst).unwrap();
            let nnz = f.marginals.iter().filter(|&&v| v > 0.0).count();
            prop_assert!(d.components.len() <= nnz + 1);
            let total: f64 = d.components.iter().map(|(w, _)| w).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            let rec = d.marginals(inst.dim());
            for (a, b) in rec.iter().zip(f.marginals.iter()) {
                prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
            }
            let elig = eligible_pairs(&inst, None).unwrap();
            let max_filled = f.marginals.sum().round() as usize;
            for (w, a) in &d.components {
                prop_assert!(*w > 0.0 && *w <= 1.0 + 1e-12);
                let mut per_reviewer = vec![0usize; n];
                for p in &a.pairs {
                    prop_assert!(elig[[p.paper, p.reviewer]]);
                    per_reviewer[p.reviewer] += 1;
                }
                prop_assert!(per_reviewer.iter().all(|&c| c <= cap));
                prop_assert!(a.reviewers_of(0).len() <= load);
                if f.shortfall.is_empty() {
                    prop_assert_eq!(a.len(), max_filled);
                }
            }
        }
    }
}
