use std::collections::BTreeMap;

use ndarray::Array2;

use super::{quantize_matrix, solve_transport, QUANT_SCALE};
use crate::error::{Error, Result};
use crate::instance::{check_dim, ConferenceInstance, FractionalAssignment};

/// Largest denominator used to represent the probability cap exactly.
const MAX_CAP_DENOMINATOR: i64 = 1_000_000;

/// Best rational approximation `num / den` of `q` with `den <= max_den`,
/// by continued fractions. Exact for any `q` that is such a fraction up to
/// floating-point rounding (e.g. `1.0 / 3.0` gives `(1, 3)`).
pub fn rational_cap(q: f64, max_den: i64) -> (i64, i64) {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut x = q;
    loop {
        let a = x.floor();
        let ai = a as i64;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = x - a;
        if frac < 1e-12 || (q - h1 as f64 / k1 as f64).abs() < 1e-15 {
            break;
        }
        x = 1.0 / frac;
    }
    (h1, k1)
}

/// Optimal probability-capped randomized assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct CappedSolution {
    pub assignment: FractionalAssignment,
    /// Cap actually enforced, as a fraction.
    pub cap: (i64, i64),
    /// Expected quantized similarity is `objective_num / denominator` units.
    pub objective_num: i128,
    pub denominator: i128,
}

impl CappedSolution {
    pub fn expected_similarity(&self) -> f64 {
        self.objective_num as f64 / (self.denominator as f64 * QUANT_SCALE as f64)
    }

    /// Expected similarity divided by an integral optimum given in
    /// quantized units. Exactly 1.0 when they agree.
    pub fn ratio_to(&self, optimum_units: i64) -> f64 {
        if optimum_units == 0 {
            return 1.0;
        }
        self.objective_num as f64 / (self.denominator * optimum_units as i128) as f64
    }
}

/// Marginals maximizing expected similarity subject to every marginal being
/// at most `q`, paper loads, reviewer caps and eligibility.
///
/// Solved as a capacitated transportation problem: all capacities are
/// scaled by the denominator of `q` so the flow is integral.
pub fn solve_fractional_capped(
    s: &Array2<f64>,
    instance: &ConferenceInstance,
    eligibility: &Array2<bool>,
    q: f64,
) -> Result<CappedSolution> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("q", format!("{q} is outside [0, 1]")));
    }
    check_dim("similarity matrix", instance.dim(), s.dim())?;
    check_dim("eligibility matrix", instance.dim(), eligibility.dim())?;
    let (num, den) = rational_cap(q, MAX_CAP_DENOMINATOR);
    let weights = quantize_matrix(s);
    let (m, n) = instance.dim();
    let load = instance.paper_load as i64 * den;
    let (shipped, _) = solve_transport(
        &weights,
        &eligibility.mapv(|e| if e { num } else { 0 }),
        &vec![load; m],
        &vec![instance.reviewer_cap as i64 * den; n],
    );

    let mut marginals = Array2::zeros((m, n));
    let mut row_units = vec![0i64; m];
    let mut objective_num = 0i128;
    for ((p, r), &f) in shipped.indexed_iter() {
        if f > 0 {
            marginals[[p, r]] = f as f64 / den as f64;
            row_units[p] += f;
            objective_num += f as i128 * weights[[p, r]] as i128;
        }
    }
    let shortfall: BTreeMap<usize, f64> = row_units
        .iter()
        .enumerate()
        .filter(|(_, &u)| u < load)
        .map(|(p, &u)| (p, (load - u) as f64 / den as f64))
        .collect();
    Ok(CappedSolution {
        assignment: FractionalAssignment {
            marginals,
            shortfall,
        },
        cap: (num, den),
        objective_num,
        denominator: den as i128,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::eligible_pairs;
    use crate::solver::{objective_units, solve_max_similarity};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn t1() -> ConferenceInstance {
        ConferenceInstance::from_similarity(array![[0.9, 0.1], [0.2, 0.8]], 1, 1)
    }

    fn solve(inst: &ConferenceInstance, q: f64) -> CappedSolution {
        let elig = eligible_pairs(inst, None).unwrap();
        solve_fractional_capped(&inst.text_similarity, inst, &elig, q).unwrap()
    }

    /// Expected similarity of the best point of the T1 capped polytope,
    /// enumerating its extreme points. With load 1 and cap 1 every feasible
    /// point is `[[a, 1-a], [1-a, a]]` with `1-q <= a <= q`, so the extreme
    /// points are `a = q` and `a = 1-q`.
    fn t1_oracle(q: f64) -> Option<f64> {
        if q < 0.5 {
            return None;
        }
        let value = |a: f64| a * 1.7 + (1.0 - a) * 0.3;
        Some(value(q).max(value(1.0 - q)))
    }

    #[test]
    fn rational_caps() {
        assert_eq!(rational_cap(0.5, 1000), (1, 2));
        assert_eq!(rational_cap(1.0 / 3.0, 1000), (1, 3));
        assert_eq!(rational_cap(2.0 / 3.0, 1000), (2, 3));
        assert_eq!(rational_cap(0.1, 1000), (1, 10));
        assert_eq!(rational_cap(0.3, 1000), (3, 10));
        assert_eq!(rational_cap(1.0, 1000), (1, 1));
        assert_eq!(rational_cap(0.0, 1000), (0, 1));
        assert_eq!(rational_cap(0.75, 1000), (3, 4));
    }

    #[test]
    fn t1_half_cap() {
        let sol = solve(&t1(), 0.5);
        assert!(sol.assignment.marginals.iter().all(|&v| v == 0.5));
        assert_abs_diff_eq!(sol.expected_similarity(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.expected_similarity(), t1_oracle(0.5).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn t1_matches_extreme_point_oracle() {
        for q in [0.5, 0.6, 0.75, 0.9, 1.0] {
            let sol = solve(&t1(), q);
            assert_abs_diff_eq!(sol.expected_similarity(), t1_oracle(q).unwrap(), epsilon = 1e-9);
        }
        // 0.75 * 1.7 + 0.25 * 0.3
        assert_abs_diff_eq!(solve(&t1(), 0.75).expected_similarity(), 1.35, epsilon = 1e-12);
    }

    #[test]
    fn t1_full_cap_is_integral_optimum() {
        let inst = t1();
        let sol = solve(&inst, 1.0);
        let elig = eligible_pairs(&inst, None).unwrap();
        let a = solve_max_similarity(&inst.text_similarity, &inst, &elig).unwrap();
        assert_eq!(sol.assignment.marginals, a.indicator(inst.dim()));
        assert_eq!(sol.ratio_to(objective_units(&a, &inst.text_similarity)), 1.0);
        assert_abs_diff_eq!(sol.expected_similarity(), 1.7, epsilon = 1e-12);
    }

    #[test]
    fn t1_zero_cap() {
        let sol = solve(&t1(), 0.0);
        assert!(sol.assignment.marginals.iter().all(|&v| v == 0.0));
        assert_eq!(sol.assignment.shortfall, [(0, 1.0), (1, 1.0)].into());
        assert_eq!(sol.expected_similarity(), 0.0);
    }

    #[test]
    fn cap_below_half_leaves_shortfall() {
        let sol = solve(&t1(), 0.4);
        assert_eq!(sol.assignment.shortfall.len(), 2);
        assert!(sol.assignment.max_marginal() <= 0.4 + 1e-12);
    }

    #[test]
    fn invalid_q() {
        let inst = t1();
        let elig = eligible_pairs(&inst, None).unwrap();
        assert!(solve_fractional_capped(&inst.text_similarity, &inst, &elig, -0.1).is_err());
        assert!(solve_fractional_capped(&inst.text_similarity, &inst, &elig, 1.5).is_err());
    }
}
