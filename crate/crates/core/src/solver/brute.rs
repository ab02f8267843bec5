//! Exhaustive search over every load-feasible assignment. Test oracle only.

use ndarray::Array2;

use super::constrained::{first_violation, keep_better, AssignmentConstraints};
use super::{quantize_matrix, score_of, Score};
use crate::error::{Error, Result};
use crate::instance::{check_dim, ConferenceInstance, DeterministicAssignment, Pair};

pub const BRUTE_FORCE_BUDGET: u128 = 10_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Best assignment by enumeration: highest quantized similarity, then most
/// filled slots, then the tie-breaking order of
/// [`super::solve_max_similarity`].
pub fn brute_force_optimal(
    s: &Array2<f64>,
    instance: &ConferenceInstance,
    eligibility: &Array2<bool>,
    constraints: &AssignmentConstraints,
) -> Result<DeterministicAssignment> {
    check_dim("similarity matrix", instance.dim(), s.dim())?;
    check_dim("eligibility matrix", instance.dim(), eligibility.dim())?;
    constraints.validate(instance)?;
    let (m, n) = instance.dim();
    let load = instance.paper_load;

    let candidates: Vec<Vec<usize>> = (0..m)
        .map(|p| {
            (0..n)
                .filter(|&r| eligibility[[p, r]] && !constraints.forbidden_pairs.contains(&Pair::new(p, r)))
                .collect()
        })
        .collect();
    let size = candidates.iter().fold(1u128, |acc, c| {
        let per_paper: u128 = (0..=load.min(c.len())).map(|k| binomial(c.len(), k)).sum();
        acc.saturating_mul(per_paper)
    });
    if size > BRUTE_FORCE_BUDGET {
        return Err(Error::SearchSpaceTooLarge {
            size,
            budget: BRUTE_FORCE_BUDGET,
        });
    }

    let mut search = Search {
        weights: quantize_matrix(s),
        instance,
        constraints,
        candidates,
        used: vec![0; n],
        chosen: Vec::new(),
        best: None,
    };
    search.paper(0);
    Ok(search
        .best
        .map(|(_, a)| a)
        .unwrap_or_else(|| DeterministicAssignment::from_pairs([], load, m)))
}

struct Search<'a> {
    weights: Array2<i64>,
    instance: &'a ConferenceInstance,
    constraints: &'a AssignmentConstraints,
    candidates: Vec<Vec<usize>>,
    used: Vec<usize>,
    chosen: Vec<Pair>,
    best: Option<(Score, DeterministicAssignment)>,
}

impl Search<'_> {
    fn paper(&mut self, p: usize) {
        if p == self.candidates.len() {
            self.leaf();
            return;
        }
        self.subsets(p, 0, 0);
    }

    /// Every subset of paper `p`'s candidates from index `from` on, with at
    /// most `load - taken` more members.
    fn subsets(&mut self, p: usize, from: usize, taken: usize) {
        self.paper(p + 1);
        if taken == self.instance.paper_load {
            return;
        }
        for i in from..self.candidates[p].len() {
            let r = self.candidates[p][i];
            if self.used[r] == self.instance.reviewer_cap {
                continue;
            }
            self.used[r] += 1;
            self.chosen.push(Pair::new(p, r));
            self.subsets(p, i + 1, taken + 1);
            self.chosen.pop();
            self.used[r] -= 1;
        }
    }

    fn leaf(&mut self) {
        let score = score_of(&self.chosen, &self.weights);
        if let Some((best, _)) = &self.best {
            if score < *best {
                return;
            }
        }
        let a = DeterministicAssignment::from_pairs(
            self.chosen.iter().copied(),
            self.instance.paper_load,
            self.instance.n_papers(),
        );
        if first_violation(&a, self.instance, self.constraints).is_some() {
            return;
        }
        keep_better(&mut self.best, score, &a);
    }
}
