//! Exact assignment under collusion constraints by branch and bound.
//!
//! The relaxation at each node is the flow problem with some pairs
//! forbidden and some forced, plus the per-region capacities that every
//! geo-feasible assignment respects. A violated cycle or all-distinct-regions
//! constraint names a handful of assigned pairs of which any feasible
//! solution drops at least one, so branching forbids each in turn. A paper
//! reviewed only from its authors' region is either emptied or given an
//! outside reviewer, so branching forces each outside candidate in turn and
//! finally forbids the paper altogether.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{lex_preferred, quantize_matrix, score_of, solve_grouped_transport, solve_integral, PairGroups, Score};
use crate::error::{Error, Result};
use crate::instance::{check_dim, ConferenceInstance, DeterministicAssignment, Pair};

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeoVariant {
    #[default]
    None,
    /// Reviewers of a paper come from pairwise distinct regions.
    AllDistinctRegions,
    /// At least one reviewer of a paper is outside the authors' region.
    OneDifferentFromAuthors,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AssignmentConstraints {
    /// 0 disables cycle prevention; 2 forbids 2-cycles; 3 forbids 2- and 3-cycles.
    pub forbid_cycles_up_to: usize,
    pub geo_variant: GeoVariant,
    pub forbidden_pairs: BTreeSet<Pair>,
}

impl AssignmentConstraints {
    pub fn cycles(length: usize) -> Self {
        AssignmentConstraints {
            forbid_cycles_up_to: length,
            ..Default::default()
        }
    }

    pub fn geo(variant: GeoVariant) -> Self {
        AssignmentConstraints {
            geo_variant: variant,
            ..Default::default()
        }
    }

    pub fn validate(&self, instance: &ConferenceInstance) -> Result<()> {
        if ![0, 2, 3].contains(&self.forbid_cycles_up_to) {
            return Err(Error::param(
                "forbid_cycles_up_to",
                format!("{} is not one of 0, 2, 3", self.forbid_cycles_up_to),
            ));
        }
        let (m, n) = instance.dim();
        if let Some(p) = self
            .forbidden_pairs
            .iter()
            .find(|p| p.paper >= m || p.reviewer >= n)
        {
            return Err(Error::param("forbidden_pairs", format!("{p:?} is out of bounds")));
        }
        Ok(())
    }

    fn is_trivial(&self) -> bool {
        self.forbid_cycles_up_to == 0 && self.geo_variant == GeoVariant::None
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactSolution {
    pub assignment: DeterministicAssignment,
    /// False when the node budget ran out before the search finished.
    pub proven_optimal: bool,
    pub nodes: usize,
}

enum Violation {
    /// Feasible solutions omit at least one of these pairs.
    DropOne(Vec<Pair>),
    /// Every assigned reviewer of the paper shares the authors' region.
    NeedsOutsider(usize, Vec<Pair>),
}

/// Returns the assigned pairs of the first violated constraint, if any.
pub fn first_violation(
    assignment: &DeterministicAssignment,
    instance: &ConferenceInstance,
    constraints: &AssignmentConstraints,
) -> Option<Vec<Pair>> {
    find_violation(assignment, instance, constraints).map(|v| match v {
        Violation::DropOne(pairs) | Violation::NeedsOutsider(_, pairs) => pairs,
    })
}

fn find_violation(
    assignment: &DeterministicAssignment,
    instance: &ConferenceInstance,
    constraints: &AssignmentConstraints,
) -> Option<Violation> {
    if constraints.forbid_cycles_up_to >= 2 {
        let authors = instance.paper_authors();
        // reviewer a reviews a paper by reviewer b, witnessed by that pair
        let mut edges: BTreeMap<(usize, usize), Pair> = BTreeMap::new();
        for pair in &assignment.pairs {
            for &b in &authors[pair.paper] {
                if b != pair.reviewer {
                    edges.entry((pair.reviewer, b)).or_insert(*pair);
                }
            }
        }
        for (&(a, b), &w) in &edges {
            if a < b {
                if let Some(&back) = edges.get(&(b, a)) {
                    return Some(Violation::DropOne(vec![w, back]));
                }
            }
        }
        if constraints.forbid_cycles_up_to >= 3 {
            let mut out: BTreeMap<usize, Vec<(usize, Pair)>> = BTreeMap::new();
            for (&(a, b), &w) in &edges {
                out.entry(a).or_default().push((b, w));
            }
            for (&a, succ) in &out {
                for &(b, wab) in succ {
                    if b <= a {
                        continue;
                    }
                    for &(c, wbc) in out.get(&b).map(Vec::as_slice).unwrap_or(&[]) {
                        if c <= a || c == b {
                            continue;
                        }
                        if let Some(&wca) = edges.get(&(c, a)) {
                            return Some(Violation::DropOne(vec![wab, wbc, wca]));
                        }
                    }
                }
            }
        }
    }
    match constraints.geo_variant {
        GeoVariant::None => {}
        GeoVariant::AllDistinctRegions => {
            for p in 0..instance.n_papers() {
                let reviewers = assignment.reviewers_of(p);
                for (i, &r1) in reviewers.iter().enumerate() {
                    for &r2 in &reviewers[i + 1..] {
                        if instance.reviewer_region[r1] == instance.reviewer_region[r2] {
                            return Some(Violation::DropOne(vec![Pair::new(p, r1), Pair::new(p, r2)]));
                        }
                    }
                }
            }
        }
        GeoVariant::OneDifferentFromAuthors => {
            for p in 0..instance.n_papers() {
                let reviewers = assignment.reviewers_of(p);
                if !reviewers.is_empty()
                    && reviewers
                        .iter()
                        .all(|&r| instance.reviewer_region[r] == instance.paper_region[p])
                {
                    return Some(Violation::NeedsOutsider(
                        p,
                        reviewers.into_iter().map(|r| Pair::new(p, r)).collect(),
                    ));
                }
            }
        }
    }
    None
}

pub fn solve_constrained_exact(
    s: &Array2<f64>,
    instance: &ConferenceInstance,
    eligibility: &Array2<bool>,
    constraints: &AssignmentConstraints,
) -> Result<ExactSolution> {
    solve_constrained_with_budget(s, instance, eligibility, constraints, DEFAULT_NODE_BUDGET)
}

/// Depth-first branch and bound. Nodes are explored in a fixed order, so
/// the result is deterministic. A paper with no admissible reviewers ends
/// up unfilled and reported in the shortfall.
pub fn solve_constrained_with_budget(
    s: &Array2<f64>,
    instance: &ConferenceInstance,
    eligibility: &Array2<bool>,
    constraints: &AssignmentConstraints,
    node_budget: usize,
) -> Result<ExactSolution> {
    check_dim("similarity matrix", instance.dim(), s.dim())?;
    check_dim("eligibility matrix", instance.dim(), eligibility.dim())?;
    constraints.validate(instance)?;
    let weights = quantize_matrix(s);
    let mut base = eligibility.clone();
    for p in &constraints.forbidden_pairs {
        base[[p.paper, p.reviewer]] = false;
    }
    let (load, cap) = (instance.paper_load, instance.reviewer_cap);
    if constraints.is_trivial() {
        let (assignment, _) = solve_integral(&weights, &base, load, cap);
        return Ok(ExactSolution {
            assignment,
            proven_optimal: true,
            nodes: 1,
        });
    }

    let score = |a: &DeterministicAssignment| -> Score {
        score_of(&a.pairs.iter().copied().collect::<Vec<_>>(), &weights)
    };

    let groups = region_groups(instance, constraints.geo_variant);
    let mut incumbent: Option<(Score, DeterministicAssignment)> = None;
    let mut stack = vec![Node::default()];
    let mut nodes = 0;
    let mut exhausted = false;
    while let Some(node) = stack.pop() {
        if nodes >= node_budget {
            exhausted = true;
            break;
        }
        nodes += 1;
        let Some(relaxed) = relax(&weights, &base, &node, groups.as_ref(), load, cap) else {
            continue;
        };
        let bound = score(&relaxed);
        if let Some((best, _)) = &incumbent {
            if bound <= *best {
                continue;
            }
        }
        match find_violation(&relaxed, instance, constraints) {
            None => incumbent = Some((bound, relaxed)),
            Some(Violation::DropOne(pairs)) => {
                for pair in pairs.into_iter().rev() {
                    if node.forced.contains(&pair) {
                        continue;
                    }
                    let mut child = node.clone();
                    child.forbidden.insert(pair);
                    stack.push(child);
                }
            }
            Some(Violation::NeedsOutsider(p, _)) => {
                // children in exploration order: force the first outside
                // candidate, then the second with the first forbidden, and
                // so on; last, leave the paper empty
                let mut empty = node.clone();
                empty.forbidden.extend((0..instance.n_reviewers()).map(|r| Pair::new(p, r)));
                if !node.forced.iter().any(|f| f.paper == p) {
                    stack.push(empty);
                }
                let outside: Vec<Pair> = (0..instance.n_reviewers())
                    .map(|r| Pair::new(p, r))
                    .filter(|pair| {
                        base[[p, pair.reviewer]]
                            && !node.forbidden.contains(pair)
                            && !node.forced.contains(pair)
                            && instance.reviewer_region[pair.reviewer] != instance.paper_region[p]
                    })
                    .collect();
                for (i, &pair) in outside.iter().enumerate().rev() {
                    let mut child = node.clone();
                    child.forbidden.extend(&outside[..i]);
                    child.forced.insert(pair);
                    stack.push(child);
                }
            }
        }
    }

    let assignment = incumbent
        .map(|(_, a)| a)
        .unwrap_or_else(|| DeterministicAssignment::from_pairs([], load, instance.n_papers()));
    Ok(ExactSolution {
        assignment,
        proven_optimal: !exhausted,
        nodes,
    })
}

#[derive(Clone, Debug, Default)]
struct Node {
    forbidden: BTreeSet<Pair>,
    forced: BTreeSet<Pair>,
}

/// Region capacities implied by the geo constraint, which every feasible
/// assignment satisfies: one reviewer per region and paper under
/// [`GeoVariant::AllDistinctRegions`], at most `load - 1` reviewers from the
/// authors' region under [`GeoVariant::OneDifferentFromAuthors`]. They make
/// the relaxation exact for the former.
fn region_groups(instance: &ConferenceInstance, variant: GeoVariant) -> Option<PairGroups> {
    let (m, n) = instance.dim();
    let mut ids: BTreeMap<(usize, &str), usize> = BTreeMap::new();
    let mut group = Array2::from_elem((m, n), None);
    for p in 0..m {
        for r in 0..n {
            let region = instance.reviewer_region[r].as_str();
            let key = match variant {
                GeoVariant::None => return None,
                GeoVariant::AllDistinctRegions => region,
                GeoVariant::OneDifferentFromAuthors if region == instance.paper_region[p] => region,
                GeoVariant::OneDifferentFromAuthors => continue,
            };
            let next = ids.len();
            group[[p, r]] = Some(*ids.entry((p, key)).or_insert(next));
        }
    }
    let cap = match variant {
        GeoVariant::AllDistinctRegions => 1,
        _ => instance.paper_load as i64 - 1,
    };
    Some(PairGroups {
        group,
        caps: vec![cap; ids.len()],
    })
}

/// Flow relaxation of a node, or `None` if its forced pairs already
/// exceed a load, cap or region capacity.
fn relax(
    weights: &Array2<i64>,
    base: &Array2<bool>,
    node: &Node,
    groups: Option<&PairGroups>,
    load: usize,
    cap: usize,
) -> Option<DeterministicAssignment> {
    let (m, n) = weights.dim();
    if node.forced.is_empty() && groups.is_none() {
        let mut elig = base.clone();
        for p in &node.forbidden {
            elig[[p.paper, p.reviewer]] = false;
        }
        return Some(solve_integral(weights, &elig, load, cap).0);
    }
    let mut demands = vec![load as i64; m];
    let mut caps = vec![cap as i64; n];
    let mut pair_caps = base.mapv(i64::from);
    for p in &node.forbidden {
        pair_caps[[p.paper, p.reviewer]] = 0;
    }
    let mut group_caps = groups.map(|g| g.caps.clone());
    for p in &node.forced {
        demands[p.paper] -= 1;
        caps[p.reviewer] -= 1;
        pair_caps[[p.paper, p.reviewer]] = 0;
        if let (Some(g), Some(gc)) = (groups, group_caps.as_mut()) {
            if let Some(i) = g.group[[p.paper, p.reviewer]] {
                gc[i] -= 1;
            }
        }
    }
    if demands.iter().chain(&caps).chain(group_caps.iter().flatten()).any(|&x| x < 0) {
        return None;
    }
    let reduced = groups.zip(group_caps).map(|(g, caps)| PairGroups {
        group: g.group.clone(),
        caps,
    });
    let (shipped, _) = solve_grouped_transport(weights, &pair_caps, &demands, &caps, reduced.as_ref());
    let pairs = shipped
        .indexed_iter()
        .filter(|(_, &x)| x > 0)
        .map(|((p, r), _)| Pair::new(p, r))
        .chain(node.forced.iter().copied());
    Some(DeterministicAssignment::from_pairs(pairs, load, m))
}

/// Replaces `best` by `candidate` if it scores higher or ties and comes
/// first in the tie-breaking order.
pub(crate) fn keep_better(
    best: &mut Option<(Score, DeterministicAssignment)>,
    score: Score,
    candidate: &DeterministicAssignment,
) {
    let better = match best {
        None => true,
        Some((s, a)) => score > *s || (score == *s && lex_preferred(candidate, a)),
    };
    if better {
        *best = Some((score, candidate.clone()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::eligible_pairs;
    use crate::solver::objective_units;
    use approx::assert_abs_diff_eq;

    /// Reviewers r0 and r1 authored papers pA and pB; pC has no author in
    /// the reviewer pool.
    fn cycle_instance() -> ConferenceInstance {
        let s = ndarray::array![[0.0, 0.9, 0.8], [0.9, 0.0, 0.1], [0.2, 0.3, 0.5]];
        let mut inst = ConferenceInstance::from_similarity(s, 1, 1);
        inst.add_author(0, 0);
        inst.add_author(1, 1);
        inst
    }

    #[test]
    fn two_cycle_is_broken() {
        let inst = cycle_instance();
        let elig = eligible_pairs(&inst, None).unwrap();
        let s = inst.text_similarity.clone();
        let free = solve_constrained_exact(&s, &inst, &elig, &AssignmentConstraints::default()).unwrap();
        assert_abs_diff_eq!(free.assignment.total(&s), 2.3, epsilon = 1e-12);
        assert!(first_violation(&free.assignment, &inst, &AssignmentConstraints::cycles(2)).is_some());

        let sol = solve_constrained_exact(&s, &inst, &elig, &AssignmentConstraints::cycles(2)).unwrap();
        assert!(sol.proven_optimal);
        assert_eq!(objective_units(&sol.assignment, &s), 2_000_000);
        // r0 -> pB, r2 -> pA, r1 -> pC
        assert_eq!(
            sol.assignment.pairs,
            [Pair::new(0, 2), Pair::new(1, 0), Pair::new(2, 1)].into()
        );
        assert!(first_violation(&sol.assignment, &inst, &AssignmentConstraints::cycles(2)).is_none());
    }

    #[test]
    fn three_cycle_detection() {
        let mut inst = cycle_instance();
        inst.add_author(2, 2);
        // r0 -> pB, r1 -> pC, r2 -> pA is a 3-cycle.
        let a = DeterministicAssignment::from_pairs([Pair::new(1, 0), Pair::new(2, 1), Pair::new(0, 2)], 1, 3);
        assert!(first_violation(&a, &inst, &AssignmentConstraints::cycles(2)).is_none());
        let v = first_violation(&a, &inst, &AssignmentConstraints::cycles(3)).unwrap();
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn region_capacities_settle_geo_at_the_root() {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(5);
        let s = Array2::from_shape_fn((30, 30), |_| rng.random::<f64>());
        let mut inst = ConferenceInstance::from_similarity(s, 3, 4);
        let label = |i: usize| format!("R{}", i % 4);
        inst.set_regions((0..30).map(|r| label(r * 7)).collect(), (0..30).map(label).collect());
        let elig = eligible_pairs(&inst, None).unwrap();
        for variant in [GeoVariant::AllDistinctRegions, GeoVariant::OneDifferentFromAuthors] {
            let c = AssignmentConstraints::geo(variant);
            let sol = solve_constrained_exact(&inst.text_similarity, &inst, &elig, &c).unwrap();
            assert!(sol.proven_optimal);
            assert_eq!(sol.nodes, 1, "{variant:?}");
            assert_eq!(sol.assignment.len(), 90);
            assert!(first_violation(&sol.assignment, &inst, &c).is_none());
        }
    }

    #[test]
    fn forced_two_cycle_is_infeasible() {
        let s = ndarray::array![[0.0, 0.5], [0.5, 0.0]];
        let mut inst = ConferenceInstance::from_similarity(s, 1, 1);
        inst.add_author(0, 0);
        inst.add_author(1, 1);
        let elig = eligible_pairs(&inst, None).unwrap();
        let sol = solve_constrained_exact(&inst.text_similarity, &inst, &elig, &AssignmentConstraints::cycles(2)).unwrap();
        assert_eq!(sol.assignment.len(), 1);
        assert_eq!(sol.assignment.total_shortfall(), 1);
        assert!(sol.proven_optimal);
    }

    #[test]
    fn geo_b_without_foreign_reviewers_is_short() {
        let s = ndarray::array![[0.5, 0.6]];
        let mut inst = ConferenceInstance::from_similarity(s, 1, 1);
        inst.set_regions(vec!["X".into(), "X".into()], vec!["X".into()]);
        let elig = eligible_pairs(&inst, None).unwrap();
        let sol = solve_constrained_exact(
            &inst.text_similarity,
            &inst,
            &elig,
            &AssignmentConstraints::geo(GeoVariant::OneDifferentFromAuthors),
        )
        .unwrap();
        assert!(sol.assignment.is_empty());
        assert_eq!(sol.assignment.shortfall, [(0, 1)].into());
    }

    #[test]
    fn geo_a_picks_cross_region_pair() {
        // One paper, load 2. The two best reviewers share a region.
        let s = ndarray::array![[0.9, 0.8, 0.3]];
        let mut inst = ConferenceInstance::from_similarity(s, 2, 1);
        inst.set_regions(vec!["X".into(), "X".into(), "Y".into()], vec!["Z".into()]);
        let elig = eligible_pairs(&inst, None).unwrap();
        let sol = solve_constrained_exact(
            &inst.text_similarity,
            &inst,
            &elig,
            &AssignmentConstraints::geo(GeoVariant::AllDistinctRegions),
        )
        .unwrap();
        assert_eq!(sol.assignment.pairs, [Pair::new(0, 0), Pair::new(0, 2)].into());
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let inst = cycle_instance();
        let elig = eligible_pairs(&inst, None).unwrap();
        let sol = solve_constrained_with_budget(
            &inst.text_similarity,
            &inst,
            &elig,
            &AssignmentConstraints::cycles(2),
            1,
        )
        .unwrap();
        assert!(!sol.proven_optimal);
        assert_eq!(sol.nodes, 1);
    }

    #[test]
    fn invalid_cycle_length() {
        let inst = cycle_instance();
        let elig = eligible_pairs(&inst, None).unwrap();
        assert!(solve_constrained_exact(&inst.text_similarity, &inst, &elig, &AssignmentConstraints::cycles(1)).is_err());
    }
}
