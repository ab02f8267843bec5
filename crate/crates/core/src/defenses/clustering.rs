//! Papers are assigned to fixed-size groups of similar reviewers using the
//! group's averaged bids, then dealt out at random inside each group. A
//! reviewer therefore gets any particular paper with probability at most one
//! over their group's size, whatever they bid.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::{BidMatrix, ConferenceInstance, DeterministicAssignment, FractionalAssignment, Pair};
use crate::rng::rng_from_seed;
use crate::similarity::{base_similarity, map_bid, SimilarityConfig};
use crate::solver::{quantize_matrix, solve_transport};

use super::{AssignmentOutcome, ClusteringParams};

/// Permutations tried per group before falling back to a matching.
const MAX_REDRAWS: usize = 1000;

fn cosine_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let dot = a.dot(&b);
    let norm = a.dot(&a).sqrt() * b.dot(&b).sqrt();
    if norm == 0.0 {
        1.0
    } else {
        1.0 - dot / norm
    }
}

/// Greedy grouping: the lowest-index unplaced reviewer starts a group and
/// takes its `g - 1` nearest unplaced reviewers by cosine distance between
/// their text and subject profiles. The last group may be smaller.
pub fn cluster_reviewers(instance: &ConferenceInstance, g: usize) -> Result<Vec<Vec<usize>>> {
    let n = instance.n_reviewers();
    if g == 0 || g > n {
        return Err(Error::param(
            "group_size",
            format!("{g} is not between 1 and the {n} reviewers"),
        ));
    }
    let m = instance.n_papers();
    let profiles = Array2::from_shape_fn((n, 2 * m), |(r, j)| {
        if j < m {
            instance.text_similarity[[j, r]]
        } else {
            instance.subject_overlap[[j - m, r]]
        }
    });
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut groups = Vec::new();
    while !remaining.is_empty() {
        if remaining.len() <= g {
            groups.push(std::mem::take(&mut remaining));
            break;
        }
        let seed = remaining[0];
        let mut others: Vec<(f64, usize)> = remaining[1..]
            .iter()
            .map(|&r| (cosine_distance(profiles.row(seed), profiles.row(r)), r))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut group: Vec<usize> = std::iter::once(seed)
            .chain(others[..g - 1].iter().map(|&(_, r)| r))
            .collect();
        group.sort_unstable();
        remaining.retain(|r| !group.contains(r));
        groups.push(group);
    }
    Ok(groups)
}

pub fn run_reviewer_clustering(
    instance: &ConferenceInstance,
    bids: &BidMatrix,
    params: &ClusteringParams,
    config: &SimilarityConfig,
    seed: u64,
) -> Result<AssignmentOutcome> {
    config.validate()?;
    bids.check_shape(instance)?;
    let groups = cluster_reviewers(instance, params.group_size)?;
    let (m, n) = instance.dim();
    let load = instance.paper_load;
    let base = base_similarity(instance, config);
    let w = config.bid_weight;

    // A paper goes to `load` distinct groups; with fewer groups than that,
    // each group may take several copies for distinct members.
    let copies_per_group = if groups.len() >= load {
        1
    } else {
        load.div_ceil(groups.len())
    };
    let eligible_members: Vec<Vec<Vec<usize>>> = (0..m)
        .map(|p| {
            groups
                .iter()
                .map(|g| g.iter().copied().filter(|&r| !instance.is_conflict(p, r)).collect())
                .collect()
        })
        .collect();
    let group_scores = Array2::from_shape_fn((m, groups.len()), |(p, gi)| {
        let members = &eligible_members[p][gi];
        if members.is_empty() {
            return 0.0;
        }
        let k = members.len() as f64;
        let mean_base = members.iter().map(|&r| base[[p, r]]).sum::<f64>() / k;
        let mean_bid = members.iter().map(|&r| map_bid(bids.get(p, r), config)).sum::<f64>() / k;
        ((1.0 - w) * mean_base + w * mean_bid).clamp(0.0, 1.0)
    });
    let pair_caps = Array2::from_shape_fn((m, groups.len()), |(p, gi)| {
        copies_per_group.min(eligible_members[p][gi].len()) as i64
    });
    let col_caps: Vec<i64> = groups
        .iter()
        .map(|g| (g.len() * instance.reviewer_cap) as i64)
        .collect();
    let (shipped, _) = solve_transport(
        &quantize_matrix(&group_scores),
        &pair_caps,
        &vec![load as i64; m],
        &col_caps,
    );

    let mut scores = Array2::zeros((m, n));
    let mut marginals = Array2::zeros((m, n));
    for gi in 0..groups.len() {
        for p in 0..m {
            let members = &eligible_members[p][gi];
            for &r in members {
                scores[[p, r]] = group_scores[[p, gi]];
                marginals[[p, r]] = shipped[[p, gi]] as f64 / members.len() as f64;
            }
        }
    }

    let mut rng = rng_from_seed(seed);
    let mut pairs = Vec::new();
    for (gi, group) in groups.iter().enumerate() {
        let copies: Vec<(usize, usize)> = (0..m)
            .filter(|&p| shipped[[p, gi]] > 0)
            .map(|p| (p, shipped[[p, gi]] as usize))
            .collect();
        pairs.extend(distribute(instance, group, &copies, &mut rng));
    }
    let assignment = DeterministicAssignment::from_pairs(pairs, load, m);

    let shortfall: BTreeMap<usize, f64> = (0..m)
        .filter_map(|p| {
            let placed: f64 = marginals.row(p).sum();
            (placed + 1e-9 < load as f64).then_some((p, load as f64 - placed))
        })
        .collect();
    let marginals = FractionalAssignment { marginals, shortfall };
    let mut outcome = AssignmentOutcome::deterministic(assignment, scores, 1);
    outcome.diagnostics.expected_objective = Some(marginals.expected(&outcome.scores));
    outcome.diagnostics.groups = Some(groups);
    outcome.marginals = Some(marginals);
    Ok(outcome)
}

/// Deals a group's paper copies to its members: members are shuffled and
/// copies, grouped by paper, go round-robin. Draws that hand a member a
/// conflicted paper are rejected. Every member takes the same share, so the
/// per-paper load never exceeds the capacity the group was given.
fn distribute<R: Rng + ?Sized>(
    instance: &ConferenceInstance,
    members: &[usize],
    copies: &[(usize, usize)],
    rng: &mut R,
) -> Vec<Pair> {
    let slots: Vec<usize> = copies
        .iter()
        .flat_map(|&(p, k)| std::iter::repeat_n(p, k))
        .collect();
    let mut order = members.to_vec();
    for _ in 0..MAX_REDRAWS {
        order.shuffle(rng);
        let pairs: Vec<Pair> = slots
            .iter()
            .enumerate()
            .map(|(i, &p)| Pair::new(p, order[i % order.len()]))
            .collect();
        if pairs.iter().all(|q| !instance.is_conflict(q.paper, q.reviewer)) {
            return pairs;
        }
    }
    distribute_by_matching(instance, members, copies, rng)
}

/// Fallback when conflicts make round-robin dealing too unlikely to succeed:
/// a maximum matching under random priorities.
fn distribute_by_matching<R: Rng + ?Sized>(
    instance: &ConferenceInstance,
    members: &[usize],
    copies: &[(usize, usize)],
    rng: &mut R,
) -> Vec<Pair> {
    let demands: Vec<i64> = copies.iter().map(|&(_, k)| k as i64).collect();
    // The base outweighs any sum of random priorities, so every copy that
    // can be placed is placed.
    const PRIORITIES: i64 = 1000;
    let base = demands.iter().sum::<i64>() * PRIORITIES + 1;
    let weights = Array2::from_shape_fn((copies.len(), members.len()), |_| {
        base + rng.random_range(0..PRIORITIES)
    });
    let caps = Array2::from_shape_fn((copies.len(), members.len()), |(i, j)| {
        i64::from(!instance.is_conflict(copies[i].0, members[j]))
    });
    let member_caps = vec![instance.reviewer_cap as i64; members.len()];
    let (shipped, _) = solve_transport(&weights, &caps, &demands, &member_caps);
    shipped
        .indexed_iter()
        .filter(|(_, &f)| f > 0)
        .map(|((i, j), _)| Pair::new(copies[i].0, members[j]))
        .collect()
}
