//! Bid manipulation strategies. Attacks only ever rewrite the attackers' own
//! bids; everyone else keeps bidding honestly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::defenses::BidOracle;
use crate::error::{Error, Result};
use crate::instance::{BidLevel, BidMatrix, ConferenceInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackStrategy {
    /// Eager on the target, Not willing on everything else.
    Naive,
    /// Like `Naive`, plus `k - 1` Willing bids on the least similar papers
    /// so the reviewer passes a minimum-positive-bids rule.
    BidLimitEvasion { k: usize },
    /// Eager on the target if it is shown, Not willing on every other shown
    /// paper.
    DisplayConditional,
    /// Reviewers in cycles of `cycle_length`, each pushing for the next
    /// one's paper with naive bids.
    CollusionRing { cycle_length: usize },
}

/// Why the attacker wants the paper. Reported only; both goals mean getting
/// assigned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Boost,
    Torpedo,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackScenario {
    pub attackers: Vec<usize>,
    /// Target paper of each attacker, aligned with `attackers`.
    pub targets: Vec<usize>,
    pub strategy: AttackStrategy,
    #[serde(default)]
    pub objective: Objective,
}

impl AttackScenario {
    pub fn single(attacker: usize, target: usize, strategy: AttackStrategy) -> Self {
        AttackScenario {
            attackers: vec![attacker],
            targets: vec![target],
            strategy,
            objective: Objective::Boost,
        }
    }

    pub fn target_of(&self, attacker: usize) -> Option<usize> {
        let i = self.attackers.iter().position(|&a| a == attacker)?;
        self.targets.get(i).copied()
    }

    /// (attacker, target) pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.attackers.iter().copied().zip(self.targets.iter().copied())
    }

    pub fn validate(&self, instance: &ConferenceInstance) -> Result<()> {
        let (m, n) = instance.dim();
        if self.attackers.len() != self.targets.len() {
            return Err(Error::InvalidScenario(format!(
                "{} attackers but {} targets",
                self.attackers.len(),
                self.targets.len()
            )));
        }
        let distinct: BTreeSet<usize> = self.attackers.iter().copied().collect();
        if distinct.len() != self.attackers.len() {
            return Err(Error::InvalidScenario("attacker ids repeat".into()));
        }
        for (a, t) in self.pairs() {
            if a >= n {
                return Err(Error::InvalidScenario(format!("attacker {a} is not one of {n} reviewers")));
            }
            if t >= m {
                return Err(Error::InvalidScenario(format!("target {t} is not one of {m} papers")));
            }
            let ring = matches!(self.strategy, AttackStrategy::CollusionRing { .. });
            if !ring && instance.is_conflict(t, a) {
                return Err(Error::InvalidScenario(format!(
                    "attacker {a} has a declared conflict with target {t}"
                )));
            }
        }
        Ok(())
    }

    /// Bids as a function of what each reviewer is shown.
    pub fn oracle<'a>(
        &'a self,
        instance: &'a ConferenceInstance,
        honest: &'a BidMatrix,
    ) -> Result<AttackOracle<'a>> {
        self.validate(instance)?;
        honest.check_shape(instance)?;
        let mut willing = BTreeMap::new();
        if let AttackStrategy::BidLimitEvasion { k } = self.strategy {
            for (a, t) in self.pairs() {
                willing.insert(a, evasion_papers(instance, a, t, k)?);
            }
        }
        Ok(AttackOracle {
            scenario: self,
            honest,
            willing,
        })
    }

    /// Bids with every paper shown.
    pub fn apply(&self, instance: &ConferenceInstance, honest: &BidMatrix) -> Result<BidMatrix> {
        Ok(self.oracle(instance, honest)?.full_bids())
    }
}

/// Honest bids for everyone except the scenario's attackers.
pub struct AttackOracle<'a> {
    scenario: &'a AttackScenario,
    honest: &'a BidMatrix,
    /// Decoy papers for bid-limit evasion.
    willing: BTreeMap<usize, BTreeSet<usize>>,
}

impl BidOracle for AttackOracle<'_> {
    fn dim(&self) -> (usize, usize) {
        self.honest.dim()
    }

    fn bids_on(&self, reviewer: usize, displayed: &[usize]) -> Vec<BidLevel> {
        let Some(target) = self.scenario.target_of(reviewer) else {
            return self.honest.bids_on(reviewer, displayed);
        };
        let decoys = self.willing.get(&reviewer);
        displayed
            .iter()
            .map(|&p| {
                if p == target {
                    BidLevel::Eager
                } else if decoys.is_some_and(|d| d.contains(&p)) {
                    BidLevel::Willing
                } else {
                    BidLevel::NotWilling
                }
            })
            .collect()
    }
}

/// Eager on `target`, Not willing on every other paper.
pub fn naive_attack(honest: &BidMatrix, attacker: usize, target: usize) -> BidMatrix {
    let mut bids = honest.clone();
    bids.levels.column_mut(attacker).fill(BidLevel::NotWilling);
    bids.set(target, attacker, BidLevel::Eager);
    bids
}

/// The `k - 1` unconflicted non-target papers least similar to `attacker`,
/// ties broken by paper index.
fn evasion_papers(
    instance: &ConferenceInstance,
    attacker: usize,
    target: usize,
    k: usize,
) -> Result<BTreeSet<usize>> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    let mut candidates: Vec<usize> = (0..instance.n_papers())
        .filter(|&p| p != target && !instance.is_conflict(p, attacker))
        .collect();
    if candidates.len() < k - 1 {
        return Err(Error::InvalidScenario(format!(
            "reviewer {attacker} has {} eligible papers besides the target, {} needed",
            candidates.len(),
            k - 1
        )));
    }
    candidates.sort_by(|&a, &b| {
        instance.text_similarity[[a, attacker]]
            .total_cmp(&instance.text_similarity[[b, attacker]])
            .then(a.cmp(&b))
    });
    Ok(candidates[..k - 1].iter().copied().collect())
}

/// Naive attack padded with `k - 1` Willing bids on the papers least
/// similar to the attacker, which are unlikely to be assigned anyway.
pub fn bid_limit_evasion_attack(
    honest: &BidMatrix,
    attacker: usize,
    target: usize,
    instance: &ConferenceInstance,
    k: usize,
) -> Result<BidMatrix> {
    let decoys = evasion_papers(instance, attacker, target, k)?;
    let mut bids = naive_attack(honest, attacker, target);
    for p in decoys {
        bids.set(p, attacker, BidLevel::Willing);
    }
    Ok(bids)
}

/// Bids on the displayed papers, in display order.
pub fn display_conditional_attack(displayed: &[usize], target: usize) -> Vec<BidLevel> {
    displayed
        .iter()
        .map(|&p| if p == target { BidLevel::Eager } else { BidLevel::NotWilling })
        .collect()
}

/// Splits `reviewers` into consecutive cycles of `cycle_length`; each member
/// targets the lowest-index paper authored by the next member of its cycle.
pub fn build_collusion_ring(
    instance: &ConferenceInstance,
    reviewers: &[usize],
    cycle_length: usize,
) -> Result<AttackScenario> {
    if cycle_length < 2 {
        return Err(Error::param("cycle_length", "a ring needs at least 2 reviewers"));
    }
    if reviewers.is_empty() || !reviewers.len().is_multiple_of(cycle_length) {
        return Err(Error::InvalidScenario(format!(
            "{} reviewers cannot form rings of {cycle_length}",
            reviewers.len()
        )));
    }
    if let Some(&r) = reviewers.iter().find(|&&r| r >= instance.n_reviewers()) {
        return Err(Error::InvalidScenario(format!("reviewer {r} does not exist")));
    }
    let authored = instance.authored_papers();
    let mut targets = Vec::with_capacity(reviewers.len());
    for ring in reviewers.chunks(cycle_length) {
        for i in 0..cycle_length {
            let next = ring[(i + 1) % cycle_length];
            let Some(&paper) = authored[next].first() else {
                return Err(Error::InvalidScenario(format!("reviewer {next} authored no paper")));
            };
            targets.push(paper);
        }
    }
    let scenario = AttackScenario {
        attackers: reviewers.to_vec(),
        targets,
        strategy: AttackStrategy::CollusionRing { cycle_length },
        objective: Objective::Boost,
    };
    scenario.validate(instance)?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn naive_rewrites_only_attacker() {
        let honest = BidMatrix::uniform(4, 3, BidLevel::InAPinch);
        let bids = naive_attack(&honest, 1, 2);
        let col: Vec<BidLevel> = bids.levels.column(1).to_vec();
        assert_eq!(
            col,
            vec![BidLevel::NotWilling, BidLevel::NotWilling, BidLevel::Eager, BidLevel::NotWilling]
        );
        assert_eq!(bids.levels.column(0), honest.levels.column(0));
        assert_eq!(bids.levels.column(2), honest.levels.column(2));
        assert_eq!(naive_attack(&bids, 1, 2), bids);
    }

    #[test]
    fn evasion_picks_least_similar() {
        let inst = ConferenceInstance::from_similarity(array![[0.9], [0.05], [0.1], [0.5]], 1, 4);
        let honest = BidMatrix::empty(4, 1);
        let bids = bid_limit_evasion_attack(&honest, 0, 0, &inst, 3).unwrap();
        let col: Vec<BidLevel> = bids.levels.column(0).to_vec();
        assert_eq!(
            col,
            vec![BidLevel::Eager, BidLevel::Willing, BidLevel::Willing, BidLevel::NotWilling]
        );
        assert_eq!(
            bid_limit_evasion_attack(&honest, 0, 0, &inst, 1).unwrap(),
            naive_attack(&honest, 0, 0)
        );
        assert!(bid_limit_evasion_attack(&honest, 0, 0, &inst, 5).is_err());
    }

    #[test]
    fn evasion_ties_by_index() {
        let inst = ConferenceInstance::from_similarity(array![[0.9], [0.2], [0.2], [0.2]], 1, 4);
        let bids = bid_limit_evasion_attack(&BidMatrix::empty(4, 1), 0, 0, &inst, 3).unwrap();
        assert_eq!(bids.get(1, 0), BidLevel::Willing);
        assert_eq!(bids.get(2, 0), BidLevel::Willing);
        assert_eq!(bids.get(3, 0), BidLevel::NotWilling);
    }

    #[test]
    fn display_conditional() {
        assert_eq!(
            display_conditional_attack(&[0, 3, 5], 3),
            vec![BidLevel::NotWilling, BidLevel::Eager, BidLevel::NotWilling]
        );
        assert_eq!(display_conditional_attack(&[0, 5], 3), vec![BidLevel::NotWilling; 2]);
        assert!(display_conditional_attack(&[], 3).is_empty());
    }

    fn authored_instance(n: usize) -> ConferenceInstance {
        let mut inst = ConferenceInstance::new(n, n, 1, 1);
        for r in 0..n {
            inst.add_author(r, r);
        }
        inst
    }

    #[test]
    fn rings() {
        let inst = authored_instance(4);
        let pair = build_collusion_ring(&inst, &[0, 1], 2).unwrap();
        assert_eq!(pair.targets, vec![1, 0]);
        let two_pairs = build_collusion_ring(&inst, &[0, 1, 2, 3], 2).unwrap();
        assert_eq!(two_pairs.targets, vec![1, 0, 3, 2]);
        let triangle = build_collusion_ring(&inst, &[0, 1, 2], 3).unwrap();
        assert_eq!(triangle.pairs().collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 0)]);
        assert!(build_collusion_ring(&inst, &[0, 1, 2], 2).is_err());
        let no_papers = ConferenceInstance::new(2, 2, 1, 1);
        assert!(build_collusion_ring(&no_papers, &[0, 1], 2).is_err());
    }

    #[test]
    fn oracle_matches_apply_and_restricts_to_display() {
        let inst = authored_instance(4);
        let honest = BidMatrix::uniform(4, 4, BidLevel::Willing).sanitized(&inst);
        let scenario = AttackScenario::single(0, 2, AttackStrategy::Naive);
        let bids = scenario.apply(&inst, &honest).unwrap();
        assert_eq!(bids, naive_attack(&honest, 0, 2));
        let oracle = scenario.oracle(&inst, &honest).unwrap();
        assert_eq!(oracle.bids_on(0, &[1, 3]), vec![BidLevel::NotWilling; 2]);
        assert_eq!(oracle.bids_on(1, &[0, 2]), vec![BidLevel::Willing; 2]);
    }

    #[test]
    fn scenario_validation() {
        let inst = authored_instance(3);
        assert!(AttackScenario::single(0, 0, AttackStrategy::Naive).validate(&inst).is_err());
        assert!(AttackScenario::single(5, 0, AttackStrategy::Naive).validate(&inst).is_err());
        assert!(AttackScenario::single(0, 1, AttackStrategy::Naive).validate(&inst).is_ok());
        let mut mismatched = AttackScenario::single(0, 1, AttackStrategy::Naive);
        mismatched.targets.push(2);
        assert!(mismatched.validate(&inst).is_err());
    }

    #[test]
    fn scenario_toml_round_trip() {
        let s = AttackScenario::single(0, 1, AttackStrategy::BidLimitEvasion { k: 3 });
        let text = toml::to_string(&s).unwrap();
        assert_eq!(toml::from_str::<AttackScenario>(&text).unwrap(), s);
    }
}
