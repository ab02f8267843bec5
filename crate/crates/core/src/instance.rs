//! Domain types shared by every module: the conference instance, bids,
//! assignments and display matrices, plus instance validation and
//! eligibility.
//!
//! All matrices are oriented papers × reviewers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A (paper, reviewer) index pair. Ordering is lexicographic by paper then
/// reviewer, which is the tie-breaking order used by every solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub paper: usize,
    pub reviewer: usize,
}

impl Pair {
    pub fn new(paper: usize, reviewer: usize) -> Self {
        Pair { paper, reviewer }
    }
}

/// Ordinal bid levels, plus the absence of a bid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum BidLevel {
    NotWilling,
    InAPinch,
    Willing,
    Eager,
    #[default]
    NoBid,
}

impl BidLevel {
    pub const LEVELS: [BidLevel; 4] = [
        BidLevel::NotWilling,
        BidLevel::InAPinch,
        BidLevel::Willing,
        BidLevel::Eager,
    ];

    /// Position in the order NotWilling < InAPinch < Willing < Eager.
    pub fn rank(self) -> Option<usize> {
        match self {
            BidLevel::NotWilling => Some(0),
            BidLevel::InAPinch => Some(1),
            BidLevel::Willing => Some(2),
            BidLevel::Eager => Some(3),
            BidLevel::NoBid => None,
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, BidLevel::Willing | BidLevel::Eager)
    }

    pub fn is_negative(self) -> bool {
        self == BidLevel::NotWilling
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BidLevel::NotWilling => "Not willing",
            BidLevel::InAPinch => "In a pinch",
            BidLevel::Willing => "Willing",
            BidLevel::Eager => "Eager",
            BidLevel::NoBid => "No bid",
        }
    }
}

impl fmt::Display for BidLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown bid level `{0}`")]
pub struct ParseBidLevelError(pub String);

impl FromStr for BidLevel {
    type Err = ParseBidLevelError;

    /// Case-insensitive; whitespace, `_` and `-` are ignored, so
    /// "Not willing", "not_willing" and "NOTWILLING" all parse. An empty
    /// token is a missing bid.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        match norm.as_str() {
            "notwilling" => Ok(BidLevel::NotWilling),
            "inapinch" => Ok(BidLevel::InAPinch),
            "willing" => Ok(BidLevel::Willing),
            "eager" => Ok(BidLevel::Eager),
            "nobid" | "" => Ok(BidLevel::NoBid),
            _ => Err(ParseBidLevelError(s.to_string())),
        }
    }
}

/// Per (paper, reviewer) bid levels.
#[derive(Clone, Debug, PartialEq)]
pub struct BidMatrix {
    pub levels: Array2<BidLevel>,
}

impl BidMatrix {
    pub fn uniform(n_papers: usize, n_reviewers: usize, level: BidLevel) -> Self {
        BidMatrix {
            levels: Array2::from_elem((n_papers, n_reviewers), level),
        }
    }

    pub fn empty(n_papers: usize, n_reviewers: usize) -> Self {
        Self::uniform(n_papers, n_reviewers, BidLevel::NoBid)
    }

    pub fn dim(&self) -> (usize, usize) {
        self.levels.dim()
    }

    pub fn get(&self, paper: usize, reviewer: usize) -> BidLevel {
        self.levels[[paper, reviewer]]
    }

    pub fn set(&mut self, paper: usize, reviewer: usize, level: BidLevel) {
        self.levels[[paper, reviewer]] = level;
    }

    /// A copy with `reviewer`'s column replaced by missing bids.
    pub fn without_reviewer(&self, reviewer: usize) -> Self {
        let mut out = self.clone();
        out.levels.column_mut(reviewer).fill(BidLevel::NoBid);
        out
    }

    /// Drops bids placed on conflicted pairs.
    pub fn sanitized(&self, instance: &ConferenceInstance) -> Self {
        let mut out = self.clone();
        for pair in &instance.conflicts {
            if pair.paper < out.levels.nrows() && pair.reviewer < out.levels.ncols() {
                out.levels[[pair.paper, pair.reviewer]] = BidLevel::NoBid;
            }
        }
        out
    }

    pub fn check_shape(&self, instance: &ConferenceInstance) -> Result<()> {
        check_dim("bid matrix", instance.dim(), self.dim())
    }
}

pub(crate) fn check_dim(
    what: &'static str,
    expected: (usize, usize),
    actual: (usize, usize),
) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            what,
            expected,
            actual,
        })
    }
}

/// Reviewers, papers and everything known about them before bidding.
#[derive(Clone, Debug, PartialEq)]
pub struct ConferenceInstance {
    pub paper_ids: Vec<String>,
    pub reviewer_ids: Vec<String>,
    pub text_similarity: Array2<f64>,
    pub subject_overlap: Array2<f64>,
    /// Declared region labels.
    pub regions: Vec<String>,
    pub reviewer_region: Vec<String>,
    /// Region of each paper's authors.
    pub paper_region: Vec<String>,
    /// Reviewer authored paper.
    pub authorship: BTreeSet<Pair>,
    /// Ineligible pairs; always contains `authorship`.
    pub conflicts: BTreeSet<Pair>,
    pub paper_load: usize,
    pub reviewer_cap: usize,
}

impl ConferenceInstance {
    /// An instance with zero similarities, a single region and no conflicts.
    pub fn new(n_papers: usize, n_reviewers: usize, paper_load: usize, reviewer_cap: usize) -> Self {
        let region = "global".to_string();
        ConferenceInstance {
            paper_ids: (0..n_papers).map(|p| format!("p{p}")).collect(),
            reviewer_ids: (0..n_reviewers).map(|r| format!("r{r}")).collect(),
            text_similarity: Array2::zeros((n_papers, n_reviewers)),
            subject_overlap: Array2::zeros((n_papers, n_reviewers)),
            regions: vec![region.clone()],
            reviewer_region: vec![region.clone(); n_reviewers],
            paper_region: vec![region; n_papers],
            authorship: BTreeSet::new(),
            conflicts: BTreeSet::new(),
            paper_load,
            reviewer_cap,
        }
    }

    /// Instance whose text similarity and subject overlap both equal `sim`.
    pub fn from_similarity(sim: Array2<f64>, paper_load: usize, reviewer_cap: usize) -> Self {
        let (m, n) = sim.dim();
        let mut inst = Self::new(m, n, paper_load, reviewer_cap);
        inst.subject_overlap = sim.clone();
        inst.text_similarity = sim;
        inst
    }

    pub fn n_papers(&self) -> usize {
        self.paper_ids.len()
    }

    pub fn n_reviewers(&self) -> usize {
        self.reviewer_ids.len()
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.n_papers(), self.n_reviewers())
    }

    pub fn is_conflict(&self, paper: usize, reviewer: usize) -> bool {
        self.conflicts.contains(&Pair::new(paper, reviewer))
    }

    /// Records that `reviewer` authored `paper` (which also declares a conflict).
    pub fn add_author(&mut self, reviewer: usize, paper: usize) {
        let pair = Pair::new(paper, reviewer);
        self.authorship.insert(pair);
        self.conflicts.insert(pair);
    }

    pub fn add_conflict(&mut self, reviewer: usize, paper: usize) {
        self.conflicts.insert(Pair::new(paper, reviewer));
    }

    /// Papers authored by each reviewer.
    pub fn authored_papers(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_reviewers()];
        for pair in &self.authorship {
            if pair.reviewer < out.len() {
                out[pair.reviewer].push(pair.paper);
            }
        }
        out
    }

    /// Reviewer authors of each paper.
    pub fn paper_authors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_papers()];
        for pair in &self.authorship {
            if pair.paper < out.len() {
                out[pair.paper].push(pair.reviewer);
            }
        }
        out
    }

    /// Sets region labels, declaring any new ones.
    pub fn set_regions(&mut self, reviewer_region: Vec<String>, paper_region: Vec<String>) {
        let declared: BTreeSet<String> = reviewer_region
            .iter()
            .chain(paper_region.iter())
            .cloned()
            .collect();
        self.regions = declared.into_iter().collect();
        self.reviewer_region = reviewer_region;
        self.paper_region = paper_region;
    }
}

/// One violated instance invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Finding {
    ShapeMismatch {
        what: &'static str,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    OutOfRange {
        matrix: &'static str,
        paper: usize,
        reviewer: usize,
        value: f64,
    },
    AuthorshipNotConflict(Pair),
    IndexOutOfBounds {
        set: &'static str,
        pair: Pair,
    },
    UndeclaredRegion {
        owner: &'static str,
        index: usize,
        label: String,
    },
    RegionCount {
        owner: &'static str,
        expected: usize,
        actual: usize,
    },
    /// Total demand exceeds total reviewer capacity.
    CapacityShortfall { demand: usize, capacity: usize },
    /// A paper has fewer eligible reviewers than its load.
    TooFewEligible {
        paper: usize,
        eligible: usize,
        load: usize,
    },
    /// Loads cannot all be met simultaneously.
    Unassignable { assignable: usize, demand: usize },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::ShapeMismatch {
                what,
                expected,
                actual,
            } => write!(f, "{what} has shape {actual:?}, expected {expected:?}"),
            Finding::OutOfRange {
                matrix,
                paper,
                reviewer,
                value,
            } => write!(
                f,
                "{matrix}[paper {paper}, reviewer {reviewer}] = {value} is outside [0, 1]"
            ),
            Finding::AuthorshipNotConflict(pair) => write!(
                f,
                "authorship (paper {}, reviewer {}) is not declared as a conflict",
                pair.paper, pair.reviewer
            ),
            Finding::IndexOutOfBounds { set, pair } => write!(
                f,
                "{set} entry (paper {}, reviewer {}) is out of bounds",
                pair.paper, pair.reviewer
            ),
            Finding::UndeclaredRegion {
                owner,
                index,
                label,
            } => write!(f, "{owner} {index} has undeclared region `{label}`"),
            Finding::RegionCount {
                owner,
                expected,
                actual,
            } => write!(f, "{actual} {owner} region labels, expected {expected}"),
            Finding::CapacityShortfall { demand, capacity } => write!(
                f,
                "infeasible loads: demand {demand} > reviewer capacity {capacity}"
            ),
            Finding::TooFewEligible {
                paper,
                eligible,
                load,
            } => write!(
                f,
                "paper {paper} has {eligible} eligible reviewers but needs {load}"
            ),
            Finding::Unassignable { assignable, demand } => write!(
                f,
                "infeasible loads: at most {assignable} of {demand} review slots can be filled"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.findings.is_empty() {
            return writeln!(f, "instance is valid");
        }
        for finding in &self.findings {
            writeln!(f, "- {finding}")?;
        }
        Ok(())
    }
}

/// Lists every violated invariant. An empty report means the instance is
/// well formed and all paper loads can be met.
pub fn validate_instance(instance: &ConferenceInstance) -> ValidationReport {
    let mut findings = Vec::new();
    let dim = instance.dim();
    let (m, n) = dim;

    let mut shapes_ok = true;
    for (what, mat) in [
        ("text_similarity", &instance.text_similarity),
        ("subject_overlap", &instance.subject_overlap),
    ] {
        if mat.dim() != dim {
            shapes_ok = false;
            findings.push(Finding::ShapeMismatch {
                what,
                expected: dim,
                actual: mat.dim(),
            });
            continue;
        }
        for ((p, r), &v) in mat.indexed_iter() {
            if !(0.0..=1.0).contains(&v) {
                findings.push(Finding::OutOfRange {
                    matrix: what,
                    paper: p,
                    reviewer: r,
                    value: v,
                });
            }
        }
    }

    for (set, pairs) in [
        ("authorship", &instance.authorship),
        ("conflicts", &instance.conflicts),
    ] {
        for pair in pairs {
            if pair.paper >= m || pair.reviewer >= n {
                shapes_ok = false;
                findings.push(Finding::IndexOutOfBounds { set, pair: *pair });
            }
        }
    }
    for pair in &instance.authorship {
        if !instance.conflicts.contains(pair) {
            findings.push(Finding::AuthorshipNotConflict(*pair));
        }
    }

    let declared: BTreeSet<&str> = instance.regions.iter().map(String::as_str).collect();
    for (owner, labels, expected) in [
        ("reviewer", &instance.reviewer_region, n),
        ("paper", &instance.paper_region, m),
    ] {
        if labels.len() != expected {
            findings.push(Finding::RegionCount {
                owner,
                expected,
                actual: labels.len(),
            });
        }
        for (index, label) in labels.iter().enumerate() {
            if !declared.contains(label.as_str()) {
                findings.push(Finding::UndeclaredRegion {
                    owner,
                    index,
                    label: label.clone(),
                });
            }
        }
    }

    let demand = m * instance.paper_load;
    let capacity = n * instance.reviewer_cap;
    if demand > capacity {
        findings.push(Finding::CapacityShortfall { demand, capacity });
    }

    if shapes_ok {
        let eligible = eligible_matrix(instance, None);
        for p in 0..m {
            let count = eligible.row(p).iter().filter(|&&e| e).count();
            if count < instance.paper_load {
                findings.push(Finding::TooFewEligible {
                    paper: p,
                    eligible: count,
                    load: instance.paper_load,
                });
            }
        }
        if demand <= capacity && !findings.iter().any(|f| matches!(f, Finding::TooFewEligible { .. })) {
            let assignable = crate::solver::max_assignable(instance, &eligible);
            if assignable < demand {
                findings.push(Finding::Unassignable { assignable, demand });
            }
        }
    }

    ValidationReport { findings }
}

/// Which papers each reviewer was shown during bidding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisplayMatrix {
    pub shown: Array2<bool>,
}

impl DisplayMatrix {
    pub fn full(n_papers: usize, n_reviewers: usize) -> Self {
        DisplayMatrix {
            shown: Array2::from_elem((n_papers, n_reviewers), true),
        }
    }

    /// Papers shown to `reviewer`, ascending.
    pub fn shown_to(&self, reviewer: usize) -> Vec<usize> {
        self.shown
            .column(reviewer)
            .iter()
            .enumerate()
            .filter_map(|(p, &s)| s.then_some(p))
            .collect()
    }

    /// Number of papers displayed per reviewer for display fraction `q`.
    pub fn papers_per_reviewer(q: f64, n_papers: usize) -> usize {
        (q * n_papers as f64).round() as usize
    }
}

/// Pairs that may be assigned: not conflicted and, when a display is
/// given, shown to the reviewer.
pub fn eligible_pairs(
    instance: &ConferenceInstance,
    display: Option<&DisplayMatrix>,
) -> Result<Array2<bool>> {
    if let Some(d) = display {
        check_dim("display matrix", instance.dim(), d.shown.dim())?;
    }
    Ok(eligible_matrix(instance, display))
}

fn eligible_matrix(instance: &ConferenceInstance, display: Option<&DisplayMatrix>) -> Array2<bool> {
    let mut out = match display {
        Some(d) => d.shown.clone(),
        None => Array2::from_elem(instance.dim(), true),
    };
    for pair in &instance.conflicts {
        if let Some(cell) = out.get_mut([pair.paper, pair.reviewer]) {
            *cell = false;
        }
    }
    out
}

/// An integral assignment. `shortfall` maps each under-filled paper to the
/// number of missing reviewers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeterministicAssignment {
    pub pairs: BTreeSet<Pair>,
    pub shortfall: BTreeMap<usize, usize>,
}

impl DeterministicAssignment {
    pub fn from_pairs(pairs: impl IntoIterator<Item = Pair>, paper_load: usize, n_papers: usize) -> Self {
        let pairs: BTreeSet<Pair> = pairs.into_iter().collect();
        let mut counts = vec![0usize; n_papers];
        for p in &pairs {
            counts[p.paper] += 1;
        }
        let shortfall = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c < paper_load)
            .map(|(p, &c)| (p, paper_load - c))
            .collect();
        DeterministicAssignment { pairs, shortfall }
    }

    pub fn contains(&self, paper: usize, reviewer: usize) -> bool {
        self.pairs.contains(&Pair::new(paper, reviewer))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_shortfall(&self) -> usize {
        self.shortfall.values().sum()
    }

    pub fn papers_of(&self, reviewer: usize) -> BTreeSet<usize> {
        self.pairs
            .iter()
            .filter(|p| p.reviewer == reviewer)
            .map(|p| p.paper)
            .collect()
    }

    pub fn reviewers_of(&self, paper: usize) -> Vec<usize> {
        self.pairs
            .range(Pair::new(paper, 0)..Pair::new(paper + 1, 0))
            .map(|p| p.reviewer)
            .collect()
    }

    /// Total of `scores` over assigned pairs.
    pub fn total(&self, scores: &Array2<f64>) -> f64 {
        self.pairs.iter().map(|p| scores[[p.paper, p.reviewer]]).sum()
    }

    pub fn indicator(&self, dim: (usize, usize)) -> Array2<f64> {
        let mut out = Array2::zeros(dim);
        for p in &self.pairs {
            out[[p.paper, p.reviewer]] = 1.0;
        }
        out
    }

    /// Checks loads, caps and eligibility. Returns the first violation.
    pub fn check(&self, instance: &ConferenceInstance, eligible: &Array2<bool>) -> std::result::Result<(), String> {
        let (m, n) = instance.dim();
        let mut per_paper = vec![0usize; m];
        let mut per_reviewer = vec![0usize; n];
        for pair in &self.pairs {
            if pair.paper >= m || pair.reviewer >= n {
                return Err(format!("pair {pair:?} out of bounds"));
            }
            if !eligible[[pair.paper, pair.reviewer]] {
                return Err(format!("ineligible pair {pair:?} assigned"));
            }
            per_paper[pair.paper] += 1;
            per_reviewer[pair.reviewer] += 1;
        }
        for (p, &c) in per_paper.iter().enumerate() {
            let missing = self.shortfall.get(&p).copied().unwrap_or(0);
            if c + missing != instance.paper_load {
                return Err(format!(
                    "paper {p} has {c} reviewers and shortfall {missing}, load is {}",
                    instance.paper_load
                ));
            }
        }
        if let Some((r, &c)) = per_reviewer
            .iter()
            .enumerate()
            .find(|(_, &c)| c > instance.reviewer_cap)
        {
            return Err(format!("reviewer {r} has {c} papers, cap is {}", instance.reviewer_cap));
        }
        Ok(())
    }
}

/// Marginal assignment probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalAssignment {
    pub marginals: Array2<f64>,
    /// Missing probability mass per under-filled paper.
    pub shortfall: BTreeMap<usize, f64>,
}

impl FractionalAssignment {
    pub fn from_assignment(a: &DeterministicAssignment, dim: (usize, usize)) -> Self {
        FractionalAssignment {
            marginals: a.indicator(dim),
            shortfall: a.shortfall.iter().map(|(&p, &c)| (p, c as f64)).collect(),
        }
    }

    pub fn dim(&self) -> (usize, usize) {
        self.marginals.dim()
    }

    pub fn expected(&self, scores: &Array2<f64>) -> f64 {
        (&self.marginals * scores).sum()
    }

    pub fn max_marginal(&self) -> f64 {
        self.marginals.iter().copied().fold(0.0, f64::max)
    }

    pub fn get(&self, paper: usize, reviewer: usize) -> f64 {
        self.marginals[[paper, reviewer]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_by_two() -> ConferenceInstance {
        ConferenceInstance::from_similarity(array![[0.9, 0.1], [0.2, 0.8]], 1, 1)
    }

    #[test]
    fn well_formed_instance_has_empty_report() {
        let report = validate_instance(&two_by_two());
        assert!(report.is_ok(), "{report}");
    }

    #[test]
    fn out_of_range_cell_is_named() {
        let mut inst = two_by_two();
        inst.text_similarity[[1, 0]] = 1.3;
        let report = validate_instance(&inst);
        assert_eq!(
            report.findings,
            vec![Finding::OutOfRange {
                matrix: "text_similarity",
                paper: 1,
                reviewer: 0,
                value: 1.3
            }]
        );
        assert!(report.to_string().contains("reviewer 0"));
    }

    #[test]
    fn counting_infeasibility() {
        let inst = ConferenceInstance::new(3, 1, 2, 3);
        let report = validate_instance(&inst);
        assert!(report
            .findings
            .contains(&Finding::CapacityShortfall { demand: 6, capacity: 3 }));
        assert!(report.to_string().contains("6 > reviewer capacity 3"));
    }

    #[test]
    fn matching_infeasibility_is_detected() {
        // Enough total capacity, but both papers can only use reviewer 0.
        let mut inst = ConferenceInstance::new(2, 2, 1, 1);
        inst.add_conflict(1, 0);
        inst.add_conflict(1, 1);
        let report = validate_instance(&inst);
        assert_eq!(
            report.findings,
            vec![Finding::Unassignable { assignable: 1, demand: 2 }]
        );
    }

    #[test]
    fn authorship_must_be_conflict() {
        let mut inst = two_by_two();
        inst.authorship.insert(Pair::new(0, 1));
        let report = validate_instance(&inst);
        assert_eq!(report.findings, vec![Finding::AuthorshipNotConflict(Pair::new(0, 1))]);
    }

    #[test]
    fn undeclared_region() {
        let mut inst = two_by_two();
        inst.reviewer_region[1] = "mars".into();
        let report = validate_instance(&inst);
        assert!(matches!(report.findings[0], Finding::UndeclaredRegion { index: 1, .. }));
    }

    #[test]
    fn validation_is_idempotent() {
        let mut inst = two_by_two();
        inst.subject_overlap[[0, 0]] = -0.5;
        let before = inst.clone();
        let a = validate_instance(&inst);
        let b = validate_instance(&inst);
        assert_eq!(a, b);
        assert_eq!(inst, before);
    }

    #[test]
    fn eligibility_examples() {
        let mut inst = two_by_two();
        assert!(eligible_pairs(&inst, None).unwrap().iter().all(|&e| e));

        inst.add_conflict(0, 0);
        let e = eligible_pairs(&inst, None).unwrap();
        assert_eq!(e, array![[false, true], [true, true]]);

        let inst = two_by_two();
        let display = DisplayMatrix {
            shown: array![[true, true], [false, true]],
        };
        let e = eligible_pairs(&inst, Some(&display)).unwrap();
        assert!(!e[[1, 0]]);
        assert!(e[[0, 0]] && e[[0, 1]] && e[[1, 1]]);
    }

    #[test]
    fn display_shape_mismatch_is_an_error() {
        let inst = two_by_two();
        let display = DisplayMatrix::full(3, 2);
        assert!(matches!(
            eligible_pairs(&inst, Some(&display)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn bid_level_parsing() {
        assert_eq!("eager".parse::<BidLevel>().unwrap(), BidLevel::Eager);
        assert_eq!("EAGER".parse::<BidLevel>().unwrap(), BidLevel::Eager);
        assert_eq!("Not willing".parse::<BidLevel>().unwrap(), BidLevel::NotWilling);
        assert_eq!("in_a_pinch".parse::<BidLevel>().unwrap(), BidLevel::InAPinch);
        assert_eq!("".parse::<BidLevel>().unwrap(), BidLevel::NoBid);
        assert!("maybe".parse::<BidLevel>().is_err());
        for level in BidLevel::LEVELS {
            assert_eq!(level.as_str().parse::<BidLevel>().unwrap(), level);
        }
    }

    #[test]
    fn sanitizing_drops_conflicted_bids() {
        let mut inst = two_by_two();
        inst.add_author(1, 0);
        let bids = BidMatrix::uniform(2, 2, BidLevel::Eager).sanitized(&inst);
        assert_eq!(bids.get(0, 1), BidLevel::NoBid);
        assert_eq!(bids.get(0, 0), BidLevel::Eager);
    }

    proptest::proptest! {
        #[test]
        fn display_restricts_eligibility(
            bits in proptest::collection::vec(proptest::bool::ANY, 12),
            conflicts in proptest::collection::vec((0usize..3, 0usize..4), 0..5),
        ) {
            let mut inst = ConferenceInstance::new(3, 4, 1, 1);
            for (p, r) in conflicts {
                inst.add_conflict(r, p);
            }
            let display = DisplayMatrix {
                shown: Array2::from_shape_vec((3, 4), bits).unwrap(),
            };
            let with = eligible_pairs(&inst, Some(&display)).unwrap();
            let without = eligible_pairs(&inst, None).unwrap();
            for (a, b) in with.iter().zip(without.iter()) {
                proptest::prop_assert!(!a || *b);
            }
        }
    }
}
