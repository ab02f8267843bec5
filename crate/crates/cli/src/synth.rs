//! Synthetic conferences from a latent topic model.
//!
//! Reviewers and papers draw topic mixtures from a symmetric Dirichlet.
//! Text similarity is the dot product of the unit-normalized mixtures plus
//! Gaussian noise. Subject areas belong to topics and are drawn in
//! proportion to an entity's topic weights; subject overlap is the Jaccard
//! index of the two subject sets. Honest bids are noisy text similarities
//! cut into the four bid levels.

use std::collections::BTreeSet;

use bidguard_core::instance::{BidLevel, BidMatrix, ConferenceInstance};
use bidguard_core::rng::rng_from_seed;
use bidguard_core::validate_instance;
use ndarray::Array2;
use rand::seq::index::sample_weighted;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_reviewers: usize,
    pub n_papers: usize,
    pub paper_load: usize,
    /// Defaults to the smallest cap giving 1.5 times the review demand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reviewer_cap: Option<usize>,
    #[serde(default = "one")]
    pub n_regions: usize,
    /// Relative region frequencies; empty means uniform.
    #[serde(default)]
    pub region_weights: Vec<f64>,
    #[serde(default = "defaults::topics")]
    pub n_topics: usize,
    /// Dirichlet concentration of topic mixtures; small values give
    /// specialists.
    #[serde(default = "defaults::concentration")]
    pub topic_concentration: f64,
    #[serde(default = "defaults::subjects")]
    pub n_subjects: usize,
    #[serde(default = "defaults::subjects_per_entity")]
    pub subjects_per_entity: usize,
    /// Standard deviation of the noise on text similarity.
    #[serde(default = "defaults::text_noise")]
    pub text_noise: f64,
    /// Fraction of papers each reviewer bids on.
    #[serde(default = "defaults::bid_rate")]
    pub bid_rate: f64,
    #[serde(default = "defaults::bid_noise")]
    pub bid_noise: f64,
    /// Cut points between Not willing, In a pinch, Willing and Eager.
    #[serde(default = "defaults::thresholds")]
    pub bid_thresholds: [f64; 3],
    /// Probability that a paper has an author among the reviewers.
    #[serde(default = "defaults::authorship")]
    pub authorship_density: f64,
    /// Probability of an extra declared conflict per pair.
    #[serde(default)]
    pub conflict_density: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn one() -> usize {
    1
}

mod defaults {
    pub fn topics() -> usize {
        10
    }
    pub fn concentration() -> f64 {
        0.3
    }
    pub fn subjects() -> usize {
        20
    }
    pub fn subjects_per_entity() -> usize {
        3
    }
    pub fn text_noise() -> f64 {
        0.05
    }
    pub fn bid_rate() -> f64 {
        0.1
    }
    pub fn bid_noise() -> f64 {
        0.1
    }
    pub fn thresholds() -> [f64; 3] {
        [0.25, 0.5, 0.75]
    }
    pub fn authorship() -> f64 {
        0.3
    }
}

impl SyntheticSpec {
    pub fn new(n_papers: usize, n_reviewers: usize, paper_load: usize) -> Self {
        SyntheticSpec {
            n_reviewers,
            n_papers,
            paper_load,
            reviewer_cap: None,
            n_regions: 1,
            region_weights: Vec::new(),
            n_topics: defaults::topics(),
            topic_concentration: defaults::concentration(),
            n_subjects: defaults::subjects(),
            subjects_per_entity: defaults::subjects_per_entity(),
            text_noise: defaults::text_noise(),
            bid_rate: defaults::bid_rate(),
            bid_noise: defaults::bid_noise(),
            bid_thresholds: defaults::thresholds(),
            authorship_density: defaults::authorship(),
            conflict_density: 0.0,
            seed: None,
        }
    }

    pub fn reviewer_cap(&self) -> usize {
        self.reviewer_cap.unwrap_or_else(|| {
            let demand = 3 * self.n_papers * self.paper_load;
            demand.div_ceil(2 * self.n_reviewers.max(1)).max(1)
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CliError::Config(format!("synthetic instance: {msg}")));
        if self.n_reviewers == 0 || self.n_papers == 0 {
            return fail("needs at least one reviewer and one paper".into());
        }
        if self.paper_load == 0 || self.paper_load > self.n_reviewers {
            return fail(format!(
                "paper_load {} must be between 1 and the {} reviewers",
                self.paper_load, self.n_reviewers
            ));
        }
        if self.reviewer_cap() * self.n_reviewers < self.n_papers * self.paper_load {
            return fail(format!(
                "reviewer_cap {} cannot cover {} review slots",
                self.reviewer_cap(),
                self.n_papers * self.paper_load
            ));
        }
        if self.n_regions == 0 || self.n_topics == 0 {
            return fail("needs at least one region and one topic".into());
        }
        if !self.region_weights.is_empty()
            && (self.region_weights.len() != self.n_regions
                || self.region_weights.iter().any(|&w| !(w >= 0.0 && w.is_finite()))
                || self.region_weights.iter().sum::<f64>() <= 0.0)
        {
            return fail("region_weights must be n_regions nonnegative weights with a positive sum".into());
        }
        if self.subjects_per_entity > self.n_subjects {
            return fail("subjects_per_entity exceeds n_subjects".into());
        }
        if !(self.topic_concentration > 0.0 && self.topic_concentration.is_finite()) {
            return fail("topic_concentration must be positive".into());
        }
        for (name, v) in [("text_noise", self.text_noise), ("bid_noise", self.bid_noise)] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be nonnegative"));
            }
        }
        for (name, v) in [
            ("bid_rate", self.bid_rate),
            ("authorship_density", self.authorship_density),
            ("conflict_density", self.conflict_density),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must lie in [0, 1]"));
            }
        }
        let t = self.bid_thresholds;
        if !(t[0] <= t[1] && t[1] <= t[2]) {
            return fail("bid_thresholds must be nondecreasing".into());
        }
        Ok(())
    }
}

fn topic_mixture<R: Rng>(rng: &mut R, gamma: &Gamma<f64>, topics: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..topics).map(|_| gamma.sample(rng)).collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        raw.iter().map(|x| x / norm).collect()
    } else {
        vec![1.0 / (topics as f64).sqrt(); topics]
    }
}

/// Subject `s` belongs to topic `s % n_topics`.
fn subjects<R: Rng>(rng: &mut R, mixture: &[f64], spec: &SyntheticSpec) -> BTreeSet<usize> {
    let weight = |s: usize| mixture[s % spec.n_topics] + 1e-9;
    sample_weighted(rng, spec.n_subjects, weight, spec.subjects_per_entity)
        .expect("weights are positive and the amount was validated")
        .into_iter()
        .collect()
}

fn jaccard(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

fn pick_region<R: Rng>(rng: &mut R, spec: &SyntheticSpec) -> String {
    let index = if spec.region_weights.is_empty() {
        rng.random_range(0..spec.n_regions)
    } else {
        let total: f64 = spec.region_weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        spec.region_weights
            .iter()
            .position(|&w| {
                u -= w;
                u < 0.0
            })
            .unwrap_or(spec.n_regions - 1)
    };
    format!("region-{index}")
}

fn bid_level(value: f64, thresholds: &[f64; 3]) -> BidLevel {
    let rank = thresholds.iter().filter(|&&t| value >= t).count();
    BidLevel::LEVELS[rank]
}

/// Draws an instance and honest bids. Deterministic in `spec.seed`.
pub fn generate_instance(spec: &SyntheticSpec) -> Result<(ConferenceInstance, BidMatrix)> {
    spec.validate()?;
    let (m, n) = (spec.n_papers, spec.n_reviewers);
    let mut rng = rng_from_seed(spec.seed.unwrap_or_default());
    let gamma = Gamma::new(spec.topic_concentration, 1.0).expect("concentration was validated");

    let reviewer_topics: Vec<Vec<f64>> = (0..n).map(|_| topic_mixture(&mut rng, &gamma, spec.n_topics)).collect();
    let paper_topics: Vec<Vec<f64>> = (0..m).map(|_| topic_mixture(&mut rng, &gamma, spec.n_topics)).collect();
    let reviewer_subjects: Vec<_> = reviewer_topics.iter().map(|t| subjects(&mut rng, t, spec)).collect();
    let paper_subjects: Vec<_> = paper_topics.iter().map(|t| subjects(&mut rng, t, spec)).collect();

    let mut text = Array2::from_shape_fn((m, n), |(p, r)| {
        paper_topics[p].iter().zip(&reviewer_topics[r]).map(|(a, b)| a * b).sum::<f64>()
    });
    if spec.text_noise > 0.0 {
        let noise = Normal::new(0.0, spec.text_noise).expect("noise was validated");
        text.mapv_inplace(|v| (v + noise.sample(&mut rng)).clamp(0.0, 1.0));
    }
    let subject = Array2::from_shape_fn((m, n), |(p, r)| jaccard(&paper_subjects[p], &reviewer_subjects[r]));

    let mut instance = ConferenceInstance::new(m, n, spec.paper_load, spec.reviewer_cap());
    instance.text_similarity = text;
    instance.subject_overlap = subject;

    let reviewer_region: Vec<String> = (0..n).map(|_| pick_region(&mut rng, spec)).collect();
    let mut paper_region = Vec::with_capacity(m);
    for p in 0..m {
        if rng.random_bool(spec.authorship_density) {
            let author = rng.random_range(0..n);
            instance.add_author(author, p);
            paper_region.push(reviewer_region[author].clone());
        } else {
            paper_region.push(pick_region(&mut rng, spec));
        }
    }
    instance.set_regions(reviewer_region, paper_region);
    instance.regions = (0..spec.n_regions).map(|i| format!("region-{i}")).collect();
    if spec.conflict_density > 0.0 {
        for p in 0..m {
            for r in 0..n {
                if rng.random_bool(spec.conflict_density) {
                    instance.add_conflict(r, p);
                }
            }
        }
    }

    let mut bids = BidMatrix::empty(m, n);
    let bid_noise = Normal::new(0.0, spec.bid_noise).expect("noise was validated");
    for r in 0..n {
        for p in 0..m {
            if instance.is_conflict(p, r) || !rng.random_bool(spec.bid_rate) {
                continue;
            }
            let value = instance.text_similarity[[p, r]] + bid_noise.sample(&mut rng);
            bids.set(p, r, bid_level(value, &spec.bid_thresholds));
        }
    }

    let report = validate_instance(&instance);
    if !report.is_ok() {
        return Err(CliError::InvalidInstance(format!(
            "generated instance is infeasible; lower conflict_density or raise reviewer_cap\n{report}"
        )));
    }
    Ok((instance, bids))
}
