//! Blends text similarity, subject overlap and bids into the similarity
//! matrix consumed by the solvers.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{check_dim, BidLevel, BidMatrix, ConferenceInstance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    /// Weight of the bid component against the text/subject base.
    pub bid_weight: f64,
    /// Values of NotWilling, InAPinch, Willing, Eager.
    pub bid_values: [f64; 4],
    pub no_bid_value: f64,
    /// Weight of subject overlap inside the base score.
    pub text_subject_mix: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            bid_weight: 0.5,
            bid_values: [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
            no_bid_value: 1.0 / 3.0,
            text_subject_mix: 0.5,
        }
    }
}

impl SimilarityConfig {
    pub fn with_bid_weight(mut self, bid_weight: f64) -> Self {
        self.bid_weight = bid_weight;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &'static str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} is outside [0, 1]")))
            }
        };
        unit("bid_weight", self.bid_weight)?;
        unit("text_subject_mix", self.text_subject_mix)?;
        unit("no_bid_value", self.no_bid_value)?;
        for &v in &self.bid_values {
            unit("bid_values", v)?;
        }
        if self.bid_values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::param(
                "bid_values",
                "must be nondecreasing from Not willing to Eager",
            ));
        }
        Ok(())
    }
}

pub fn map_bid(level: BidLevel, config: &SimilarityConfig) -> f64 {
    match level.rank() {
        Some(i) => config.bid_values[i],
        None => config.no_bid_value,
    }
}

/// The bid-free part of the similarity.
pub fn base_similarity(instance: &ConferenceInstance, config: &SimilarityConfig) -> Array2<f64> {
    let mix = config.text_subject_mix;
    let mut base = &instance.text_similarity * (1.0 - mix) + &instance.subject_overlap * mix;
    zero_conflicts(instance, &mut base);
    base
}

pub fn compute_similarity(
    instance: &ConferenceInstance,
    bids: &BidMatrix,
    config: &SimilarityConfig,
) -> Result<Array2<f64>> {
    let weights = vec![config.bid_weight; instance.n_reviewers()];
    compute_similarity_weighted(instance, bids, config, &weights)
}

/// Like [`compute_similarity`] but with a bid weight per reviewer.
pub fn compute_similarity_weighted(
    instance: &ConferenceInstance,
    bids: &BidMatrix,
    config: &SimilarityConfig,
    bid_weights: &[f64],
) -> Result<Array2<f64>> {
    config.validate()?;
    check_dim("text_similarity", instance.dim(), instance.text_similarity.dim())?;
    check_dim("subject_overlap", instance.dim(), instance.subject_overlap.dim())?;
    bids.check_shape(instance)?;
    if bid_weights.len() != instance.n_reviewers() {
        return Err(Error::param(
            "bid_weights",
            format!("{} weights for {} reviewers", bid_weights.len(), instance.n_reviewers()),
        ));
    }
    let mix = config.text_subject_mix;
    let mut s = Array2::from_shape_fn(instance.dim(), |(p, r)| {
        let base = (1.0 - mix) * instance.text_similarity[[p, r]]
            + mix * instance.subject_overlap[[p, r]];
        let w = bid_weights[r];
        ((1.0 - w) * base + w * map_bid(bids.get(p, r), config)).clamp(0.0, 1.0)
    });
    zero_conflicts(instance, &mut s);
    Ok(s)
}

fn zero_conflicts(instance: &ConferenceInstance, s: &mut Array2<f64>) {
    for pair in &instance.conflicts {
        if let Some(v) = s.get_mut([pair.paper, pair.reviewer]) {
            *v = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn default_bid_map() {
        let c = SimilarityConfig::default();
        assert_eq!(map_bid(BidLevel::Eager, &c), 1.0);
        assert_eq!(map_bid(BidLevel::NotWilling, &c), 0.0);
        assert_eq!(map_bid(BidLevel::Willing, &c), 2.0 / 3.0);
        assert_eq!(map_bid(BidLevel::NoBid, &c), 1.0 / 3.0);
    }

    #[test]
    fn blend_arithmetic() {
        let mut inst = ConferenceInstance::new(1, 1, 1, 1);
        inst.text_similarity[[0, 0]] = 0.9;
        inst.subject_overlap[[0, 0]] = 0.9;
        let bids = BidMatrix::uniform(1, 1, BidLevel::Eager);
        let s = compute_similarity(&inst, &bids, &SimilarityConfig::default()).unwrap();
        assert_abs_diff_eq!(s[[0, 0]], 0.95, epsilon = 1e-12);
    }

    #[test]
    fn zero_bid_weight_ignores_bids() {
        let mut inst = ConferenceInstance::new(2, 2, 1, 1);
        inst.text_similarity = ndarray::array![[0.2, 0.4], [0.6, 0.8]];
        inst.subject_overlap = ndarray::array![[0.0, 1.0], [0.5, 0.5]];
        let cfg = SimilarityConfig::default().with_bid_weight(0.0);
        let a = compute_similarity(&inst, &BidMatrix::uniform(2, 2, BidLevel::Eager), &cfg).unwrap();
        let b = compute_similarity(&inst, &BidMatrix::empty(2, 2), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, base_similarity(&inst, &cfg));
    }

    #[test]
    fn full_bid_weight_not_willing_is_zero() {
        let mut inst = ConferenceInstance::from_similarity(ndarray::array![[0.7, 0.3], [0.5, 0.9]], 1, 1);
        inst.add_conflict(1, 1);
        let cfg = SimilarityConfig::default().with_bid_weight(1.0);
        let s = compute_similarity(&inst, &BidMatrix::uniform(2, 2, BidLevel::NotWilling), &cfg).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conflicts_are_zeroed() {
        let mut inst = ConferenceInstance::from_similarity(ndarray::array![[0.7, 0.3]], 1, 1);
        inst.add_conflict(0, 0);
        let s = compute_similarity(&inst, &BidMatrix::uniform(1, 2, BidLevel::Eager), &SimilarityConfig::default())
            .unwrap();
        assert_eq!(s[[0, 0]], 0.0);
        assert!(s[[0, 1]] > 0.0);
    }

    #[test]
    fn rejects_bad_config_and_shapes() {
        let inst = ConferenceInstance::new(2, 2, 1, 1);
        let cfg = SimilarityConfig {
            bid_values: [0.5, 0.2, 0.7, 1.0],
            ..Default::default()
        };
        assert!(compute_similarity(&inst, &BidMatrix::empty(2, 2), &cfg).is_err());
        let cfg = SimilarityConfig::default().with_bid_weight(1.5);
        assert!(cfg.validate().is_err());
        assert!(matches!(
            compute_similarity(&inst, &BidMatrix::empty(3, 2), &SimilarityConfig::default()),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    fn level() -> impl Strategy<Value = BidLevel> {
        prop_oneof![
            Just(BidLevel::NotWilling),
            Just(BidLevel::InAPinch),
            Just(BidLevel::Willing),
            Just(BidLevel::Eager),
            Just(BidLevel::NoBid),
        ]
    }

    proptest! {
        #[test]
        fn similarity_is_bounded_and_monotone(
            text in 0.0f64..=1.0,
            subject in 0.0f64..=1.0,
            weight in 0.0f64..=1.0,
            mix in 0.0f64..=1.0,
            lo in 0usize..4,
            hi in 0usize..4,
            other in level(),
        ) {
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            let mut inst = ConferenceInstance::new(1, 2, 1, 1);
            inst.text_similarity.fill(text);
            inst.subject_overlap.fill(subject);
            let cfg = SimilarityConfig { bid_weight: weight, text_subject_mix: mix, ..Default::default() };
            let mut bids = BidMatrix::uniform(1, 2, other);
            bids.set(0, 0, BidLevel::LEVELS[lo]);
            let s_lo = compute_similarity(&inst, &bids, &cfg).unwrap();
            bids.set(0, 0, BidLevel::LEVELS[hi]);
            let s_hi = compute_similarity(&inst, &bids, &cfg).unwrap();
            prop_assert!(s_lo.iter().chain(s_hi.iter()).all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(s_hi[[0, 0]] >= s_lo[[0, 0]]);
            prop_assert_eq!(s_lo[[0, 1]], s_hi[[0, 1]]);
        }
    }
}
