use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{eligible_pairs, BidLevel, BidMatrix, ConferenceInstance};
use crate::similarity::{map_bid, SimilarityConfig};
use crate::solver::solve_max_similarity;

use super::{AssignmentOutcome, BidModelingParams};

/// Linear bid predictor `intercept + text·t + subject·s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidModel {
    /// Intercept, text weight, subject weight.
    pub coefficients: [f64; 3],
    pub observations: usize,
}

impl BidModel {
    pub fn predict(&self, text: f64, subject: f64) -> f64 {
        let [c0, c1, c2] = self.coefficients;
        c0 + c1 * text + c2 * subject
    }
}

/// Ridge regression with an unpenalized intercept. Returns the intercept
/// followed by one slope per feature column.
///
/// Features and targets are centered, so the slopes solve
/// `(XᵀX + λI) β = Xᵀy` on centered data and the intercept absorbs the
/// means. When that system is singular (λ = 0 with collinear or constant
/// features) the minimum-norm slopes are returned.
pub fn fit_ridge(features: &Array2<f64>, targets: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let (rows, k) = features.dim();
    if rows != targets.len() {
        return Err(Error::param(
            "targets",
            format!("{} targets for {rows} feature rows", targets.len()),
        ));
    }
    if rows == 0 {
        return Err(Error::NoObservedBids);
    }
    let x_mean: Vec<f64> = (0..k).map(|j| features.column(j).sum() / rows as f64).collect();
    let y_mean = targets.iter().sum::<f64>() / rows as f64;
    let x = DMatrix::from_fn(rows, k, |i, j| features[[i, j]] - x_mean[j]);
    let y = DVector::from_iterator(rows, targets.iter().map(|t| t - y_mean));
    let gram = x.transpose() * &x + DMatrix::identity(k, k) * lambda;
    let rhs = x.transpose() * y;
    let svd = gram.svd(true, true);
    let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = 1e-12 * largest.max(1.0);
    let beta = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::param("features", e.to_string()))?;
    let intercept = y_mean - beta.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(std::iter::once(intercept).chain(beta.iter().copied()).collect())
}

/// Fits bid values on (text similarity, subject overlap) over every pair
/// with an observed bid.
pub fn fit_bid_model(
    instance: &ConferenceInstance,
    bids: &BidMatrix,
    params: &BidModelingParams,
    config: &SimilarityConfig,
) -> Result<BidModel> {
    bids.check_shape(instance)?;
    let observed: Vec<(usize, usize)> = bids
        .levels
        .indexed_iter()
        .filter(|(_, &l)| l != BidLevel::NoBid)
        .map(|(ix, _)| ix)
        .collect();
    if observed.is_empty() {
        return Err(Error::NoObservedBids);
    }
    let features = Array2::from_shape_fn((observed.len(), 2), |(i, j)| {
        let ix = observed[i];
        if j == 0 {
            instance.text_similarity[ix]
        } else {
            instance.subject_overlap[ix]
        }
    });
    let targets: Vec<f64> = observed.iter().map(|&ix| map_bid(bids.levels[ix], config)).collect();
    let c = fit_ridge(&features, &targets, params.ridge_lambda)?;
    Ok(BidModel {
        coefficients: [c[0], c[1], c[2]],
        observations: observed.len(),
    })
}

/// Assignment maximizing total predicted bid value. A reviewer's own bids
/// matter only through their share of the global fit.
pub fn run_bid_modeling(
    instance: &ConferenceInstance,
    bids: &BidMatrix,
    params: &BidModelingParams,
    config: &SimilarityConfig,
) -> Result<AssignmentOutcome> {
    let model = fit_bid_model(instance, bids, params, config)?;
    let mut scores = Array2::from_shape_fn(instance.dim(), |ix| {
        model
            .predict(instance.text_similarity[ix], instance.subject_overlap[ix])
            .clamp(0.0, 1.0)
    });
    for pair in &instance.conflicts {
        scores[[pair.paper, pair.reviewer]] = 0.0;
    }
    let assignment = solve_max_similarity(&scores, instance, &eligible_pairs(instance, None)?)?;
    let mut outcome = AssignmentOutcome::deterministic(assignment, scores, 1);
    outcome.diagnostics.model = Some(model);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn noiseless_recovery() {
        let text = [0.1, 0.4, 0.7, 0.9, 0.3];
        let subject = [0.5, 0.2, 0.9, 0.1, 0.6];
        let features = Array2::from_shape_fn((5, 2), |(i, j)| if j == 0 { text[i] } else { subject[i] });
        let targets: Vec<f64> = text.iter().map(|t| 0.2 + 0.5 * t).collect();
        let c = fit_ridge(&features, &targets, 0.0).unwrap();
        assert_abs_diff_eq!(c[0], 0.2, epsilon = 1e-6);
        assert_abs_diff_eq!(c[1], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(c[2], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn constant_targets_have_zero_slopes() {
        let features = array![[0.1, 0.5], [0.4, 0.2], [0.8, 0.9]];
        for lambda in [0.0, 0.5, 10.0] {
            let c = fit_ridge(&features, &[0.6, 0.6, 0.6], lambda).unwrap();
            assert_abs_diff_eq!(c[0], 0.6, epsilon = 1e-12);
            assert_eq!(&c[1..], &[0.0, 0.0]);
        }
    }

    #[test]
    fn single_observation_minimum_norm() {
        let c = fit_ridge(&array![[0.3, 0.7]], &[0.9], 0.0).unwrap();
        assert_eq!(c, vec![0.9, 0.0, 0.0]);
    }

    #[test]
    fn ridge_shrinks_slopes() {
        let features = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let targets = [0.0, 1.0, 0.0, 1.0];
        let plain = fit_ridge(&features, &targets, 0.0).unwrap();
        let shrunk = fit_ridge(&features, &targets, 1.0).unwrap();
        assert_abs_diff_eq!(plain[1], 1.0, epsilon = 1e-12);
        // centered text column has squared norm 1, so the slope is 1 / (1 + 1)
        assert_abs_diff_eq!(shrunk[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn no_observed_bids() {
        let inst = ConferenceInstance::new(2, 2, 1, 1);
        let err = fit_bid_model(
            &inst,
            &BidMatrix::empty(2, 2),
            &BidModelingParams { ridge_lambda: 0.0 },
            &SimilarityConfig::default(),
        );
        assert_eq!(err, Err(Error::NoObservedBids));
    }
}
