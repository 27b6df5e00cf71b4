//! Base learners. Each one turns a feature matrix into an `n × 10`
//! probability-score matrix.

mod booster;
mod forest;
mod scores;

pub use booster::{
    fit_gradient_booster, fit_gradient_booster_traced, softmax, softmax_cross_entropy,
    softmax_gradient, BoosterModel, BoosterParams, RegressionTree,
};
pub use forest::{
    balanced_sample, fit_balanced_bagging, fit_random_forest, BalancedBaggingParams, ForestKind,
    ForestModel, RandomForestParams,
};
pub use scores::ProbabilityScoreMatrix;

use ndarray::ArrayView2;

use crate::data::SampleMatrix;
use crate::error::{Error, Result};

/// A fitted model that scores rows against every class.
pub trait ScoreModel {
    fn n_features(&self) -> usize;

    fn predict_proba_values(&self, x: ArrayView2<'_, f64>) -> Result<ProbabilityScoreMatrix>;
}

pub fn predict_proba(model: &impl ScoreModel, m: &SampleMatrix) -> Result<ProbabilityScoreMatrix> {
    model.predict_proba_values(m.values().view())
}

pub(crate) fn check_arity(expected: usize, x: &ArrayView2<'_, f64>) -> Result<()> {
    if x.ncols() != expected {
        return Err(Error::ArityMismatch {
            expected,
            found: x.ncols(),
        });
    }
    Ok(())
}

/// Independent per-unit seed derived from a model seed (SplitMix64 finaliser).
pub(crate) fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
