use serde::{Deserialize, Serialize};

use super::matrix::SampleMatrix;
use crate::error::{Error, Result};

/// Per-feature minimum and maximum learned from training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub features: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_minmax(train: &SampleMatrix) -> Result<ScalerParams> {
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (min, max) = train
        .values()
        .columns()
        .into_iter()
        .map(|col| {
            col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
        })
        .unzip();
    Ok(ScalerParams {
        features: train.feature_names().to_vec(),
        min,
        max,
    })
}

/// `x' = (x - min) / (max - min)`, or 0 for a constant training column.
/// Values outside the training range are not clipped.
pub fn apply_minmax(params: &ScalerParams, m: &SampleMatrix) -> Result<SampleMatrix> {
    if params.features != m.feature_names() {
        return Err(Error::FeatureMismatch);
    }
    let mut values = m.values().clone();
    for (j, mut col) in values.columns_mut().into_iter().enumerate() {
        let (lo, hi) = (params.min[j], params.max[j]);
        let span = hi - lo;
        if span > 0.0 {
            col.mapv_inplace(|x| (x - lo) / span);
        } else {
            col.fill(0.0);
        }
    }
    Ok(m.with_values(values))
}
