//! Greedy sequential forward feature selection.

use serde::{Deserialize, Serialize};

use super::matrix::SampleMatrix;
use super::split::stratified_split;
use super::subset::FeatureSubset;
use crate::ensemble::{fit_random_forest, predict_proba, RandomForestParams};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, View};
use crate::overlap::ConfusionMatrix;

/// Scores a candidate set of column indices of `m`; higher is better.
pub trait SubsetScorer {
    fn score(&self, m: &SampleMatrix, features: &[usize]) -> Result<f64>;
}

impl<F> SubsetScorer for F
where
    F: Fn(&SampleMatrix, &[usize]) -> Result<f64>,
{
    fn score(&self, m: &SampleMatrix, features: &[usize]) -> Result<f64> {
        self(m, features)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub added: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Shortest prefix of the greedy order reaching the best score.
    pub subset: FeatureSubset,
    /// One entry per greedy step, in order.
    pub trace: Vec<SelectionStep>,
}

/// Adds, one at a time, the feature whose inclusion scores best (lowest
/// column index on ties) until `max_k` features are chosen.
pub fn sfs_forward_select(
    scorer: &impl SubsetScorer,
    m: &SampleMatrix,
    max_k: usize,
) -> Result<SelectionResult> {
    let d = m.n_features();
    if max_k == 0 || max_k > d {
        return Err(Error::InvalidParameter(format!("max_k {max_k} not in 1..={d}")));
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(max_k);
    let mut trace = Vec::with_capacity(max_k);
    while chosen.len() < max_k {
        let mut best: Option<(usize, f64)> = None;
        for f in (0..d).filter(|f| !chosen.contains(f)) {
            let mut candidate = chosen.clone();
            candidate.push(f);
            let s = scorer.score(m, &candidate)?;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((f, s));
            }
        }
        let (f, score) = best.expect("at least one unchosen feature");
        chosen.push(f);
        trace.push(SelectionStep {
            added: m.feature_names()[f].clone(),
            score,
        });
    }
    let mut best_len = 1;
    for (i, step) in trace.iter().enumerate() {
        if step.score > trace[best_len - 1].score {
            best_len = i + 1;
        }
    }
    let names = chosen[..best_len]
        .iter()
        .map(|&f| m.feature_names()[f].clone())
        .collect();
    Ok(SelectionResult {
        subset: FeatureSubset::new(names)?,
        trace,
    })
}

/// Fits a random forest on a seeded stratified 75% part and returns the
/// macro F-measure on the remaining 25%.
#[derive(Debug, Clone)]
pub struct HoldoutF1Scorer {
    pub forest: RandomForestParams,
    pub train_fraction: f64,
    pub seed: u64,
}

impl HoldoutF1Scorer {
    pub fn new(forest: RandomForestParams, seed: u64) -> Self {
        Self {
            forest,
            train_fraction: 0.75,
            seed,
        }
    }
}

impl SubsetScorer for HoldoutF1Scorer {
    fn score(&self, m: &SampleMatrix, features: &[usize]) -> Result<f64> {
        let (train, held) = stratified_split(&m.select_columns(features), self.train_fraction, self.seed)?;
        if held.is_empty() {
            return Err(Error::EmptyInput);
        }
        let model = fit_random_forest(&train, &self.forest)?;
        let predicted = predict_proba(&model, &held)?.predicted_labels();
        let cm = ConfusionMatrix::from_labels(held.labels(), &predicted, crate::classes::NUM_CLASSES)?;
        Ok(compute_metrics(&cm, View::Multiclass)?.macro_f1())
    }
}
