use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_arity, derive_seed, ProbabilityScoreMatrix, ScoreModel};
use crate::classes::NUM_CLASSES;
use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::tree::{fit_tree_on_rows, ClassCounts, SplitCriterion, TrainedTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForestKind {
    RandomForest,
    BalancedBagging,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomForestParams {
    pub n_trees: usize,
    pub criterion: SplitCriterion,
    pub bootstrap: bool,
    /// Features examined per node; `None` means ⌈√d⌉.
    pub feature_subsample: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for RandomForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            criterion: SplitCriterion::Hellinger,
            bootstrap: true,
            feature_subsample: None,
            max_depth: None,
            min_samples_leaf: 1,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalancedBaggingParams {
    pub n_estimators: usize,
    pub criterion: SplitCriterion,
    /// Records kept per class; `None` means the smallest class count.
    pub target_per_class: Option<usize>,
    /// Features examined per node; `None` means all of them.
    pub feature_subsample: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for BalancedBaggingParams {
    fn default() -> Self {
        Self {
            n_estimators: 50,
            criterion: SplitCriterion::GiniGain,
            target_per_class: None,
            feature_subsample: None,
            max_depth: None,
            min_samples_leaf: 1,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

/// Bagged classification trees whose probability is the mean of the trees'
/// leaf class proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub kind: ForestKind,
    pub criterion: SplitCriterion,
    pub trees: Vec<TrainedTree>,
    pub seed: u64,
    /// Per-estimator class counts of the training sample (balanced bagging).
    pub sample_class_counts: Vec<ClassCounts>,
}

fn tree_params(
    max_depth: Option<usize>,
    min_samples_leaf: usize,
    min_samples_split: usize,
    feature_subsample: usize,
    seed: u64,
) -> TreeParams {
    TreeParams {
        max_depth,
        min_samples_leaf,
        min_samples_split,
        feature_subsample: Some(feature_subsample),
        seed,
    }
}

pub fn fit_random_forest(data: &SampleMatrix, params: &RandomForestParams) -> Result<ForestModel> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be ≥ 1".into()));
    }
    let d = data.n_features();
    let k = params
        .feature_subsample
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d);
    let n = data.n_samples();
    let x = data.values().view();
    let y = data.labels();

    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(params.seed, t as u64);
            let rows = if params.bootstrap {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let tp = tree_params(
                params.max_depth,
                params.min_samples_leaf,
                params.min_samples_split,
                k,
                derive_seed(seed, u64::MAX),
            );
            fit_tree_on_rows(x, y, rows, &tp, params.criterion)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ForestModel {
        kind: ForestKind::RandomForest,
        criterion: params.criterion,
        trees,
        seed: params.seed,
        sample_class_counts: Vec::new(),
    })
}

/// Random undersample keeping `min(count_c, target)` records of every class
/// present, drawn without replacement. `target = None` uses the smallest
/// non-zero class count. Returned indices are ascending.
pub fn balanced_sample(labels: &[usize], target: Option<usize>, rng: &mut impl Rng) -> Vec<usize> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); NUM_CLASSES];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let minority = by_class
        .iter()
        .map(Vec::len)
        .filter(|&c| c > 0)
        .min()
        .unwrap_or(0);
    let target = target.unwrap_or(minority);
    let mut picked = Vec::new();
    for rows in &by_class {
        let keep = rows.len().min(target);
        picked.extend(sample(rng, rows.len(), keep).into_iter().map(|k| rows[k]));
    }
    picked.sort_unstable();
    picked
}

pub fn fit_balanced_bagging(data: &SampleMatrix, params: &BalancedBaggingParams) -> Result<ForestModel> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    if params.n_estimators == 0 {
        return Err(Error::InvalidParameter("n_estimators must be ≥ 1".into()));
    }
    if params.target_per_class == Some(0) {
        return Err(Error::InvalidParameter("target_per_class must be ≥ 1".into()));
    }
    let d = data.n_features();
    let k = params.feature_subsample.unwrap_or(d).clamp(1, d);
    let x = data.values().view();
    let y = data.labels();

    let fitted = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(params.seed, t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows = balanced_sample(y, params.target_per_class, &mut rng);
            let mut counts = [0; NUM_CLASSES];
            for &r in &rows {
                counts[y[r]] += 1;
            }
            let tp = tree_params(
                params.max_depth,
                params.min_samples_leaf,
                params.min_samples_split,
                k,
                derive_seed(seed, u64::MAX),
            );
            fit_tree_on_rows(x, y, rows, &tp, params.criterion).map(|t| (t, counts))
        })
        .collect::<Result<Vec<_>>>()?;
    let (trees, sample_class_counts) = fitted.into_iter().unzip();

    Ok(ForestModel {
        kind: ForestKind::BalancedBagging,
        criterion: params.criterion,
        trees,
        seed: params.seed,
        sample_class_counts,
    })
}

impl ScoreModel for ForestModel {
    fn n_features(&self) -> usize {
        self.trees[0].n_features()
    }

    fn predict_proba_values(&self, x: ArrayView2<'_, f64>) -> Result<ProbabilityScoreMatrix> {
        check_arity(self.n_features(), &x)?;
        let n_trees = self.trees.len() as f64;
        let rows: Vec<[f64; NUM_CLASSES]> = (0..x.nrows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i).to_vec();
                let mut acc = [0.0; NUM_CLASSES];
                for tree in &self.trees {
                    for (a, p) in acc.iter_mut().zip(tree.leaf_for(&row)) {
                        *a += p;
                    }
                }
                acc.map(|a| a / n_trees)
            })
            .collect();
        let scores = Array2::from_shape_fn((rows.len(), NUM_CLASSES), |(i, j)| rows[i][j]);
        ProbabilityScoreMatrix::new(scores)
    }
}
