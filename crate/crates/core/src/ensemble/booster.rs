//! Newton boosting on the softmax cross-entropy.
//!
//! Every round fits one regression tree per class to the per-row gradient
//! `p − y` and hessian `p(1 − p)` of the loss. A leaf's weight is
//! `−ΣG / (ΣH + λ)` scaled by the learning rate, and a split's gain is
//! `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)]`. Split search is exact over
//! presorted columns and proceeds one depth level at a time.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_arity, ProbabilityScoreMatrix, ScoreModel};
use crate::classes::NUM_CLASSES;
use crate::data::SampleMatrix;
use crate::error::{Error, Result};

const MIN_HESSIAN: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoosterParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    /// Smallest hessian sum allowed in a child.
    pub min_child_weight: f64,
}

impl Default for BoosterParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            max_depth: 6,
            learning_rate: 0.3,
            l2_lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

impl BoosterParams {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidParameter("learning_rate must be in (0, 1]".into()));
        }
        if [self.l2_lambda, self.min_child_weight].iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "l2_lambda and min_child_weight must be ≥ 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegNode>,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                RegNode::Leaf { value } => return *value,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoosterModel {
    /// One tree per class for every round.
    pub rounds: Vec<Vec<RegressionTree>>,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub base_margin: [f64; NUM_CLASSES],
    pub n_features: usize,
}

impl BoosterModel {
    pub fn margins(&self, row: &[f64]) -> [f64; NUM_CLASSES] {
        let mut m = self.base_margin;
        for round in &self.rounds {
            for (c, tree) in round.iter().enumerate() {
                m[c] += tree.predict(row);
            }
        }
        m
    }
}

impl ScoreModel for BoosterModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba_values(&self, x: ArrayView2<'_, f64>) -> Result<ProbabilityScoreMatrix> {
        check_arity(self.n_features, &x)?;
        let rows: Vec<Vec<f64>> = (0..x.nrows())
            .into_par_iter()
            .map(|i| softmax(&self.margins(&x.row(i).to_vec())))
            .collect();
        let scores = Array2::from_shape_fn((rows.len(), NUM_CLASSES), |(i, j)| rows[i][j]);
        ProbabilityScoreMatrix::new(scores)
    }
}

pub fn softmax(margins: &[f64]) -> Vec<f64> {
    let max = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = margins.iter().map(|m| (m - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / z).collect()
}

/// `−log softmax(margins)[label]`.
pub fn softmax_cross_entropy(margins: &[f64], label: usize) -> f64 {
    let max = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + margins.iter().map(|m| (m - max).exp()).sum::<f64>().ln();
    lse - margins[label]
}

/// Gradient of [`softmax_cross_entropy`] with respect to the margins.
pub fn softmax_gradient(margins: &[f64], label: usize) -> Vec<f64> {
    let mut g = softmax(margins);
    g[label] -= 1.0;
    g
}

pub fn fit_gradient_booster(data: &SampleMatrix, params: &BoosterParams) -> Result<BoosterModel> {
    fit_gradient_booster_traced(data, params).map(|(m, _)| m)
}

/// Also returns the mean training cross-entropy before the first round and
/// after every round.
pub fn fit_gradient_booster_traced(
    data: &SampleMatrix,
    params: &BoosterParams,
) -> Result<(BoosterModel, Vec<f64>)> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let x = data.values().view();
    let y = data.labels();
    let n = data.n_samples();
    let order = ColumnOrder::new(x);

    let base_margin = [0.0; NUM_CLASSES];
    let mut margins = vec![base_margin; n];
    let mean_loss = |m: &[[f64; NUM_CLASSES]]| {
        m.iter().zip(y).map(|(r, &l)| softmax_cross_entropy(r, l)).sum::<f64>() / n as f64
    };
    let mut trace = vec![mean_loss(&margins)];
    let mut rounds = Vec::with_capacity(params.n_rounds);

    for _ in 0..params.n_rounds {
        let probs: Vec<Vec<f64>> = margins.par_iter().map(|m| softmax(m)).collect();
        let trees: Vec<RegressionTree> = (0..NUM_CLASSES)
            .into_par_iter()
            .map(|c| {
                let (grad, hess): (Vec<f64>, Vec<f64>) = probs
                    .iter()
                    .zip(y)
                    .map(|(p, &l)| {
                        let target = if l == c { 1.0 } else { 0.0 };
                        (p[c] - target, (p[c] * (1.0 - p[c])).max(MIN_HESSIAN))
                    })
                    .collect();
                fit_regression_tree(x, &order, &grad, &hess, params)
            })
            .collect();
        margins.par_iter_mut().enumerate().for_each(|(i, m)| {
            let row = x.row(i).to_vec();
            for (c, tree) in trees.iter().enumerate() {
                m[c] += tree.predict(&row);
            }
        });
        trace.push(mean_loss(&margins));
        rounds.push(trees);
    }

    Ok((
        BoosterModel {
            rounds,
            learning_rate: params.learning_rate,
            l2_lambda: params.l2_lambda,
            base_margin,
            n_features: x.ncols(),
        },
        trace,
    ))
}

/// Row indices of every column sorted by value (ties by row index).
struct ColumnOrder {
    sorted: Vec<Vec<u32>>,
}

impl ColumnOrder {
    fn new(x: ArrayView2<'_, f64>) -> Self {
        let sorted = (0..x.ncols())
            .into_par_iter()
            .map(|f| {
                let mut idx: Vec<u32> = (0..x.nrows() as u32).collect();
                idx.sort_by(|&a, &b| x[[a as usize, f]].total_cmp(&x[[b as usize, f]]));
                idx
            })
            .collect();
        Self { sorted }
    }
}

const DONE: u32 = u32::MAX;

#[derive(Clone, Copy, Default)]
struct Stats {
    g: f64,
    h: f64,
}

#[derive(Clone, Copy)]
struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn leaf_weight(s: Stats, params: &BoosterParams) -> f64 {
    -s.g / (s.h + params.l2_lambda) * params.learning_rate
}

fn fit_regression_tree(
    x: ArrayView2<'_, f64>,
    order: &ColumnOrder,
    grad: &[f64],
    hess: &[f64],
    params: &BoosterParams,
) -> RegressionTree {
    let n = grad.len();
    let lambda = params.l2_lambda;
    let score = |s: Stats| s.g * s.g / (s.h + lambda);

    let mut nodes = vec![RegNode::Leaf { value: 0.0 }];
    // slot of each row within the current level, DONE once its node is final
    let mut slot_of = vec![0u32; n];
    let mut level_nodes = vec![0usize];
    let mut level_stats = vec![Stats {
        g: grad.iter().sum(),
        h: hess.iter().sum(),
    }];

    for _depth in 0..params.max_depth {
        let width = level_nodes.len();
        let mut best: Vec<Option<BestSplit>> = vec![None; width];
        let mut left = vec![Stats::default(); width];
        let mut last: Vec<Option<f64>> = vec![None; width];

        for (f, sorted) in order.sorted.iter().enumerate() {
            left.fill(Stats::default());
            last.fill(None);
            for &r in sorted {
                let r = r as usize;
                let s = slot_of[r];
                if s == DONE {
                    continue;
                }
                let s = s as usize;
                let v = x[[r, f]];
                if let Some(prev) = last[s] {
                    if v > prev {
                        let l = left[s];
                        let total = level_stats[s];
                        let rt = Stats {
                            g: total.g - l.g,
                            h: total.h - l.h,
                        };
                        if l.h >= params.min_child_weight && rt.h >= params.min_child_weight {
                            let gain = 0.5 * (score(l) + score(rt) - score(total));
                            if gain > 0.0 && best[s].is_none_or(|b| gain > b.gain) {
                                let mut threshold = prev + (v - prev) / 2.0;
                                if threshold >= v {
                                    threshold = prev;
                                }
                                best[s] = Some(BestSplit {
                                    gain,
                                    feature: f,
                                    threshold,
                                });
                            }
                        }
                    }
                }
                left[s].g += grad[r];
                left[s].h += hess[r];
                last[s] = Some(v);
            }
        }

        // next level: children of split nodes, in slot order
        let mut child_slots = vec![(DONE, DONE); width];
        let mut next_nodes = Vec::new();
        for (s, b) in best.iter().enumerate() {
            let node = level_nodes[s];
            match b {
                Some(b) => {
                    let l = nodes.len();
                    nodes.push(RegNode::Leaf { value: 0.0 });
                    nodes.push(RegNode::Leaf { value: 0.0 });
                    nodes[node] = RegNode::Split {
                        feature: b.feature,
                        threshold: b.threshold,
                        left: l,
                        right: l + 1,
                    };
                    child_slots[s] = (next_nodes.len() as u32, next_nodes.len() as u32 + 1);
                    next_nodes.push(l);
                    next_nodes.push(l + 1);
                }
                None => {
                    nodes[node] = RegNode::Leaf {
                        value: leaf_weight(level_stats[s], params),
                    };
                }
            }
        }
        if next_nodes.is_empty() {
            return RegressionTree { nodes };
        }
        let mut next_stats = vec![Stats::default(); next_nodes.len()];
        for r in 0..n {
            let s = slot_of[r];
            if s == DONE {
                continue;
            }
            let (l, rt) = child_slots[s as usize];
            if l == DONE {
                slot_of[r] = DONE;
                continue;
            }
            let b = best[s as usize].expect("split slot");
            let child = if x[[r, b.feature]] <= b.threshold { l } else { rt };
            slot_of[r] = child;
            next_stats[child as usize].g += grad[r];
            next_stats[child as usize].h += hess[r];
        }
        level_nodes = next_nodes;
        level_stats = next_stats;
    }

    for (s, &node) in level_nodes.iter().enumerate() {
        nodes[node] = RegNode::Leaf {
            value: leaf_weight(level_stats[s], params),
        };
    }
    RegressionTree { nodes }
}
