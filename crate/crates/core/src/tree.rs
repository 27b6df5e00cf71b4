//! Axis-parallel classification trees with a pluggable split criterion.
//!
//! Induction examines a seeded random subset of features at each node, tries
//! every midpoint between consecutive distinct values and keeps the split
//! with the highest criterion score. Ties go to the lower feature index, then
//! the lower threshold.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classes::NUM_CLASSES;
use crate::data::SampleMatrix;
use crate::error::{Error, Result};

pub type ClassCounts = [usize; NUM_CLASSES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitCriterion {
    EntropyGain,
    GiniGain,
    /// Mean pairwise Hellinger distance between the classes' left/right
    /// partition distributions.
    Hellinger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImpurityKind {
    Entropy,
    Gini,
}

/// Hellinger distance of a binary split.
///
/// With `positive = Some(c)`, class `c` is compared against all other classes
/// pooled together. With `None`, the score is the unweighted mean of the
/// class-versus-class distances over every pair of classes present at the
/// node; it depends only on each class's own left/right proportions. The
/// result lies in `[0, √2]`, and a split with an empty side scores 0.
pub fn hellinger_split_score(left: &[usize], right: &[usize], positive: Option<usize>) -> f64 {
    debug_assert_eq!(left.len(), right.len());
    let (nl, nr): (usize, usize) = (left.iter().sum(), right.iter().sum());
    if nl == 0 || nr == 0 {
        return 0.0;
    }
    match positive {
        Some(c) => {
            let (pos_l, pos_r) = (left[c], right[c]);
            binary_hellinger(pos_l, pos_l + pos_r, nl - pos_l, nl + nr - pos_l - pos_r)
        }
        None => {
            let mut sum = 0.0;
            let mut pairs = 0usize;
            for i in 0..left.len() {
                let ni = left[i] + right[i];
                if ni == 0 {
                    continue;
                }
                for j in (i + 1)..left.len() {
                    let nj = left[j] + right[j];
                    if nj == 0 {
                        continue;
                    }
                    sum += binary_hellinger(left[i], ni, left[j], nj);
                    pairs += 1;
                }
            }
            if pairs == 0 {
                0.0
            } else {
                sum / pairs as f64
            }
        }
    }
}

/// `sqrt((√(L₊/N₊) − √(L₋/N₋))² + (√(R₊/N₊) − √(R₋/N₋))²)`; a class with no
/// records contributes proportion 0 on both sides.
fn binary_hellinger(pos_left: usize, pos_total: usize, neg_left: usize, neg_total: usize) -> f64 {
    let frac = |part: usize, total: usize| {
        if total == 0 {
            0.0
        } else {
            part as f64 / total as f64
        }
    };
    let pl = frac(pos_left, pos_total);
    let pr = frac(pos_total - pos_left, pos_total);
    let ql = frac(neg_left, neg_total);
    let qr = frac(neg_total - neg_left, neg_total);
    let a = pl.sqrt() - ql.sqrt();
    let b = pr.sqrt() - qr.sqrt();
    (a * a + b * b).sqrt()
}

pub fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

pub fn gini(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            p * p
        })
        .sum::<f64>()
}

/// Parent impurity minus size-weighted child impurity (entropy in bits).
pub fn impurity_split_score(left: &[usize], right: &[usize], kind: ImpurityKind) -> f64 {
    let impurity = match kind {
        ImpurityKind::Entropy => entropy,
        ImpurityKind::Gini => gini,
    };
    let parent: Vec<usize> = left.iter().zip(right).map(|(l, r)| l + r).collect();
    let n: usize = parent.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let (nl, nr) = (left.iter().sum::<usize>() as f64, right.iter().sum::<usize>() as f64);
    let n = n as f64;
    (impurity(&parent) - nl / n * impurity(left) - nr / n * impurity(right)).max(0.0)
}

impl SplitCriterion {
    pub fn score(self, left: &[usize], right: &[usize]) -> f64 {
        match self {
            SplitCriterion::Hellinger => hellinger_split_score(left, right, None),
            SplitCriterion::EntropyGain => impurity_split_score(left, right, ImpurityKind::Entropy),
            SplitCriterion::GiniGain => impurity_split_score(left, right, ImpurityKind::Gini),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    /// Features examined per node; `None` examines all of them.
    pub feature_subsample: Option<usize>,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
            min_samples_split: 2,
            feature_subsample: None,
            seed: 0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidParameter("min_samples_leaf must be ≥ 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParameter("min_samples_split must be ≥ 2".into()));
        }
        if self.feature_subsample == Some(0) {
            return Err(Error::InvalidParameter("feature_subsample must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        proportions: [f64; NUM_CLASSES],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl TrainedTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Leaf class proportions for one row (`value ≤ threshold` goes left).
    pub fn predict_proba(&self, row: &[f64]) -> Result<[f64; NUM_CLASSES]> {
        if row.len() != self.n_features {
            return Err(Error::ArityMismatch {
                expected: self.n_features,
                found: row.len(),
            });
        }
        Ok(*self.leaf_for(row))
    }

    pub(crate) fn leaf_for(&self, row: &[f64]) -> &[f64; NUM_CLASSES] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { proportions } => return proportions,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

pub fn fit_tree(data: &SampleMatrix, params: &TreeParams, criterion: SplitCriterion) -> Result<TrainedTree> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let rows: Vec<usize> = (0..data.n_samples()).collect();
    fit_tree_on_rows(data.values().view(), data.labels(), rows, params, criterion)
}

/// Fits on the given rows of `x`/`y`. Rows may repeat (bootstrap samples).
pub(crate) fn fit_tree_on_rows(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    rows: Vec<usize>,
    params: &TreeParams,
    criterion: SplitCriterion,
) -> Result<TrainedTree> {
    params.validate()?;
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n_features = x.ncols();
    let mut builder = Builder {
        x,
        y,
        params,
        criterion,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        features: (0..n_features).collect(),
        subsample: params.feature_subsample.unwrap_or(n_features).min(n_features),
    };
    let nodes = builder.grow(rows);
    Ok(TrainedTree { nodes, n_features })
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [usize],
    params: &'a TreeParams,
    criterion: SplitCriterion,
    rng: ChaCha8Rng,
    features: Vec<usize>,
    subsample: usize,
}

#[derive(Clone, Copy)]
struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        self.score > other.score
            || (self.score == other.score
                && (self.feature, self.threshold) < (other.feature, other.threshold))
    }
}

impl Builder<'_> {
    fn grow(&mut self, rows: Vec<usize>) -> Vec<Node> {
        let mut nodes = vec![Node::Leaf {
            proportions: [0.0; NUM_CLASSES],
        }];
        let mut stack = vec![(0usize, rows, 0usize)];
        while let Some((slot, rows, depth)) = stack.pop() {
            let counts = self.counts(&rows);
            let split = if self.should_stop(&rows, &counts, depth) {
                None
            } else {
                self.best_split(&rows, &counts)
            };
            match split {
                None => {
                    let n = rows.len() as f64;
                    nodes[slot] = Node::Leaf {
                        proportions: counts.map(|c| c as f64 / n),
                    };
                }
                Some(c) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = rows
                        .into_iter()
                        .partition(|&i| self.x[[i, c.feature]] <= c.threshold);
                    let left = nodes.len();
                    let right = left + 1;
                    let placeholder = Node::Leaf {
                        proportions: [0.0; NUM_CLASSES],
                    };
                    nodes.push(placeholder.clone());
                    nodes.push(placeholder);
                    nodes[slot] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                    };
                    stack.push((right, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        nodes
    }

    fn counts(&self, rows: &[usize]) -> ClassCounts {
        let mut counts = [0; NUM_CLASSES];
        for &i in rows {
            counts[self.y[i]] += 1;
        }
        counts
    }

    fn should_stop(&self, rows: &[usize], counts: &ClassCounts, depth: usize) -> bool {
        self.params.max_depth.is_some_and(|d| depth >= d)
            || rows.len() < self.params.min_samples_split
            || rows.len() < 2 * self.params.min_samples_leaf
            || counts.iter().filter(|&&c| c > 0).count() < 2
    }

    /// Scores the first `subsample` features of a fresh permutation; if none
    /// of them admits a valid split, keeps drawing from the rest of the
    /// permutation until one does.
    fn best_split(&mut self, rows: &[usize], counts: &ClassCounts) -> Option<Candidate> {
        self.features.shuffle(&mut self.rng);
        let mut chosen: Vec<usize> = self.features[..self.subsample].to_vec();
        chosen.sort_unstable();
        let mut best = None;
        for &f in &chosen {
            self.scan_feature(f, rows, counts, &mut best);
        }
        let mut extra = self.subsample;
        while best.is_none() && extra < self.features.len() {
            let f = self.features[extra];
            self.scan_feature(f, rows, counts, &mut best);
            extra += 1;
        }
        best
    }

    fn scan_feature(&self, feature: usize, rows: &[usize], parent: &ClassCounts, best: &mut Option<Candidate>) {
        let mut sorted: Vec<(f64, usize)> = rows
            .iter()
            .map(|&i| (self.x[[i, feature]], self.y[i]))
            .collect();
        sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let n = sorted.len();
        let min_leaf = self.params.min_samples_leaf;
        let mut left = [0usize; NUM_CLASSES];
        let mut right = *parent;
        for k in 0..n - 1 {
            let (value, class) = sorted[k];
            left[class] += 1;
            right[class] -= 1;
            let next = sorted[k + 1].0;
            if value == next || k + 1 < min_leaf || n - k - 1 < min_leaf {
                continue;
            }
            let mut threshold = value + (next - value) / 2.0;
            if threshold >= next {
                threshold = value;
            }
            let cand = Candidate {
                score: self.criterion.score(&left, &right),
                feature,
                threshold,
            };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                *best = Some(cand);
            }
        }
    }
}
