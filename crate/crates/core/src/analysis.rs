//! Between-class imbalance: class distribution and the one-versus-one
//! imbalance-ratio matrix.

use serde::{Deserialize, Serialize};

use crate::classes::{ClassList, NUM_CLASSES};
use crate::error::{Error, Result};

/// Pairs whose majority/minority ratio exceeds this are imbalanced.
pub const IMBALANCE_THRESHOLD: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub counts: [usize; NUM_CLASSES],
    pub proportions: [f64; NUM_CLASSES],
}

impl ClassDistribution {
    pub fn from_counts(counts: [usize; NUM_CLASSES]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyInput);
        }
        let proportions = counts.map(|c| c as f64 / total as f64);
        Ok(Self {
            counts,
            proportions,
        })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn class_distribution(labels: &[usize]) -> Result<ClassDistribution> {
    let mut counts = [0; NUM_CLASSES];
    for &l in labels {
        if l >= NUM_CLASSES {
            return Err(Error::InvalidParameter(format!("label {l} out of range")));
        }
        counts[l] += 1;
    }
    ClassDistribution::from_counts(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IrMode {
    /// Ratios of exact record counts.
    RawCount,
    /// Ratios of proportions rounded for display: two decimals, or the first
    /// significant digit for proportions that would otherwise round to zero.
    RoundedDistribution,
}

/// `values[i][j] = dist_i / dist_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrMatrix {
    pub values: [[f64; NUM_CLASSES]; NUM_CLASSES],
    pub mode: IrMode,
}

impl IrMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    /// Majority over minority for the unordered pair, always ≥ 1.
    pub fn pair_ratio(&self, i: usize, j: usize) -> f64 {
        self.values[i][j].max(self.values[j][i])
    }
}

/// Rounds a proportion to two decimals; tiny proportions keep their first
/// significant digit instead of collapsing to zero.
pub fn display_round(p: f64) -> f64 {
    let round_to = |decimals: i32| {
        let scale = 10f64.powi(decimals);
        (p * scale).round() / scale
    };
    let r = round_to(2);
    if r > 0.0 || p <= 0.0 {
        return r;
    }
    round_to(-p.log10().floor() as i32)
}

pub fn imbalance_ratio_matrix(dist: &ClassDistribution, mode: IrMode) -> Result<IrMatrix> {
    let classes = ClassList::canonical();
    if let Some(c) = dist.counts.iter().position(|&c| c == 0) {
        return Err(Error::ZeroClass(classes.name(c).to_string()));
    }
    let basis: [f64; NUM_CLASSES] = match mode {
        IrMode::RawCount => dist.counts.map(|c| c as f64),
        IrMode::RoundedDistribution => dist.proportions.map(display_round),
    };
    let mut values = [[1.0; NUM_CLASSES]; NUM_CLASSES];
    for i in 0..NUM_CLASSES {
        for j in 0..NUM_CLASSES {
            if i != j {
                values[i][j] = basis[i] / basis[j];
            }
        }
    }
    Ok(IrMatrix { values, mode })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPair {
    pub majority: String,
    pub minority: String,
    pub ratio: f64,
}

/// Unordered class pairs whose ratio strictly exceeds `threshold`, largest
/// first.
pub fn imbalance_report(ir: &IrMatrix, threshold: f64) -> Vec<FlaggedPair> {
    let classes = ClassList::canonical();
    let mut pairs = Vec::new();
    for i in 0..NUM_CLASSES {
        for j in (i + 1)..NUM_CLASSES {
            let ratio = ir.pair_ratio(i, j);
            if ratio > threshold {
                let (maj, min) = if ir.get(i, j) >= ir.get(j, i) { (i, j) } else { (j, i) };
                pairs.push(FlaggedPair {
                    majority: classes.name(maj).to_string(),
                    minority: classes.name(min).to_string(),
                    ratio,
                });
            }
        }
    }
    pairs.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
    pairs
}
