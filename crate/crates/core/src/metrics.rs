//! Vote combination, Normal-vs-Attack collapse and one-vs-rest metrics.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::classes::{argmax, ClassList, NORMAL, NUM_CLASSES};
use crate::ensemble::ProbabilityScoreMatrix;
use crate::error::{Error, Result};
use crate::overlap::ConfusionMatrix;

pub const BINARY_NORMAL: usize = 0;
pub const BINARY_ATTACK: usize = 1;
pub const BINARY_CLASS_NAMES: [&str; 2] = ["Normal", "Attack"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VoteMode {
    /// Argmax of the summed score matrices.
    #[default]
    Sum,
    /// Each model votes for its own argmax; ties go to the larger summed
    /// score, then the lower class index.
    Hard,
}

fn check_shapes(ps_list: &[&ProbabilityScoreMatrix]) -> Result<(usize, usize)> {
    let first = ps_list.first().ok_or(Error::EmptyInput)?;
    let shape = (first.n_rows(), first.n_classes());
    if ps_list.iter().any(|p| (p.n_rows(), p.n_classes()) != shape) {
        return Err(Error::ShapeMismatch);
    }
    Ok(shape)
}

fn summed(ps_list: &[&ProbabilityScoreMatrix], shape: (usize, usize)) -> Array2<f64> {
    let mut total = Array2::zeros(shape);
    for ps in ps_list {
        total += ps.scores();
    }
    total
}

pub fn sum_vote(ps_list: &[&ProbabilityScoreMatrix]) -> Result<Vec<usize>> {
    let shape = check_shapes(ps_list)?;
    let total = summed(ps_list, shape);
    Ok(total.rows().into_iter().map(|r| argmax(r.iter().copied())).collect())
}

pub fn hard_vote(ps_list: &[&ProbabilityScoreMatrix]) -> Result<Vec<usize>> {
    let shape = check_shapes(ps_list)?;
    let total = summed(ps_list, shape);
    let picks: Vec<Vec<usize>> = ps_list.iter().map(|p| p.predicted_labels()).collect();
    let mut out = Vec::with_capacity(shape.0);
    for (i, row_total) in total.rows().into_iter().enumerate() {
        let mut votes = vec![0usize; shape.1];
        for p in &picks {
            votes[p[i]] += 1;
        }
        let best = votes.iter().copied().max().unwrap_or(0);
        let winner = (0..shape.1)
            .filter(|&c| votes[c] == best)
            .fold(None::<usize>, |acc, c| match acc {
                Some(a) if row_total[a] >= row_total[c] => Some(a),
                _ => Some(c),
            })
            .unwrap_or(0);
        out.push(winner);
    }
    Ok(out)
}

pub fn vote(ps_list: &[&ProbabilityScoreMatrix], mode: VoteMode) -> Result<Vec<usize>> {
    match mode {
        VoteMode::Sum => sum_vote(ps_list),
        VoteMode::Hard => hard_vote(ps_list),
    }
}

/// Maps ten-class labels onto `BINARY_NORMAL` / `BINARY_ATTACK`.
pub fn collapse_labels(labels: &[usize]) -> Vec<usize> {
    labels
        .iter()
        .map(|&l| if l == NORMAL { BINARY_NORMAL } else { BINARY_ATTACK })
        .collect()
}

pub fn collapse_confusion(cm: &ConfusionMatrix) -> Result<ConfusionMatrix> {
    if cm.n_classes() != NUM_CLASSES {
        return Err(Error::ShapeMismatch);
    }
    let side = |c: usize| if c == NORMAL { BINARY_NORMAL } else { BINARY_ATTACK };
    let mut counts = Array2::zeros((2, 2));
    for ((a, p), &v) in cm.counts().indexed_iter() {
        counts[[side(a), side(p)]] += v;
    }
    ConfusionMatrix::from_counts(counts)
}

/// Which labelling a confusion matrix uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum View {
    Multiclass,
    Binary,
}

impl View {
    pub fn class_names(self) -> Vec<String> {
        match self {
            View::Multiclass => ClassList::canonical().names().to_vec(),
            View::Binary => BINARY_CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn normal_index(self) -> usize {
        match self {
            View::Multiclass => NORMAL,
            View::Binary => BINARY_NORMAL,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub precision: f64,
    pub f_measure: f64,
}

impl ClassMetrics {
    fn from_counts(class: String, tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        let total = tp + fn_ + fp + tn;
        let sensitivity = ratio(tp, tp + fn_);
        let specificity = ratio(tn, tn + fp);
        let precision = ratio(tp, tp + fp);
        let f_measure = if precision + sensitivity > 0.0 {
            2.0 * precision * sensitivity / (precision + sensitivity)
        } else {
            0.0
        };
        Self {
            class,
            tp,
            fn_,
            fp,
            tn,
            accuracy: ratio(tp + tn, total),
            sensitivity,
            specificity,
            // complements are taken from the same ratio so the identities
            // hold bit-for-bit
            fpr: if tn + fp == 0 { 0.0 } else { 1.0 - specificity },
            fnr: if tp + fn_ == 0 { 0.0 } else { 1.0 - sensitivity },
            precision,
            f_measure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub view: View,
    pub per_class: Vec<ClassMetrics>,
    pub overall_accuracy: f64,
    /// Attack rows predicted Normal, over attack rows.
    pub missed_alarm_rate: f64,
    /// Normal rows predicted as any attack, over Normal rows.
    pub false_alarm_rate: f64,
}

impl MetricsReport {
    pub fn class(&self, name: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|m| m.class == name)
    }

    /// Unweighted mean of F-measures over classes that occur either as
    /// truth or as a prediction.
    pub fn macro_f1(&self) -> f64 {
        let seen: Vec<f64> = self
            .per_class
            .iter()
            .filter(|m| m.tp + m.fn_ + m.fp > 0)
            .map(|m| m.f_measure)
            .collect();
        if seen.is_empty() {
            return 0.0;
        }
        seen.iter().sum::<f64>() / seen.len() as f64
    }

    /// Per-class table with rates as percentages rounded to two decimals.
    pub fn write_percent_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "class",
            "accuracy",
            "sensitivity",
            "specificity",
            "fpr",
            "fnr",
            "precision",
            "f_measure",
        ])?;
        for m in &self.per_class {
            w.write_record([
                m.class.clone(),
                percent(m.accuracy),
                percent(m.sensitivity),
                percent(m.specificity),
                percent(m.fpr),
                percent(m.fnr),
                percent(m.precision),
                percent(m.f_measure),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `0.98257 → "98.26"`.
pub fn percent(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

pub fn compute_metrics(cm: &ConfusionMatrix, view: View) -> Result<MetricsReport> {
    let names = view.class_names();
    if cm.n_classes() != names.len() {
        return Err(Error::ShapeMismatch);
    }
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let counts = cm.counts();
    let k = names.len();
    let per_class = (0..k)
        .map(|c| {
            let tp = counts[[c, c]];
            let row: u64 = counts.row(c).sum();
            let col: u64 = counts.column(c).sum();
            let (fn_, fp) = (row - tp, col - tp);
            ClassMetrics::from_counts(names[c].clone(), tp, fn_, fp, total - tp - fn_ - fp)
        })
        .collect();

    let normal = view.normal_index();
    let diag: u64 = (0..k).map(|c| counts[[c, c]]).sum();
    let normal_rows: u64 = counts.row(normal).sum();
    let attack_rows = total - normal_rows;
    let attack_to_normal = counts.column(normal).sum() - counts[[normal, normal]];
    Ok(MetricsReport {
        view,
        per_class,
        overall_accuracy: ratio(diag, total),
        missed_alarm_rate: ratio(attack_to_normal, attack_rows),
        false_alarm_rate: ratio(normal_rows - counts[[normal, normal]], normal_rows),
    })
}

/// Misclassified attack rows split by where they went, each as a fraction of
/// all attack rows. `to_normal + to_other_attack == total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackErrorBreakdown {
    pub to_normal: f64,
    pub to_other_attack: f64,
    pub total: f64,
}

pub fn attack_error_breakdown(cm: &ConfusionMatrix) -> Result<AttackErrorBreakdown> {
    if cm.n_classes() != NUM_CLASSES {
        return Err(Error::ShapeMismatch);
    }
    let counts = cm.counts();
    let (mut rows, mut to_normal, mut to_other) = (0u64, 0u64, 0u64);
    for a in (0..NUM_CLASSES).filter(|&a| a != NORMAL) {
        for p in 0..NUM_CLASSES {
            let v = counts[[a, p]];
            rows += v;
            if p == NORMAL {
                to_normal += v;
            } else if p != a {
                to_other += v;
            }
        }
    }
    if rows == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(AttackErrorBreakdown {
        to_normal: ratio(to_normal, rows),
        to_other_attack: ratio(to_other, rows),
        total: ratio(to_normal + to_other, rows),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ps(rows: Vec<Vec<f64>>) -> ProbabilityScoreMatrix {
        let k = rows[0].len();
        let n = rows.len();
        ProbabilityScoreMatrix::new(Array2::from_shape_vec((n, k), rows.concat()).unwrap()).unwrap()
    }

    #[test]
    fn sum_vote_adds_scores() {
        let a = ps(vec![vec![0.6, 0.4]]);
        let b = ps(vec![vec![0.1, 0.9]]);
        let c = ps(vec![vec![0.2, 0.8]]);
        assert_eq!(sum_vote(&[&a, &b, &c]).unwrap(), vec![1]);
        assert_eq!(sum_vote(&[&a]).unwrap(), vec![0]);
        assert_eq!(sum_vote(&[&a, &a, &a]).unwrap(), vec![0]);
    }

    #[test]
    fn hard_vote_counts_argmaxes() {
        let a = ps(vec![vec![0.6, 0.4]]);
        let b = ps(vec![vec![0.1, 0.9]]);
        // sum says class 1, majority says class 0
        assert_eq!(hard_vote(&[&a, &a, &b]).unwrap(), vec![0]);
        let c = ps(vec![vec![0.2, 0.3, 0.5]]);
        let d = ps(vec![vec![0.1, 0.8, 0.1]]);
        let e = ps(vec![vec![0.5, 0.2, 0.3]]);
        // one vote each; class 1 has the largest summed score
        assert_eq!(hard_vote(&[&c, &d, &e]).unwrap(), vec![1]);
    }

    #[test]
    fn vote_shape_mismatch() {
        let a = ps(vec![vec![0.6, 0.4]]);
        let b = ps(vec![vec![0.6, 0.4], vec![0.5, 0.5]]);
        assert!(matches!(sum_vote(&[&a, &b]), Err(Error::ShapeMismatch)));
        assert!(matches!(sum_vote(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn collapse_maps_normal_only() {
        assert_eq!(collapse_labels(&[NORMAL, NORMAL]), vec![0, 0]);
        assert_eq!(collapse_labels(&[0, 9, NORMAL]), vec![1, 1, 0]);
    }

    #[test]
    fn binary_metrics() {
        let cm = ConfusionMatrix::from_counts(array![[35978, 1022], [790, 44542]]).unwrap();
        let r = compute_metrics(&cm, View::Binary).unwrap();
        let atk = r.class("Attack").unwrap();
        assert_eq!(percent(atk.sensitivity), "98.26");
        assert_eq!(percent(atk.precision), "97.76");
        assert_eq!(percent(atk.f_measure), "98.01");
        assert!((atk.fpr - 0.0276).abs() < 1e-4);
        assert!((r.false_alarm_rate - 1022.0 / 37000.0).abs() < 1e-15);
        assert!((r.missed_alarm_rate - 790.0 / 45332.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_diagonal() {
        let cm = ConfusionMatrix::from_counts(Array2::from_diag(&array![3u64, 0, 5])).unwrap();
        let cm10 = {
            let mut c = Array2::zeros((NUM_CLASSES, NUM_CLASSES));
            for i in 0..NUM_CLASSES {
                c[[i, i]] = i as u64 + 1;
            }
            ConfusionMatrix::from_counts(c).unwrap()
        };
        let r = compute_metrics(&cm10, View::Multiclass).unwrap();
        for m in &r.per_class {
            assert_eq!((m.sensitivity, m.precision, m.fpr, m.fnr), (1.0, 1.0, 0.0, 0.0));
        }
        assert_eq!(r.overall_accuracy, 1.0);
        assert!(matches!(compute_metrics(&cm, View::Multiclass), Err(Error::ShapeMismatch)));
    }

    #[test]
    fn empty_matrix() {
        let cm = ConfusionMatrix::from_counts(Array2::zeros((2, 2))).unwrap();
        assert!(matches!(compute_metrics(&cm, View::Binary), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn absent_class_rates_are_zero() {
        let cm = ConfusionMatrix::from_counts(array![[5, 0], [0, 0]]).unwrap();
        let r = compute_metrics(&cm, View::Binary).unwrap();
        let atk = r.class("Attack").unwrap();
        assert_eq!((atk.sensitivity, atk.fnr, atk.precision, atk.f_measure), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(r.missed_alarm_rate, 0.0);
    }
}
