//! Class-overlap correction.
//!
//! Fitting happens on validation predictions. For every ordered pair
//! (true `x`, predicted `y`) we collect the score gaps `PS_y − PS_x` of the
//! misclassified rows in which `x` was the runner-up, and keep their mean and
//! population standard deviation. Overlapping gap ranges within a true class
//! are then thinned so only the most frequent confusion survives. At test
//! time, a row whose top-two gap falls inside the stored range for
//! (runner-up, winner) gets the mean gap added to the runner-up's score.

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::classes::argmax;
use crate::ensemble::ProbabilityScoreMatrix;
use crate::error::{Error, Result};

/// Counts indexed `[actual, predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Array2<u64>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Array2<u64>) -> Result<Self> {
        if counts.nrows() != counts.ncols() || counts.nrows() == 0 {
            return Err(Error::ShapeMismatch);
        }
        Ok(Self { counts })
    }

    pub fn from_labels(actual: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(Error::LengthMismatch {
                left: actual.len(),
                right: predicted.len(),
            });
        }
        if actual.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut counts = Array2::zeros((n_classes, n_classes));
        for (&a, &p) in actual.iter().zip(predicted) {
            if a >= n_classes || p >= n_classes {
                return Err(Error::InvalidParameter(format!("label out of range for {n_classes} classes")));
            }
            counts[[a, p]] += 1;
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    pub fn n_classes(&self) -> usize {
        self.counts.nrows()
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[[actual, predicted]]
    }

    pub fn total(&self) -> u64 {
        self.counts.sum()
    }

    pub fn write_csv<W: Write>(&self, out: W, class_names: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["actual\\predicted".to_string()];
        header.extend(class_names.iter().cloned());
        w.write_record(&header)?;
        for (i, row) in self.counts.rows().into_iter().enumerate() {
            let mut rec = vec![class_names[i].clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Paired mean / standard-deviation arrays indexed `[true, predicted]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapModel {
    pub olm: Array2<f64>,
    pub olsd: Array2<f64>,
    pub resolved: bool,
}

impl OverlapModel {
    /// All-zero model. Marked resolved, so using it for correction leaves
    /// every row as it was.
    pub fn disabled(n_classes: usize) -> Self {
        Self {
            olm: Array2::zeros((n_classes, n_classes)),
            olsd: Array2::zeros((n_classes, n_classes)),
            resolved: true,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.olm.nrows()
    }

    fn is_active(&self, x: usize, y: usize) -> bool {
        self.olm[[x, y]] != 0.0 || self.olsd[[x, y]] != 0.0
    }

    pub fn write_csv<W: Write>(&self, out: W, class_names: &[String], which: OverlapTable) -> Result<()> {
        let table = match which {
            OverlapTable::Mean => &self.olm,
            OverlapTable::StdDev => &self.olsd,
        };
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(class_names.iter().cloned());
        w.write_record(&header)?;
        for (i, row) in table.rows().into_iter().enumerate() {
            let mut rec = vec![class_names[i].clone()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapTable {
    Mean,
    StdDev,
}

/// Mean and population standard deviation of validation score gaps.
///
/// `predicted` is expected to be the row argmax of `ps`. For a row with true
/// class `x` predicted as `y ≠ x`, the gap `D = PS_y − PS_x` is kept unless
/// some third class `z` has `PS_y − PS_z < D` (i.e. unless `x` was not the
/// runner-up). Pairs without kept gaps stay at 0.
pub fn error_statistics(
    ps: &ProbabilityScoreMatrix,
    actual: &[usize],
    predicted: &[usize],
) -> Result<OverlapModel> {
    let k = ps.n_classes();
    if actual.len() != ps.n_rows() || predicted.len() != ps.n_rows() {
        return Err(Error::AlignmentMismatch(format!(
            "{} score rows, {} true labels, {} predicted labels",
            ps.n_rows(),
            actual.len(),
            predicted.len()
        )));
    }
    if actual.iter().chain(predicted).any(|&l| l >= k) {
        return Err(Error::AlignmentMismatch(format!("label out of range for {k} classes")));
    }

    let mut kept: Vec<Vec<f64>> = vec![Vec::new(); k * k];
    for (i, (&x, &y)) in actual.iter().zip(predicted).enumerate() {
        if x == y {
            continue;
        }
        let row = ps.scores().row(i);
        let d = row[y] - row[x];
        let runner_up = (0..k)
            .filter(|&z| z != x && z != y)
            .all(|z| row[y] - row[z] >= d);
        if runner_up {
            kept[x * k + y].push(d);
        }
    }

    let mut olm = Array2::zeros((k, k));
    let mut olsd = Array2::zeros((k, k));
    for x in 0..k {
        for y in 0..k {
            let gaps = &kept[x * k + y];
            if gaps.is_empty() {
                continue;
            }
            let n = gaps.len() as f64;
            let mean = gaps.iter().sum::<f64>() / n;
            let var = gaps.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
            olm[[x, y]] = mean;
            olsd[[x, y]] = var.sqrt();
        }
    }
    Ok(OverlapModel {
        olm,
        olsd,
        resolved: false,
    })
}

/// Within each true class, groups the predicted-class ranges
/// `[μ − σ, μ + σ]` into chains of overlapping closed intervals and keeps,
/// per chain, only the entry with the largest confusion count (lowest class
/// index on ties). Disjoint ranges are left alone.
pub fn resolve_range_overlaps(model: &OverlapModel, cm: &ConfusionMatrix) -> Result<OverlapModel> {
    if model.resolved {
        return Err(Error::NotFitted);
    }
    let k = model.n_classes();
    if cm.n_classes() != k {
        return Err(Error::ShapeMismatch);
    }
    let mut out = model.clone();
    for x in 0..k {
        let mut ranges: Vec<(f64, f64, usize)> = (0..k)
            .filter(|&y| y != x && model.is_active(x, y))
            .map(|y| {
                let (m, s) = (model.olm[[x, y]], model.olsd[[x, y]]);
                (m - s, m + s, y)
            })
            .collect();
        ranges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));

        let mut start = 0;
        while start < ranges.len() {
            let mut reach = ranges[start].1;
            let mut end = start + 1;
            while end < ranges.len() && ranges[end].0 <= reach {
                reach = reach.max(ranges[end].1);
                end += 1;
            }
            let group = &ranges[start..end];
            if group.len() > 1 {
                let keep = group
                    .iter()
                    .map(|&(_, _, y)| y)
                    .max_by(|&a, &b| cm.get(x, a).cmp(&cm.get(x, b)).then(b.cmp(&a)))
                    .expect("non-empty group");
                for &(_, _, y) in group {
                    if y != keep {
                        out.olm[[x, y]] = 0.0;
                        out.olsd[[x, y]] = 0.0;
                    }
                }
            }
            start = end;
        }
    }
    out.resolved = true;
    Ok(out)
}

/// One score adjustment made by [`modify_membership_scores`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub row: usize,
    /// Runner-up class whose score was raised.
    pub class: usize,
    /// Class that held the top score before the adjustment.
    pub winner: usize,
    pub added: f64,
}

/// Test-time score modification. For every row, let `w` be the top class
/// and `r` the runner-up (smallest gap `PS_w − PS_r`, lowest index on ties).
/// If that gap lies in `[olm[r,w] − olsd[r,w], olm[r,w] + olsd[r,w]]`,
/// `olm[r,w]` is added to `PS_r`. No renormalisation is applied.
pub fn modify_membership_scores(
    ps: &ProbabilityScoreMatrix,
    model: &OverlapModel,
) -> Result<(ProbabilityScoreMatrix, Vec<Correction>)> {
    if !model.resolved {
        return Err(Error::NotResolved);
    }
    let k = ps.n_classes();
    if model.n_classes() != k {
        return Err(Error::ShapeMismatch);
    }
    let mut out = ps.clone();
    let mut log = Vec::new();
    if k < 2 {
        return Ok((out, log));
    }
    let scores = out.scores_mut();
    for (i, mut row) in scores.rows_mut().into_iter().enumerate() {
        let winner = argmax(row.iter().copied());
        let top = row[winner];
        let mut gap = f64::INFINITY;
        let mut runner_up = usize::MAX;
        for (j, &v) in row.iter().enumerate() {
            if j != winner && top - v < gap {
                gap = top - v;
                runner_up = j;
            }
        }
        let (mean, sd) = (model.olm[[runner_up, winner]], model.olsd[[runner_up, winner]]);
        if gap >= mean - sd && gap <= mean + sd {
            row[runner_up] += mean;
            if mean != 0.0 {
                log.push(Correction {
                    row: i,
                    class: runner_up,
                    winner,
                    added: mean,
                });
            }
        }
    }
    Ok((out, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::*;
    use ndarray::{array, Array2};

    fn ps(rows: &[&[f64]]) -> ProbabilityScoreMatrix {
        let k = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        ProbabilityScoreMatrix::new(Array2::from_shape_vec((rows.len(), k), flat).unwrap()).unwrap()
    }

    #[test]
    fn confusion_counts() {
        let cm = ConfusionMatrix::from_labels(&[ANALYSIS], &[BACKDOOR], NUM_CLASSES).unwrap();
        assert_eq!(cm.get(ANALYSIS, BACKDOOR), 1);
        assert_eq!(cm.total(), 1);
        let cm = ConfusionMatrix::from_labels(&[0, 1, 1, 2], &[0, 1, 1, 2], 3).unwrap();
        assert_eq!(cm.counts(), &array![[1, 0, 0], [0, 2, 0], [0, 0, 1]]);
        assert!(matches!(
            ConfusionMatrix::from_labels(&[0], &[0, 1], 3),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn worked_trace_rows() {
        let scores = ps(&[
            &[0.78, 0.81, 0.02, 0.01, 0.24, 0.08, 0.11, 0.19, 0.08, 0.22],
            &[0.09, 0.54, 0.01, 0.03, 0.41, 0.04, 0.01, 0.06, 0.12, 0.14],
        ]);
        let m = error_statistics(&scores, &[ANALYSIS, ANALYSIS], &[BACKDOOR, BACKDOOR]).unwrap();
        assert!((m.olm[[ANALYSIS, BACKDOOR]] - 0.03).abs() < 1e-12);
        assert_eq!(m.olsd[[ANALYSIS, BACKDOOR]], 0.0, "only row 1 is kept");
        assert!(!m.resolved);
    }

    #[test]
    fn perfect_classifier_has_no_statistics() {
        let scores = ps(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let m = error_statistics(&scores, &[0, 1], &[0, 1]).unwrap();
        assert!(m.olm.iter().chain(m.olsd.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn ties_with_a_third_class_do_not_discard() {
        // PS_y − PS_z == D for z = 2: strict test keeps D
        let scores = ps(&[&[0.3, 0.4, 0.3]]);
        let m = error_statistics(&scores, &[0], &[1]).unwrap();
        assert!((m.olm[[0, 1]] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn misaligned_inputs() {
        let scores = ps(&[&[0.5, 0.5]]);
        assert!(matches!(
            error_statistics(&scores, &[0, 1], &[0]),
            Err(Error::AlignmentMismatch(_))
        ));
    }

    fn analysis_row_model() -> (OverlapModel, ConfusionMatrix) {
        let mut olm = Array2::zeros((NUM_CLASSES, NUM_CLASSES));
        let mut olsd = Array2::zeros((NUM_CLASSES, NUM_CLASSES));
        for (y, m, s) in [(BACKDOOR, 0.08, 0.02), (FUZZERS, 0.09, 0.02), (NORMAL, 0.04, 0.03), (RECON, 1.30, 0.10)] {
            olm[[ANALYSIS, y]] = m;
            olsd[[ANALYSIS, y]] = s;
        }
        let mut counts = Array2::zeros((NUM_CLASSES, NUM_CLASSES));
        for (y, c) in [(ANALYSIS, 501), (BACKDOOR, 124), (FUZZERS, 46), (NORMAL, 3), (RECON, 3)] {
            counts[[ANALYSIS, y]] = c;
        }
        (
            OverlapModel {
                olm,
                olsd,
                resolved: false,
            },
            ConfusionMatrix::from_counts(counts).unwrap(),
        )
    }

    #[test]
    fn range_revision_keeps_backdoor_and_recon() {
        let (model, cm) = analysis_row_model();
        let r = resolve_range_overlaps(&model, &cm).unwrap();
        assert!(r.resolved);
        assert_eq!((r.olm[[ANALYSIS, BACKDOOR]], r.olsd[[ANALYSIS, BACKDOOR]]), (0.08, 0.02));
        assert_eq!((r.olm[[ANALYSIS, RECON]], r.olsd[[ANALYSIS, RECON]]), (1.30, 0.10));
        for y in [FUZZERS, NORMAL] {
            assert_eq!((r.olm[[ANALYSIS, y]], r.olsd[[ANALYSIS, y]]), (0.0, 0.0));
        }
        assert!(matches!(resolve_range_overlaps(&r, &cm), Err(Error::NotFitted)));
    }

    #[test]
    fn equal_counts_keep_earlier_class() {
        let mut olm = Array2::zeros((3, 3));
        let mut olsd = Array2::zeros((3, 3));
        olm[[0, 1]] = 0.2;
        olsd[[0, 1]] = 0.05;
        olm[[0, 2]] = 0.22;
        olsd[[0, 2]] = 0.05;
        let cm = ConfusionMatrix::from_counts(array![[5, 4, 4], [0, 1, 0], [0, 0, 1]]).unwrap();
        let r = resolve_range_overlaps(&OverlapModel { olm, olsd, resolved: false }, &cm).unwrap();
        assert_eq!(r.olm[[0, 1]], 0.2);
        assert_eq!(r.olm[[0, 2]], 0.0);
    }

    #[test]
    fn disjoint_ranges_are_untouched() {
        let mut olm = Array2::zeros((3, 3));
        let olsd = Array2::from_elem((3, 3), 0.0);
        olm[[0, 1]] = 0.1;
        olm[[0, 2]] = 0.3;
        let model = OverlapModel { olm, olsd, resolved: false };
        let cm = ConfusionMatrix::from_counts(Array2::ones((3, 3))).unwrap();
        let r = resolve_range_overlaps(&model, &cm).unwrap();
        assert_eq!(r.olm, model.olm);
    }

    #[test]
    fn hand_traced_modification_flips_prediction() {
        let mut row = [0.0; NUM_CLASSES];
        row[0] = 0.10;
        row[1] = 0.55;
        row[2] = 0.35;
        let scores = ps(&[&row]);
        let mut model = OverlapModel::disabled(NUM_CLASSES);
        model.olm[[2, 1]] = 0.22;
        model.olsd[[2, 1]] = 0.05;
        let (out, log) = modify_membership_scores(&scores, &model).unwrap();
        assert!((out.scores()[[0, 2]] - 0.57).abs() < 1e-12);
        assert_eq!(out.predicted_labels(), vec![2]);
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn rows_outside_range_or_without_stats_are_untouched() {
        let scores = ps(&[&[0.1, 0.55, 0.35], &[0.6, 0.3, 0.1]]);
        let mut model = OverlapModel::disabled(3);
        model.olm[[2, 1]] = 0.5;
        model.olsd[[2, 1]] = 0.05;
        let (out, log) = modify_membership_scores(&scores, &model).unwrap();
        assert_eq!(out, scores);
        assert!(log.is_empty());
    }

    #[test]
    fn unresolved_model_is_rejected() {
        let scores = ps(&[&[0.5, 0.5]]);
        let mut model = OverlapModel::disabled(2);
        model.resolved = false;
        assert!(matches!(modify_membership_scores(&scores, &model), Err(Error::NotResolved)));
    }
}
