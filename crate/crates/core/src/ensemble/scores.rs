use std::io::Write;

use ndarray::Array2;

use crate::classes::argmax;
use crate::error::{Error, Result};

/// Per-sample class membership scores, one column per class.
///
/// Scores straight out of a learner are row-stochastic. After overlap
/// correction an entry may exceed 1 and rows no longer sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityScoreMatrix {
    scores: Array2<f64>,
}

impl ProbabilityScoreMatrix {
    pub fn new(scores: Array2<f64>) -> Result<Self> {
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite score".into()));
        }
        Ok(Self { scores })
    }

    pub fn scores(&self) -> &Array2<f64> {
        &self.scores
    }

    pub(crate) fn scores_mut(&mut self) -> &mut Array2<f64> {
        &mut self.scores
    }

    pub fn n_rows(&self) -> usize {
        self.scores.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.scores.ncols()
    }

    /// Row-wise argmax, lowest class index on ties.
    pub fn predicted_labels(&self) -> Vec<usize> {
        self.scores
            .rows()
            .into_iter()
            .map(|r| argmax(r.iter().copied()))
            .collect()
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.scores.rows().into_iter().all(|r| {
            r.iter().all(|&v| (0.0..=1.0).contains(&v)) && (r.sum() - 1.0).abs() <= tol
        })
    }

    /// CSV with a header naming the classes; full-precision values.
    pub fn write_csv<W: Write>(&self, out: W, class_names: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(class_names)?;
        for row in self.scores.rows() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}
