use ndarray::{Array2, ArrayView1, Axis};

use super::schema::{ColumnKind, FeatureSchema};
use super::table::{Cell, RawTable};
use crate::classes::{ClassList, NUM_CLASSES};
use crate::error::{Error, Result};

/// Encoded numeric features plus class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    values: Array2<f64>,
    labels: Vec<usize>,
    feature_names: Vec<String>,
}

impl SampleMatrix {
    /// Builds a matrix after checking that values are finite, labels are
    /// valid class indices and the shapes agree. A matrix with zero rows is
    /// allowed (an empty validation split); learners reject it.
    pub fn new(values: Array2<f64>, labels: Vec<usize>, feature_names: Vec<String>) -> Result<Self> {
        if values.ncols() == 0 || values.ncols() != feature_names.len() {
            return Err(Error::ArityMismatch {
                expected: feature_names.len(),
                found: values.ncols(),
            });
        }
        if values.nrows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: values.nrows(),
                right: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= NUM_CLASSES) {
            return Err(Error::InvalidParameter(format!("label {bad} out of range")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite feature value".into()));
        }
        Ok(Self {
            values,
            labels,
            feature_names,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Columns at `indices`, in that order.
    pub fn select_columns(&self, indices: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(1), indices),
            labels: self.labels.clone(),
            feature_names: indices.iter().map(|&i| self.feature_names[i].clone()).collect(),
        }
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub(crate) fn with_values(&self, values: Array2<f64>) -> Self {
        debug_assert_eq!(values.dim(), self.values.dim());
        Self {
            values,
            labels: self.labels.clone(),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Encodes the feature columns of `raw` (identifiers dropped, nominals
/// integer-coded) into a row-major array, ignoring targets.
pub fn encode_features(raw: &RawTable, schema: &FeatureSchema) -> Result<(Array2<f64>, Vec<String>)> {
    if !schema.has_nominal_maps() {
        return Err(Error::InvalidSchema("nominal code tables have not been fitted".into()));
    }
    let features: Vec<(usize, &str, ColumnKind)> = schema
        .columns()
        .iter()
        .filter(|c| c.kind.is_feature())
        .map(|c| {
            raw.column_index(&c.name)
                .map(|i| (i, c.name.as_str(), c.kind))
                .ok_or_else(|| Error::MissingColumn(c.name.clone()))
        })
        .collect::<Result<_>>()?;

    let mut values = Array2::zeros((raw.len(), features.len()));
    for (r, row) in raw.rows().iter().enumerate() {
        for (j, &(idx, name, kind)) in features.iter().enumerate() {
            values[[r, j]] = match (&row[idx], kind) {
                (Cell::Num(v), ColumnKind::Numeric) => *v,
                (Cell::Text(t), ColumnKind::Nominal) => f64::from(schema.nominal_code(name, t)),
                _ => {
                    return Err(Error::MalformedRow {
                        row: r + 1,
                        reason: format!("column `{name}` has the wrong cell type"),
                    })
                }
            };
        }
    }
    let names = features.iter().map(|&(_, n, _)| n.to_string()).collect();
    Ok((values, names))
}

/// Turns an ingested table into model input: identifier columns are dropped,
/// nominal cells replaced by their codes and the category column mapped to
/// class indices.
pub fn preprocess(raw: &RawTable, schema: &FeatureSchema) -> Result<SampleMatrix> {
    let (values, names) = encode_features(raw, schema)?;
    let target = schema.target_category();
    let idx = raw
        .column_index(target)
        .ok_or_else(|| Error::MissingColumn(target.to_string()))?;
    let classes = ClassList::canonical();
    let labels = raw
        .rows()
        .iter()
        .map(|row| match &row[idx] {
            Cell::Text(t) => classes.index_of(t),
            Cell::Num(v) => Err(Error::UnknownClassName(v.to_string())),
        })
        .collect::<Result<Vec<_>>>()?;
    SampleMatrix::new(values, labels, names)
}
