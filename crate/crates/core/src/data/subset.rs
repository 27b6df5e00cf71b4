use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::SampleMatrix;
use super::schema::FeatureSchema;
use crate::error::{Error, Result};

const ELASTIC_NET_24: &str = include_str!("../../config/elastic_net_24.txt");
const SFS_8: &str = include_str!("../../config/sfs_8.txt");

/// Ordered, duplicate-free list of feature names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct FeatureSubset(Vec<String>);

impl FeatureSubset {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidSubset("subset is empty".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::InvalidSubset(format!("`{dup}` listed twice")));
        }
        Ok(Self(names))
    }

    /// Newline-separated names; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The 24 features used by the bagging and boosting learners.
    pub fn elastic_net_24() -> Self {
        Self::parse(ELASTIC_NET_24).expect("bundled subset is valid")
    }

    /// The 8 features used by the Hellinger forest.
    pub fn sfs_8() -> Self {
        Self::parse(SFS_8).expect("bundled subset is valid")
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks that every name is a model feature (not an identifier or
    /// target) of `schema`.
    pub fn validate_against(&self, schema: &FeatureSchema) -> Result<()> {
        for name in &self.0 {
            match schema.column(name) {
                Some(c) if c.kind.is_feature() => {}
                Some(_) => {
                    return Err(Error::InvalidSubset(format!(
                        "`{name}` is not a model feature"
                    )))
                }
                None => return Err(Error::UnknownFeature(name.clone())),
            }
        }
        Ok(())
    }

    pub fn column_indices(&self, feature_names: &[String]) -> Result<Vec<usize>> {
        self.0
            .iter()
            .map(|n| {
                feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| Error::UnknownFeature(n.clone()))
            })
            .collect()
    }
}

impl TryFrom<Vec<String>> for FeatureSubset {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FeatureSubset> for Vec<String> {
    fn from(s: FeatureSubset) -> Self {
        s.0
    }
}

/// Projects `m` onto `subset`, in subset order.
pub fn apply_feature_subset(m: &SampleMatrix, subset: &FeatureSubset) -> Result<SampleMatrix> {
    Ok(m.select_columns(&subset.column_indices(m.feature_names())?))
}
