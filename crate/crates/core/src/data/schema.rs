use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::table::{Cell, RawTable};
use crate::error::{Error, Result};

const UNSW_NB15_SCHEMA: &str = include_str!("../../config/unsw_nb15.schema");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Numeric,
    Nominal,
    Identifier,
    TargetCategory,
    TargetLabel,
}

impl ColumnKind {
    pub fn is_feature(self) -> bool {
        matches!(self, ColumnKind::Numeric | ColumnKind::Nominal)
    }

    pub fn is_target(self) -> bool {
        matches!(self, ColumnKind::TargetCategory | ColumnKind::TargetLabel)
    }
}

impl FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "numeric" => ColumnKind::Numeric,
            "nominal" => ColumnKind::Nominal,
            "identifier" => ColumnKind::Identifier,
            "target-category" => ColumnKind::TargetCategory,
            "target-label" => ColumnKind::TargetLabel,
            other => return Err(Error::InvalidSchema(format!("unknown column kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Column layout of an input CSV plus the category → code tables of its
/// nominal columns.
///
/// Codes are assigned from training data in sorted category order starting
/// at 1; code 0 is reserved for categories never seen during fitting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    columns: Vec<Column>,
    nominal_maps: BTreeMap<String, BTreeMap<String, u32>>,
}

impl FeatureSchema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate column `{}`", c.name)));
            }
        }
        let categories = columns
            .iter()
            .filter(|c| c.kind == ColumnKind::TargetCategory)
            .count();
        if categories != 1 {
            return Err(Error::InvalidSchema(format!(
                "expected exactly one target-category column, found {categories}"
            )));
        }
        if columns
            .iter()
            .filter(|c| c.kind == ColumnKind::TargetLabel)
            .count()
            > 1
        {
            return Err(Error::InvalidSchema(
                "at most one target-label column is allowed".into(),
            ));
        }
        if !columns.iter().any(|c| c.kind.is_feature()) {
            return Err(Error::InvalidSchema("schema declares no feature columns".into()));
        }
        Ok(Self {
            columns,
            nominal_maps: BTreeMap::new(),
        })
    }

    /// Parses the plain-text `<column> <kind>` format. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(name), Some(kind), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::InvalidSchema(format!(
                    "line {}: expected `<column> <kind>`",
                    lineno + 1
                )));
            };
            columns.push(Column {
                name: name.to_string(),
                kind: kind.parse()?,
            });
        }
        Self::new(columns)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Layout of the official UNSW-NB15 train/test split files.
    pub fn unsw_nb15() -> Self {
        Self::parse(UNSW_NB15_SCHEMA).expect("bundled schema is valid")
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Model input columns in schema order (identifiers and targets removed).
    pub fn feature_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.kind.is_feature())
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn target_category(&self) -> &str {
        &self
            .columns
            .iter()
            .find(|c| c.kind == ColumnKind::TargetCategory)
            .expect("validated on construction")
            .name
    }

    pub fn nominal_maps(&self) -> &BTreeMap<String, BTreeMap<String, u32>> {
        &self.nominal_maps
    }

    pub fn has_nominal_maps(&self) -> bool {
        self.columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Nominal)
            .all(|c| self.nominal_maps.contains_key(&c.name))
    }

    /// Builds the code tables of every nominal column from `raw`.
    pub fn fit_nominal_maps(&mut self, raw: &RawTable) -> Result<()> {
        let mut maps = BTreeMap::new();
        for col in self.columns.iter().filter(|c| c.kind == ColumnKind::Nominal) {
            let idx = raw
                .column_index(&col.name)
                .ok_or_else(|| Error::MissingColumn(col.name.clone()))?;
            let categories: BTreeSet<&str> = raw
                .rows()
                .iter()
                .filter_map(|r| match &r[idx] {
                    Cell::Text(t) => Some(t.as_str()),
                    _ => None,
                })
                .collect();
            let map = categories
                .into_iter()
                .zip(1u32..)
                .map(|(c, code)| (c.to_string(), code))
                .collect();
            maps.insert(col.name.clone(), map);
        }
        self.nominal_maps = maps;
        Ok(())
    }

    /// Code of `category` in nominal column `column`; 0 when unseen.
    pub fn nominal_code(&self, column: &str, category: &str) -> u32 {
        self.nominal_maps
            .get(column)
            .and_then(|m| m.get(category))
            .copied()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_schema_leaves_42_features() {
        let s = FeatureSchema::unsw_nb15();
        assert_eq!(s.columns().len(), 45);
        assert_eq!(s.feature_names().len(), 42);
        assert_eq!(s.target_category(), "attack_cat");
    }

    #[test]
    fn rejects_duplicate_columns() {
        let err = FeatureSchema::parse("a numeric\na nominal\nc target-category").unwrap_err();
        assert!(matches!(err, Error::InvalidSchema(_)));
    }

    #[test]
    fn requires_one_target_category() {
        assert!(FeatureSchema::parse("a numeric").is_err());
        assert!(FeatureSchema::parse("a numeric\nb target-category\nc target-category").is_err());
        assert!(FeatureSchema::parse("a numeric\nb target-category\nc target-label\nd target-label")
            .is_err());
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(FeatureSchema::parse("a float\nb target-category").is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let s = FeatureSchema::parse("# header\n\na numeric # trailing\nb target-category\n").unwrap();
        assert_eq!(s.feature_names(), vec!["a".to_string()]);
    }
}
