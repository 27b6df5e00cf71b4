use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::schema::{ColumnKind, FeatureSchema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

/// CSV records re-ordered into schema column order, numeric columns parsed.
///
/// Target columns are optional so unlabeled traffic can be ingested for
/// prediction; every other schema column must be present in the header.
#[derive(Debug, Clone)]
pub struct RawTable {
    columns: Vec<String>,
    index: HashMap<String, usize>,
    rows: Vec<Vec<Cell>>,
}

impl RawTable {
    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<RawTable> {
    ingest_reader(File::open(path)?, schema)
}

pub fn ingest_reader<R: Read>(reader: R, schema: &FeatureSchema) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let mut positions = HashMap::new();
    for (i, h) in header.iter().enumerate() {
        if schema.column(h).is_none() {
            return Err(Error::InvalidSchema(format!(
                "input column `{h}` is not declared in the schema"
            )));
        }
        positions.insert(h.as_str(), i);
    }

    // (source position, kind) for each retained column, in schema order
    let mut layout = Vec::new();
    let mut columns = Vec::new();
    for col in schema.columns() {
        match positions.get(col.name.as_str()) {
            Some(&pos) => {
                layout.push((pos, col.kind));
                columns.push(col.name.clone());
            }
            None if col.kind.is_target() => {}
            None => return Err(Error::MissingColumn(col.name.clone())),
        }
    }

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row_number = i + 1;
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::MalformedRow {
                row: row_number,
                reason: format!("expected {} cells, found {}", header.len(), record.len()),
            });
        }
        let mut cells = Vec::with_capacity(layout.len());
        for &(pos, kind) in &layout {
            let raw = record[pos].trim();
            let cell = match kind {
                ColumnKind::Numeric => {
                    let v: f64 = raw.parse().map_err(|_| Error::MalformedRow {
                        row: row_number,
                        reason: format!("column `{}`: `{raw}` is not a number", header[pos]),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::MalformedRow {
                            row: row_number,
                            reason: format!("column `{}`: non-finite value", header[pos]),
                        });
                    }
                    Cell::Num(v)
                }
                _ => Cell::Text(raw.to_string()),
            };
            cells.push(cell);
        }
        rows.push(cells);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }

    let index = columns
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();
    Ok(RawTable {
        columns,
        index,
        rows,
    })
}
