//! Column-major tables, CSV ingestion, and the rank and nearest-neighbour
//! primitives shared by every estimator.

mod neighbors;
mod rank;

pub use neighbors::{break_tie, nearest_neighbors, nearest_neighbors_grouped, NeighborMap};
pub use rank::{ranks, RankVector};

use std::collections::HashSet;
use std::io::Read;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Feature,
    Sensitive,
    Target,
    Prediction,
    Loss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub role: Role,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, role: Role, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            role,
            values,
        }
    }
}

/// Explicit column-to-role mapping used when reading a CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    entries: Vec<(String, Role)>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, role: Role) -> Self {
        self.entries.push((name.into(), role));
        self
    }

    pub fn push(&mut self, name: impl Into<String>, role: Role) {
        self.entries.push((name.into(), role));
    }

    pub fn entries(&self) -> &[(String, Role)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A numeric dataset with named, role-tagged columns of equal length.
///
/// Tables produced by [`DataTable::select_rows`] remember which original row
/// each of their rows came from; nearest-neighbour searches use this to keep a
/// resampled duplicate from being its own twin's neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    columns: Vec<Column>,
    n_rows: usize,
    row_origin: Option<Vec<usize>>,
}

impl DataTable {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let first = columns.first().ok_or(Error::EmptyInput)?;
        let n_rows = first.values.len();
        if n_rows == 0 {
            return Err(Error::EmptyInput);
        }
        let mut seen = HashSet::new();
        for col in &columns {
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column '{}'", col.name)));
            }
            if col.values.len() != n_rows {
                return Err(Error::LengthMismatch {
                    expected: n_rows,
                    got: col.values.len(),
                });
            }
        }
        Ok(Self {
            columns,
            n_rows,
            row_origin: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Schema(format!("no column named '{name}'")))
    }

    pub fn values(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.column(name)?.values)
    }

    pub fn names_with_role(&self, role: Role) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.role == role)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Stack the named columns into an `n_rows x names.len()` matrix.
    pub fn matrix(&self, names: &[&str]) -> Result<Array2<f64>> {
        let cols = names
            .iter()
            .map(|n| self.values(n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Array2::from_shape_fn(
            (self.n_rows, cols.len()),
            |(r, c)| cols[c][r],
        ))
    }

    /// Original-row provenance, present only on resampled tables.
    pub fn row_origin(&self) -> Option<&[usize]> {
        self.row_origin.as_deref()
    }

    /// Build a table from the given rows (repetitions allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Result<DataTable> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(Error::InvalidArgument(format!("row {bad} out of range")));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                role: c.role,
                values: rows.iter().map(|&r| c.values[r]).collect(),
            })
            .collect();
        let origin = rows
            .iter()
            .map(|&r| self.row_origin.as_ref().map_or(r, |o| o[r]))
            .collect();
        Ok(DataTable {
            columns,
            n_rows: rows.len(),
            row_origin: Some(origin),
        })
    }

    /// Append a derived column.
    pub fn with_column(mut self, column: Column) -> Result<DataTable> {
        if column.values.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                expected: self.n_rows,
                got: column.values.len(),
            });
        }
        if self.columns.iter().any(|c| c.name == column.name) {
            return Err(Error::Schema(format!("duplicate column '{}'", column.name)));
        }
        self.columns.push(column);
        Ok(self)
    }
}

/// Read a comma-separated table with a header row, keeping the columns named
/// in `schema`. Other header columns are ignored.
pub fn load_table<R: Read>(source: R, schema: &Schema) -> Result<DataTable> {
    if schema.is_empty() {
        return Err(Error::Schema("schema names no columns".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| csv_error(e, "<header>"))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyInput);
    }

    let mut positions = Vec::with_capacity(schema.entries().len());
    let mut seen = HashSet::new();
    for (name, role) in schema.entries() {
        if !seen.insert(name.as_str()) {
            return Err(Error::Schema(format!("column '{name}' assigned twice")));
        }
        let pos = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("column '{name}' not found in header")))?;
        positions.push((pos, name.clone(), *role));
    }

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); positions.len()];
    for (i, record) in reader.records().enumerate() {
        // 1-based data row, header excluded
        let row = i + 1;
        let record = record.map_err(|e| csv_error(e, ""))?;
        for (slot, (pos, name, _)) in positions.iter().enumerate() {
            let cell = record.get(*pos).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: name.clone(),
                message: format!("'{cell}' is not a number"),
            })?;
            values[slot].push(v);
        }
    }
    if values[0].is_empty() {
        return Err(Error::EmptyInput);
    }
    let columns = positions
        .into_iter()
        .zip(values)
        .map(|((_, name, role), values)| Column { name, role, values })
        .collect();
    DataTable::new(columns)
}

fn csv_error(err: csv::Error, column: &str) -> Error {
    let row = err
        .position()
        .map(|p| (p.record() as usize).max(1))
        .unwrap_or(0);
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => format!("ragged row: expected {expected_len} fields, found {len}"),
        _ => err.to_string(),
    };
    Error::Parse {
        row,
        column: column.to_string(),
        message,
    }
}
