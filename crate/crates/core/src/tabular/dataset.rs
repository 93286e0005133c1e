use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, ColumnSpec, Schema};
use super::value::Value;
use super::CsvTable;
use crate::error::{Error, Result};

pub type Row = Vec<Option<Value>>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    pub rows_loaded: usize,
    pub rows_retained: usize,
}

/// Schema-validated table of customer records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Row>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Row>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Schema(format!(
                    "row {i} has {} cells, schema has {} columns",
                    row.len(),
                    schema.len()
                )));
            }
            for (cell, spec) in row.iter().zip(schema.columns()) {
                if let Some(v) = cell {
                    if !v.matches_kind(spec.kind) {
                        return Err(Error::Schema(format!(
                            "row {i}: value {v} does not match kind of column `{}`",
                            spec.name
                        )));
                    }
                }
            }
        }
        let n = rows.len();
        Ok(Self {
            schema,
            rows,
            provenance: Provenance {
                source: None,
                rows_loaded: n,
                rows_retained: n,
            },
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.schema.require(name)
    }

    pub fn column_spec(&self, name: &str) -> Result<&ColumnSpec> {
        Ok(&self.schema.columns()[self.column_index(name)?])
    }

    pub fn cell(&self, row: usize, column: usize) -> Option<&Value> {
        self.rows[row][column].as_ref()
    }

    pub fn column(&self, name: &str) -> Result<impl Iterator<Item = Option<&Value>>> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(move |r| r[j].as_ref()))
    }

    /// Numeric view of a column; fails for categorical columns.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let spec = self.column_spec(name)?;
        if spec.kind == ColumnKind::Categorical {
            return Err(Error::Config(format!("column `{name}` is not numeric")));
        }
        Ok(self.column(name)?.map(|v| v.and_then(Value::as_f64)).collect())
    }

    /// Like [`numeric_column`](Self::numeric_column) but every cell must be present.
    pub fn complete_numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        self.numeric_column(name)?
            .into_iter()
            .map(|v| {
                v.ok_or_else(|| Error::IncompleteData {
                    column: name.to_owned(),
                })
            })
            .collect()
    }

    /// Customer identifiers from the `ID` column, or 0-based row positions
    /// when the table has no such column.
    pub fn row_ids(&self) -> Result<Vec<i64>> {
        match self.schema.index_of("ID") {
            Some(j) => self
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    r[j].as_ref().and_then(Value::as_i64).ok_or_else(|| {
                        Error::Encoding(format!("row {i} has no integer ID"))
                    })
                })
                .collect(),
            None => Ok((0..self.rows.len() as i64).collect()),
        }
    }

    pub fn retain_rows(&self, keep: &[bool]) -> Dataset {
        let rows: Vec<Row> = self
            .rows
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(r, _)| r.clone())
            .collect();
        let mut provenance = self.provenance.clone();
        provenance.rows_retained = rows.len();
        Dataset {
            schema: self.schema.clone(),
            rows,
            provenance,
        }
    }

    pub fn set_cell(&mut self, row: usize, column: usize, value: Option<Value>) {
        self.rows[row][column] = value;
    }

    pub fn with_column(mut self, spec: ColumnSpec, values: Vec<Option<Value>>) -> Result<Dataset> {
        if values.len() != self.rows.len() {
            return Err(Error::Dimension {
                expected: self.rows.len(),
                got: values.len(),
            });
        }
        self.schema.push(spec)?;
        for (row, v) in self.rows.iter_mut().zip(values) {
            row.push(v);
        }
        Ok(self)
    }

    pub(crate) fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

fn csv_error(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_owned(),
        source,
    }
}

/// Load a delimited file with a header row, matching columns to the schema
/// by header name. Extra file columns are ignored.
pub fn load_table(path: impl AsRef<Path>, schema: &Schema, delimiter: u8) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let positions: HashMap<&str, usize> =
        headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let mapping = schema
        .columns()
        .iter()
        .map(|c| {
            positions
                .get(c.name.as_str())
                .copied()
                .ok_or_else(|| Error::MissingColumn {
                    column: c.name.clone(),
                })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        // header is line 1
        let line = i + 2;
        let mut row = Vec::with_capacity(mapping.len());
        for (spec, &pos) in schema.columns().iter().zip(&mapping) {
            let raw = record.get(pos).unwrap_or("");
            let parsed = if raw.is_empty() {
                None
            } else {
                Value::parse(raw, spec)
            };
            if parsed.is_none() && !spec.nullable {
                return Err(Error::Parse {
                    line,
                    column: spec.name.clone(),
                    value: raw.to_owned(),
                    expected: kind_name(spec.kind),
                });
            }
            row.push(parsed);
        }
        rows.push(row);
    }
    let n = rows.len();
    Ok(Dataset::new(schema.clone(), rows)?.with_provenance(Provenance {
        source: Some(path.to_owned()),
        rows_loaded: n,
        rows_retained: n,
    }))
}

fn kind_name(kind: ColumnKind) -> &'static str {
    match kind {
        ColumnKind::Integer => "integer",
        ColumnKind::Real => "real",
        ColumnKind::Categorical => "category",
        ColumnKind::Date => "date",
        ColumnKind::Boolean => "boolean",
    }
}

impl CsvTable for Dataset {
    fn csv_header(&self) -> Vec<String> {
        self.schema.columns().iter().map(|c| c.name.clone()).collect()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(self.schema.columns())
                    .map(|(cell, spec)| cell.as_ref().map_or_else(String::new, |v| v.render(spec)))
                    .collect()
            })
            .collect()
    }
}
