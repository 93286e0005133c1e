use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use super::CsvTable;
use crate::error::{Error, Result};
use crate::preprocess::ScalingParams;

/// Dense row-major numeric matrix with column names and customer IDs.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    n_rows: usize,
    column_names: Vec<String>,
    row_ids: Vec<i64>,
    scaling: Option<ScalingParams>,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f64>, column_names: Vec<String>, row_ids: Vec<i64>) -> Result<Self> {
        let n_cols = column_names.len();
        let n_rows = row_ids.len();
        if values.len() != n_rows * n_cols {
            return Err(Error::Dimension {
                expected: n_rows * n_cols,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Encoding(format!(
                "non-finite entry at row {}, column `{}`",
                i / n_cols.max(1),
                column_names[i % n_cols.max(1)]
            )));
        }
        Ok(Self {
            values,
            n_rows,
            column_names,
            row_ids,
            scaling: None,
        })
    }

    /// Build from row vectors. Row IDs default to 0..n.
    pub fn from_rows(rows: &[Vec<f64>], column_names: Vec<String>) -> Result<Self> {
        let d = column_names.len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(values, column_names, (0..rows.len() as i64).collect())
    }

    /// Convenience for anonymous columns named `x0`, `x1`, ...
    pub fn from_unnamed_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        Self::from_rows(rows, (0..d).map(|j| format!("x{j}")).collect())
    }

    pub fn empty(column_names: Vec<String>) -> Self {
        Self {
            values: Vec::new(),
            n_rows: 0,
            column_names,
            row_ids: Vec::new(),
            scaling: None,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row_ids(&self) -> &[i64] {
        &self.row_ids
    }

    pub fn scaling(&self) -> Option<&ScalingParams> {
        self.scaling.as_ref()
    }

    pub fn with_scaling(mut self, scaling: Option<ScalingParams>) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn with_row_ids(mut self, row_ids: Vec<i64>) -> Result<Self> {
        if row_ids.len() != self.n_rows {
            return Err(Error::Dimension {
                expected: self.n_rows,
                got: row_ids.len(),
            });
        }
        self.row_ids = row_ids;
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.column_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_owned(),
            })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Rows at the given positions, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(idx.len() * self.n_cols());
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            values,
            n_rows: idx.len(),
            column_names: self.column_names.clone(),
            row_ids: idx.iter().map(|&i| self.row_ids[i]).collect(),
            scaling: self.scaling.clone(),
        }
    }

    pub fn select_column_indices(&self, cols: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(self.n_rows * cols.len());
        for r in self.rows() {
            values.extend(cols.iter().map(|&j| r[j]));
        }
        FeatureMatrix {
            values,
            n_rows: self.n_rows,
            column_names: cols.iter().map(|&j| self.column_names[j].clone()).collect(),
            row_ids: self.row_ids.clone(),
            scaling: self
                .scaling
                .as_ref()
                .map(|s| s.select(cols.iter().map(|&j| self.column_names[j].as_str()))),
        }
    }

    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureMatrix> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_column_indices(&idx))
    }

    /// Append the rows of `other`, which must have identical columns.
    pub fn vstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        if other.column_names != self.column_names {
            return Err(Error::Dimension {
                expected: self.n_cols(),
                got: other.n_cols(),
            });
        }
        let mut out = self.clone();
        out.values.extend_from_slice(&other.values);
        out.row_ids.extend_from_slice(&other.row_ids);
        out.n_rows += other.n_rows;
        Ok(out)
    }

    /// Number of distinct rows (bitwise comparison of values).
    pub fn distinct_rows(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        for r in self.rows() {
            seen.insert(r.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        }
        seen.len()
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Read a matrix written by [`write_csv`](super::write_csv): an `ID`
    /// column, feature columns, and optionally a 0/1 label column.
    pub fn load_csv(
        path: impl AsRef<Path>,
        label_column: Option<&str>,
        delimiter: u8,
    ) -> Result<(FeatureMatrix, Option<Vec<u8>>)> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .from_reader(file);
        let csv_err = |e| Error::Csv {
            path: path.to_owned(),
            source: e,
        };
        let headers = reader.headers().map_err(csv_err)?.clone();
        let pos: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
        let id_pos = *pos.get("ID").ok_or_else(|| Error::MissingColumn {
            column: "ID".into(),
        })?;
        let label_pos = match label_column {
            Some(l) => Some(*pos.get(l).ok_or_else(|| Error::MissingColumn {
                column: l.to_owned(),
            })?),
            None => None,
        };
        let feature_pos: Vec<usize> = (0..headers.len())
            .filter(|&i| i != id_pos && Some(i) != label_pos)
            .collect();
        let names = feature_pos.iter().map(|&i| headers[i].to_owned()).collect();
        let mut values = Vec::new();
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for (r, rec) in reader.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let line = r + 2;
            let parse_err = |col: usize, expected| Error::Parse {
                line,
                column: headers[col].to_owned(),
                value: rec[col].to_owned(),
                expected,
            };
            ids.push(rec[id_pos].parse::<i64>().map_err(|_| parse_err(id_pos, "integer"))?);
            for &i in &feature_pos {
                values.push(rec[i].parse::<f64>().map_err(|_| parse_err(i, "real"))?);
            }
            if let Some(lp) = label_pos {
                match &rec[lp] {
                    "0" => labels.push(0u8),
                    "1" => labels.push(1u8),
                    _ => return Err(parse_err(lp, "0/1 label")),
                }
            }
        }
        let m = FeatureMatrix::new(values, names, ids)?;
        Ok((m, label_pos.map(|_| labels)))
    }
}

impl CsvTable for FeatureMatrix {
    fn csv_header(&self) -> Vec<String> {
        std::iter::once("ID".to_owned())
            .chain(self.column_names.iter().cloned())
            .collect()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows()
            .zip(&self.row_ids)
            .map(|(r, id)| {
                std::iter::once(id.to_string())
                    .chain(r.iter().map(|x| x.to_string()))
                    .collect()
            })
            .collect()
    }
}
