//! Schemas, datasets, CSV ingestion/serialization and feature encoding.

mod dataset;
mod encode;
mod matrix;
mod schema;
mod value;

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use dataset::{load_table, Dataset, Provenance, Row};
pub use encode::{encode_features, Encoding};
pub use matrix::FeatureMatrix;
pub use schema::{
    ColumnKind, ColumnSpec, Schema, CHANNEL_PURCHASE_COLUMNS, DEFAULT_DATE_FORMAT,
    FALLBACK_DATE_FORMAT, MNT_COLUMNS,
};
pub use value::Value;

pub(crate) use value::epoch;

use crate::error::{Error, Result};

/// Anything that can be written as a header plus string records.
pub trait CsvTable {
    fn csv_header(&self) -> Vec<String>;
    fn csv_rows(&self) -> Vec<Vec<String>>;
}

/// Free-form report table (leaderboards, curves, per-cluster summaries).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ReportTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(|s| s.to_string()).collect());
    }
}

impl CsvTable for ReportTable {
    fn csv_header(&self) -> Vec<String> {
        self.header.clone()
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows.clone()
    }
}

pub fn write_csv<T: CsvTable + ?Sized>(table: &T, path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(file);
    let err = |e: csv::Error| Error::Csv {
        path: path.to_owned(),
        source: e,
    };
    w.write_record(table.csv_header()).map_err(err)?;
    for row in table.csv_rows() {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
