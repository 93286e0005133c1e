use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::matrix::FeatureMatrix;
use super::schema::ColumnKind;
use super::value::Value;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Copy the numeric value (booleans as 0/1, dates as days since epoch).
    Numeric,
    /// One indicator column per observed category, named `col=value`,
    /// categories in lexicographic order.
    OneHot,
    /// Map categories to 0..c-1 following the given order.
    Ordinal(Vec<String>),
}

/// Turn dataset columns into a dense feature matrix. Columns absent from
/// `encoding` default to [`Encoding::Numeric`].
pub fn encode_features<S: AsRef<str>>(
    ds: &Dataset,
    columns: &[S],
    encoding: &BTreeMap<String, Encoding>,
) -> Result<FeatureMatrix> {
    let n = ds.n_rows();
    let mut names = Vec::new();
    let mut blocks: Vec<Vec<f64>> = Vec::new();

    for col in columns {
        let col = col.as_ref();
        let spec = ds.column_spec(col)?;
        let cells: Vec<&Value> = ds
            .column(col)?
            .map(|v| {
                v.ok_or_else(|| Error::IncompleteData {
                    column: col.to_owned(),
                })
            })
            .collect::<Result<_>>()?;
        let enc = encoding.get(col).unwrap_or(&Encoding::Numeric);
        match enc {
            Encoding::Numeric => {
                if spec.kind == ColumnKind::Categorical {
                    return Err(Error::Encoding(format!(
                        "categorical column `{col}` needs one_hot or ordinal encoding"
                    )));
                }
                names.push(col.to_owned());
                blocks.push(cells.iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).collect());
            }
            Encoding::OneHot => {
                let cats: BTreeSet<String> = cells.iter().map(|v| v.to_string()).collect();
                for cat in &cats {
                    names.push(format!("{col}={cat}"));
                    blocks.push(
                        cells
                            .iter()
                            .map(|v| if v.to_string() == *cat { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
            }
            Encoding::Ordinal(order) => {
                let rank: BTreeMap<&str, usize> =
                    order.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
                let mut col_values = Vec::with_capacity(n);
                for v in &cells {
                    let key = v.to_string();
                    let r = rank.get(key.as_str()).ok_or_else(|| {
                        Error::Encoding(format!(
                            "category {key:?} of `{col}` is not in the ordinal order"
                        ))
                    })?;
                    col_values.push(*r as f64);
                }
                names.push(col.to_owned());
                blocks.push(col_values);
            }
        }
    }

    let d = names.len();
    let mut values = vec![0.0; n * d];
    for (j, block) in blocks.iter().enumerate() {
        for (i, &x) in block.iter().enumerate() {
            values[i * d + j] = x;
        }
    }
    FeatureMatrix::new(values, names, ds.row_ids()?)
}
