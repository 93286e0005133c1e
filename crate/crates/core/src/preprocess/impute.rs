use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::sq_euclidean_unchecked;
use crate::tabular::{ColumnKind, Dataset, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum ImputeStrategy {
    Mean,
    Median,
    /// Mean of the `k` nearest rows (Euclidean over `distance_columns`)
    /// among rows where the target column is present.
    Knn { k: usize, distance_columns: Vec<String> },
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Fill missing cells of a numeric column. Integer columns receive the
/// rounded estimate.
pub fn impute(ds: &Dataset, column: &str, strategy: &ImputeStrategy) -> Result<Dataset> {
    let j = ds.column_index(column)?;
    let kind = ds.schema().columns()[j].kind;
    if !kind.is_numeric() {
        return Err(Error::Config(format!("cannot impute non-numeric column `{column}`")));
    }
    let values = ds.numeric_column(column)?;
    let present: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    let missing: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_none()).collect();
    if missing.is_empty() {
        return Ok(ds.clone());
    }
    if present.is_empty() {
        return Err(Error::Impute(format!("column `{column}` has no observed values")));
    }
    let observed: Vec<f64> = present.iter().map(|&i| values[i].unwrap_or_default()).collect();

    let fills: Vec<f64> = match strategy {
        ImputeStrategy::Mean => {
            let m = observed.iter().sum::<f64>() / observed.len() as f64;
            vec![m; missing.len()]
        }
        ImputeStrategy::Median => {
            let m = median(&mut observed.clone());
            vec![m; missing.len()]
        }
        ImputeStrategy::Knn { k, distance_columns } => {
            if *k == 0 || *k > present.len() {
                return Err(Error::Config(format!(
                    "knn imputation needs 1 <= k <= {} complete rows, got k = {k}",
                    present.len()
                )));
            }
            let features: Vec<Vec<f64>> = distance_columns
                .iter()
                .map(|c| ds.complete_numeric_column(c))
                .collect::<Result<_>>()?;
            let point = |i: usize| features.iter().map(|f| f[i]).collect::<Vec<f64>>();
            let donors: Vec<Vec<f64>> = present.iter().map(|&i| point(i)).collect();
            missing
                .iter()
                .map(|&i| {
                    let p = point(i);
                    let mut order: Vec<(f64, usize)> = donors
                        .iter()
                        .enumerate()
                        .map(|(d, q)| (sq_euclidean_unchecked(&p, q), d))
                        .collect();
                    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    order[..*k].iter().map(|&(_, d)| observed[d]).sum::<f64>() / *k as f64
                })
                .collect()
        }
    };

    let mut out = ds.clone();
    for (&i, fill) in missing.iter().zip(fills) {
        let v = match kind {
            ColumnKind::Integer => Value::Int(fill.round() as i64),
            _ => Value::Real(fill),
        };
        out.set_cell(i, j, Some(v));
    }
    Ok(out)
}
