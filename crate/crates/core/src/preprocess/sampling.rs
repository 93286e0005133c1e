use rand::Rng;
use serde::{Deserialize, Serialize};

use super::check_labels;
use crate::error::{Error, Result};
use crate::seed;
use crate::similarity::sq_euclidean_unchecked;
use crate::tabular::FeatureMatrix;

/// Indices of the `k` nearest other rows of each row (Euclidean, ties by index).
pub(crate) fn nearest_neighbors(m: &FeatureMatrix, k: usize) -> Vec<Vec<usize>> {
    (0..m.n_rows())
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..m.n_rows())
                .filter(|&j| j != i)
                .map(|j| (sq_euclidean_unchecked(m.row(i), m.row(j)), j))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Synthetic minority oversampling. Each output row is `x + lambda * (nn - x)`
/// for a uniformly drawn minority row `x`, one of its `k` nearest minority
/// neighbours `nn`, and `lambda ~ U[0, 1)`. Synthetic rows get negative IDs.
pub fn smote(minority: &FeatureMatrix, k: usize, n_synthetic: usize, seed: u64) -> Result<FeatureMatrix> {
    let n = minority.n_rows();
    if k == 0 || k >= n {
        return Err(Error::Config(format!(
            "smote needs 1 <= k < minority rows ({n}), got k = {k}"
        )));
    }
    let d = minority.n_cols();
    let mut values = Vec::with_capacity(n_synthetic * d);
    if n_synthetic > 0 {
        let neighbors = nearest_neighbors(minority, k);
        let mut rng = seed::rng(seed);
        for _ in 0..n_synthetic {
            let i = rng.random_range(0..n);
            let j = neighbors[i][rng.random_range(0..k)];
            let lambda: f64 = rng.random();
            let (x, nn) = (minority.row(i), minority.row(j));
            values.extend(x.iter().zip(nn).map(|(a, b)| a + lambda * (b - a)));
        }
    }
    FeatureMatrix::new(
        values,
        minority.column_names().to_vec(),
        (1..=n_synthetic as i64).map(|s| -s).collect(),
    )
    .map(|m| m.with_scaling(minority.scaling().cloned()))
}

/// Uniform sample of `keep` rows without replacement, in original row order.
pub fn undersample(majority: &FeatureMatrix, keep: usize, seed: u64) -> Result<FeatureMatrix> {
    if keep > majority.n_rows() {
        return Err(Error::Config(format!(
            "cannot keep {keep} of {} rows",
            majority.n_rows()
        )));
    }
    let mut rng = seed::rng(seed);
    let mut idx = rand::seq::index::sample(&mut rng, majority.n_rows(), keep).into_vec();
    idx.sort_unstable();
    Ok(majority.select_rows(&idx))
}

/// Training-set class balancing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Balance {
    /// Oversample the minority class up to `ratio * majority` rows.
    Smote { k: usize, ratio: f64 },
    /// Keep `minority / ratio` majority rows.
    Undersample { ratio: f64 },
}

impl Default for Balance {
    fn default() -> Self {
        Balance::Smote { k: 5, ratio: 1.0 }
    }
}

/// Rebalance a labelled training set. The minority is the smaller class
/// (class 1 on ties). Original rows come first, in order; synthetic rows
/// follow. SMOTE's `k` is capped at `minority - 1`, and classes with fewer
/// than two rows are left untouched.
pub fn apply_balance(
    x: &FeatureMatrix,
    y: &[u8],
    balance: &Balance,
    seed: u64,
) -> Result<(FeatureMatrix, Vec<u8>)> {
    check_labels(y, x.n_rows())?;
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0).collect();
    let (min_label, min_idx, maj_idx) = if pos.len() <= neg.len() {
        (1u8, pos, neg)
    } else {
        (0u8, neg, pos)
    };
    match *balance {
        Balance::Smote { k, ratio } => {
            if !(ratio > 0.0) {
                return Err(Error::Config("smote ratio must be > 0".into()));
            }
            let target = (ratio * maj_idx.len() as f64).ceil() as usize;
            let n_new = target.saturating_sub(min_idx.len());
            if n_new == 0 || min_idx.len() < 2 {
                return Ok((x.clone(), y.to_vec()));
            }
            let k_eff = k.min(min_idx.len() - 1);
            let synthetic = smote(&x.select_rows(&min_idx), k_eff, n_new, seed)?;
            let mut labels = y.to_vec();
            labels.extend(std::iter::repeat_n(min_label, n_new));
            Ok((x.vstack(&synthetic)?, labels))
        }
        Balance::Undersample { ratio } => {
            if !(ratio > 0.0) {
                return Err(Error::Config("undersample ratio must be > 0".into()));
            }
            let keep = ((min_idx.len() as f64 / ratio).ceil() as usize).min(maj_idx.len());
            let mut rng = seed::rng(seed);
            let mut kept: Vec<usize> = rand::seq::index::sample(&mut rng, maj_idx.len(), keep)
                .into_iter()
                .map(|i| maj_idx[i])
                .chain(min_idx)
                .collect();
            kept.sort_unstable();
            Ok((x.select_rows(&kept), kept.iter().map(|&i| y[i]).collect()))
        }
    }
}
