use super::check_labels;
use crate::error::{Error, Result};
use crate::evaluation::cross_validate;
use crate::models::PredictorSpec;
use crate::tabular::FeatureMatrix;

/// Columns whose population variance exceeds `threshold`, in original order.
pub fn select_features_filter(m: &FeatureMatrix, threshold: f64) -> Result<Vec<String>> {
    if !(threshold >= 0.0) {
        return Err(Error::Config(format!("variance threshold must be >= 0, got {threshold}")));
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let n = m.n_rows() as f64;
    Ok(m.column_names()
        .iter()
        .enumerate()
        .filter(|(j, _)| {
            let c = m.column(*j);
            let mean = c.iter().sum::<f64>() / n;
            let var = c.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            var > threshold
        })
        .map(|(_, name)| name.clone())
        .collect())
}

/// Minimum gain in mean cross-validated MCC for a column to be added.
pub const WRAPPER_MIN_GAIN: f64 = 1e-6;

pub(crate) fn cv_mcc(
    spec: &PredictorSpec,
    m: &FeatureMatrix,
    labels: &[u8],
    cols: &[usize],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let sub = m.select_column_indices(cols);
    let reports = cross_validate(spec, &sub, labels, folds, seed, None)?;
    Ok(reports.iter().map(|f| f.test.mcc).sum::<f64>() / reports.len() as f64)
}

/// Greedy forward selection maximising mean cross-validated MCC. Starts from
/// the empty set (score 0, the MCC of a constant predictor) and stops when
/// no column improves the score by more than [`WRAPPER_MIN_GAIN`]. Ties go
/// to the lower column index.
pub fn select_features_wrapper(
    m: &FeatureMatrix,
    labels: &[u8],
    spec: &PredictorSpec,
    folds: usize,
    seed: u64,
) -> Result<Vec<String>> {
    check_labels(labels, m.n_rows())?;
    if folds < 2 {
        return Err(Error::Config("wrapper selection needs at least 2 folds".into()));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::Selection("labels contain a single class".into()));
    }
    let mut selected: Vec<usize> = Vec::new();
    let mut best = 0.0;
    loop {
        let mut round_best: Option<(f64, usize)> = None;
        for j in 0..m.n_cols() {
            if selected.contains(&j) {
                continue;
            }
            let mut cols = selected.clone();
            cols.push(j);
            let score = cv_mcc(spec, m, labels, &cols, folds, seed)?;
            if round_best.is_none_or(|(s, _)| score > s) {
                round_best = Some((score, j));
            }
        }
        match round_best {
            Some((score, j)) if score > best + WRAPPER_MIN_GAIN => {
                selected.push(j);
                best = score;
            }
            _ => break,
        }
    }
    Ok(selected.into_iter().map(|j| m.column_names()[j].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_examples() {
        let m = FeatureMatrix::from_unnamed_rows(&[
            vec![3.0, 0.0, 1.0],
            vec![3.0, 1.0, 1.0],
            vec![3.0, 0.0, 1.0],
            vec![3.0, 1.0, 1.0],
        ])
        .unwrap();
        assert_eq!(select_features_filter(&m, 0.1).unwrap(), vec!["x1"]);
        assert_eq!(select_features_filter(&m, 0.0).unwrap(), vec!["x1"]);
        assert!(select_features_filter(&m, 0.25).unwrap().is_empty());
        assert!(select_features_filter(&m, -1.0).is_err());
        assert!(select_features_filter(&FeatureMatrix::empty(vec!["a".into()]), 0.0).unwrap().is_empty());
    }
}
