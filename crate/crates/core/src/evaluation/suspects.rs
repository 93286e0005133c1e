use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{stratified_folds, CvOptions};
use crate::error::{Error, Result};
use crate::models::PredictorSpec;
use crate::preprocess::{apply_balance, check_labels};
use crate::seed;
use crate::tabular::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspectRow {
    pub row: usize,
    pub id: i64,
    pub label: u8,
    /// Out-of-fold probability of class 1.
    pub probability: f64,
}

/// Rows whose label disagrees with an out-of-fold baseline prediction.
/// Nothing is removed; callers decide what to do with the list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MislabelReport {
    pub baseline: String,
    pub folds: usize,
    pub threshold: f64,
    pub n_rows: usize,
    /// Sorted by distance from the given label, most confident first.
    pub flagged: Vec<SuspectRow>,
}

pub fn flag_mislabeled(
    spec: &PredictorSpec,
    m: &FeatureMatrix,
    labels: &[u8],
    opts: &CvOptions,
) -> Result<MislabelReport> {
    check_labels(labels, m.n_rows())?;
    if !(0.0..=1.0).contains(&opts.threshold) {
        return Err(Error::Config(format!("threshold must be in [0, 1], got {}", opts.threshold)));
    }
    let assignment = stratified_folds(labels, opts.folds, seed::derive(opts.seed, &[0]))?;
    let per_fold = (0..opts.folds)
        .into_par_iter()
        .map(|f| -> Result<Vec<(usize, f64)>> {
            let train: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] != f).collect();
            let test: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] == f).collect();
            let x = m.select_rows(&train);
            let y: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
            let (x, y) = match &opts.balance {
                Some(b) => apply_balance(&x, &y, b, seed::derive(opts.seed, &[1, f as u64]))?,
                None => (x, y),
            };
            let p = spec.fit(&x, &y)?.predict_proba(&m.select_rows(&test))?;
            Ok(test.into_iter().zip(p).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut oof = vec![0.0; labels.len()];
    for (i, p) in per_fold.into_iter().flatten() {
        oof[i] = p;
    }
    let mut flagged: Vec<SuspectRow> = (0..labels.len())
        .filter(|&i| u8::from(oof[i] >= opts.threshold) != labels[i])
        .map(|i| SuspectRow {
            row: i,
            id: m.row_ids()[i],
            label: labels[i],
            probability: oof[i],
        })
        .collect();
    let gap = |s: &SuspectRow| (s.probability - f64::from(s.label)).abs();
    flagged.sort_by(|a, b| gap(b).total_cmp(&gap(a)).then(a.row.cmp(&b.row)));
    Ok(MislabelReport {
        baseline: spec.label(),
        folds: opts.folds,
        threshold: opts.threshold,
        n_rows: labels.len(),
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LogregParams;

    #[test]
    fn flips_are_flagged() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![i as f64 / 59.0]).collect();
        let mut y: Vec<u8> = (0..60).map(|i| u8::from(i >= 30)).collect();
        y[3] = 1;
        y[55] = 0;
        let m = FeatureMatrix::from_unnamed_rows(&rows).unwrap();
        let spec = PredictorSpec::logreg(LogregParams::default());
        let rep = flag_mislabeled(&spec, &m, &y, &CvOptions::default()).unwrap();
        let rows: Vec<usize> = rep.flagged.iter().map(|s| s.row).collect();
        assert!(rows.contains(&3) && rows.contains(&55), "{rows:?}");
        assert!(rows.len() <= 6, "{rows:?}");
        assert_eq!(rep, flag_mislabeled(&spec, &m, &y, &CvOptions::default()).unwrap());
    }
}
