use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, EvalReport, SplitTag};
use crate::error::{Error, Result};
use crate::models::{to_predictions, PredictorSpec};
use crate::preprocess::{apply_balance, check_labels, split_indices, Balance, SplitSpec};
use crate::seed;
use crate::tabular::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    pub balance: Option<Balance>,
    pub threshold: f64,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            balance: None,
            threshold: 0.5,
        }
    }
}

/// Train and test scores for one fold. The train report is computed on the
/// fold's original training rows, before any balancing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub n_train_balanced: usize,
    pub train: EvalReport,
    pub test: EvalReport,
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped so fold sizes stay even.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if folds > labels.len() {
        return Err(Error::Protocol(format!(
            "{folds} folds requested for {} rows",
            labels.len()
        )));
    }
    let mut rng = seed::rng(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < 2 {
            return Err(Error::Protocol(format!(
                "class {class} has {} rows; cross-validation needs at least 2 per class",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = next;
            next = (next + 1) % folds;
        }
    }
    Ok(assignment)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn fit_and_score(
    spec: &PredictorSpec,
    m: &FeatureMatrix,
    labels: &[u8],
    train: &[usize],
    test: &[usize],
    balance: Option<&Balance>,
    balance_seed: u64,
    threshold: f64,
    test_tag: SplitTag,
) -> Result<(usize, EvalReport, EvalReport)> {
    let x_train = m.select_rows(train);
    let y_train: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
    let x_test = m.select_rows(test);
    let y_test: Vec<u8> = test.iter().map(|&i| labels[i]).collect();
    let (x_fit, y_fit) = match balance {
        Some(b) => apply_balance(&x_train, &y_train, b, balance_seed)?,
        None => (x_train.clone(), y_train.clone()),
    };
    let model = spec.fit(&x_fit, &y_fit)?;
    let score = |x: &FeatureMatrix, y: &[u8], tag| -> Result<EvalReport> {
        let pred: Vec<u8> = to_predictions(&model.predict_proba(x)?, threshold)
            .iter()
            .map(|p| p.label)
            .collect();
        evaluate(y, &pred, tag)
    };
    let train_report = score(&x_train, &y_train, SplitTag::Train)?;
    let test_report = score(&x_test, &y_test, test_tag)?;
    Ok((y_fit.len(), train_report, test_report))
}

pub fn cross_validate_with(
    spec: &PredictorSpec,
    m: &FeatureMatrix,
    labels: &[u8],
    opts: &CvOptions,
) -> Result<Vec<FoldReport>> {
    check_labels(labels, m.n_rows())?;
    if !(0.0..=1.0).contains(&opts.threshold) {
        return Err(Error::Config(format!("threshold must be in [0, 1], got {}", opts.threshold)));
    }
    let assignment = stratified_folds(labels, opts.folds, seed::derive(opts.seed, &[0]))?;
    (0..opts.folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] != f).collect();
            let test: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] == f).collect();
            let (n_train_balanced, train_report, test_report) = fit_and_score(
                spec,
                m,
                labels,
                &train,
                &test,
                opts.balance.as_ref(),
                seed::derive(opts.seed, &[1, f as u64]),
                opts.threshold,
                SplitTag::Fold(f),
            )?;
            Ok(FoldReport {
                fold: f,
                train_indices: train,
                test_indices: test,
                n_train_balanced,
                train: train_report,
                test: test_report,
            })
        })
        .collect()
}

/// Stratified k-fold cross-validation at threshold 0.5. Balancing, when
/// given, touches only the training part of each fold.
pub fn cross_validate(
    spec: &PredictorSpec,
    m: &FeatureMatrix,
    labels: &[u8],
    folds: usize,
    seed: u64,
    balance: Option<&Balance>,
) -> Result<Vec<FoldReport>> {
    cross_validate_with(
        spec,
        m,
        labels,
        &CvOptions {
            folds,
            seed,
            balance: balance.copied(),
            threshold: 0.5,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub n_train_balanced: usize,
    pub train: EvalReport,
    pub test: EvalReport,
}

/// One train/test split, fitted on the (optionally balanced) training part.
pub fn evaluate_split(
    spec: &PredictorSpec,
    m: &FeatureMatrix,
    labels: &[u8],
    split: &SplitSpec,
    balance: Option<&Balance>,
    threshold: f64,
) -> Result<SplitReport> {
    check_labels(labels, m.n_rows())?;
    let (train, test) = split_indices(labels, split)?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Protocol("split left an empty train or test part".into()));
    }
    let (n_train_balanced, train_report, test_report) = fit_and_score(
        spec,
        m,
        labels,
        &train,
        &test,
        balance,
        seed::derive(split.seed, &[1]),
        threshold,
        SplitTag::Test,
    )?;
    Ok(SplitReport {
        train_indices: train,
        test_indices: test,
        n_train_balanced,
        train: train_report,
        test: test_report,
    })
}
