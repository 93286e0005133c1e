use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{cross_validate_with, evaluate_split, CvOptions};
use crate::error::{Error, Result};
use crate::models::PredictorSpec;
use crate::preprocess::{Balance, SplitSpec};
use crate::seed;
use crate::tabular::{FeatureMatrix, ReportTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Protocol {
    pub folds: usize,
    pub seed: u64,
    pub balance: Option<Balance>,
    /// Number of independent partitions; each gets a derived seed.
    pub repeats: usize,
    pub threshold: f64,
    /// When set, each repeat is a single stratified split with this test
    /// share instead of k-fold cross-validation.
    pub test_fraction: Option<f64>,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            balance: None,
            repeats: 1,
            threshold: 0.5,
            test_fraction: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Spread {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Spread {
            mean,
            sd,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Scores of one spec on one partition cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub repeat: usize,
    pub fold: usize,
    pub train_mcc: f64,
    pub train_accuracy: f64,
    pub test_mcc: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub name: String,
    pub spec: PredictorSpec,
    pub test_mcc: Spread,
    pub test_accuracy: Spread,
    pub train_mcc: Spread,
    pub train_accuracy: Spread,
    pub runs: Vec<RunScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub protocol: Protocol,
    /// One entry per spec, in input order.
    pub entries: Vec<ComparisonEntry>,
    /// Indices into `entries`, best first.
    pub ranking: Vec<usize>,
}

impl ComparisonReport {
    pub fn best(&self) -> &ComparisonEntry {
        &self.entries[self.ranking[0]]
    }

    pub fn leaderboard(&self) -> ReportTable {
        let mut t = ReportTable::new([
            "rank",
            "name",
            "family",
            "mean_test_mcc",
            "sd_test_mcc",
            "min_test_mcc",
            "max_test_mcc",
            "mean_test_accuracy",
            "sd_test_accuracy",
            "mean_train_mcc",
            "mean_train_accuracy",
        ]);
        for (rank, &i) in self.ranking.iter().enumerate() {
            let e = &self.entries[i];
            t.push([
                (rank + 1).to_string(),
                e.name.clone(),
                e.spec.family.name().to_string(),
                e.test_mcc.mean.to_string(),
                e.test_mcc.sd.to_string(),
                e.test_mcc.min.to_string(),
                e.test_mcc.max.to_string(),
                e.test_accuracy.mean.to_string(),
                e.test_accuracy.sd.to_string(),
                e.train_mcc.mean.to_string(),
                e.train_accuracy.mean.to_string(),
            ]);
        }
        t
    }
}

fn runs_for(spec: &PredictorSpec, m: &FeatureMatrix, labels: &[u8], p: &Protocol) -> Result<Vec<RunScore>> {
    let mut runs = Vec::new();
    for r in 0..p.repeats {
        let s = seed::derive(p.seed, &[r as u64]);
        match p.test_fraction {
            Some(f) => {
                let split = SplitSpec {
                    test_fraction: f,
                    stratify: true,
                    seed: s,
                };
                let rep = evaluate_split(spec, m, labels, &split, p.balance.as_ref(), p.threshold)?;
                runs.push(RunScore {
                    repeat: r,
                    fold: 0,
                    train_mcc: rep.train.mcc,
                    train_accuracy: rep.train.accuracy,
                    test_mcc: rep.test.mcc,
                    test_accuracy: rep.test.accuracy,
                });
            }
            None => {
                let opts = CvOptions {
                    folds: p.folds,
                    seed: s,
                    balance: p.balance,
                    threshold: p.threshold,
                };
                for f in cross_validate_with(spec, m, labels, &opts)? {
                    runs.push(RunScore {
                        repeat: r,
                        fold: f.fold,
                        train_mcc: f.train.mcc,
                        train_accuracy: f.train.accuracy,
                        test_mcc: f.test.mcc,
                        test_accuracy: f.test.accuracy,
                    });
                }
            }
        }
    }
    Ok(runs)
}

/// Scores of one spec under `protocol`, summarized over all runs.
pub fn evaluate_protocol(
    spec: &PredictorSpec,
    m: &FeatureMatrix,
    labels: &[u8],
    protocol: &Protocol,
) -> Result<ComparisonEntry> {
    if protocol.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let runs = runs_for(spec, m, labels, protocol)?;
    let col = |f: fn(&RunScore) -> f64| Spread::of(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(ComparisonEntry {
        name: spec.label(),
        spec: spec.clone(),
        test_mcc: col(|r| r.test_mcc),
        test_accuracy: col(|r| r.test_accuracy),
        train_mcc: col(|r| r.train_mcc),
        train_accuracy: col(|r| r.train_accuracy),
        runs,
    })
}

/// Rank order: mean test MCC, then mean test accuracy, then input order.
pub fn rank_entries(entries: &[ComparisonEntry]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&entries[a], &entries[b]);
        y.test_mcc
            .mean
            .total_cmp(&x.test_mcc.mean)
            .then(y.test_accuracy.mean.total_cmp(&x.test_accuracy.mean))
            .then(a.cmp(&b))
    });
    order
}

/// Evaluate every spec on the same partitions and rank them.
pub fn compare_models(
    specs: &[PredictorSpec],
    m: &FeatureMatrix,
    labels: &[u8],
    protocol: &Protocol,
) -> Result<ComparisonReport> {
    if specs.len() < 2 {
        return Err(Error::Config("model comparison needs at least two specs".into()));
    }
    if protocol.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let entries = specs
        .par_iter()
        .map(|spec| evaluate_protocol(spec, m, labels, protocol))
        .collect::<Result<Vec<_>>>()?;
    let ranking = rank_entries(&entries);
    Ok(ComparisonReport {
        protocol: protocol.clone(),
        entries,
        ranking,
    })
}
