use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::check_labels;
use crate::error::{Error, Result};
use crate::seed;
use crate::tabular::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    #[serde(default = "default_true")]
    pub stratify: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPart {
    pub x: FeatureMatrix,
    pub y: Vec<u8>,
    /// Row positions in the source matrix.
    pub rows: Vec<usize>,
}

/// Train/test row positions, each sorted ascending. The test part receives
/// `floor(n * test_fraction)` rows; under stratification the per-class test
/// counts are floors of the class shares plus largest-remainder top-up.
pub fn split_indices(labels: &[u8], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test_fraction must lie in (0, 1), got {}",
            spec.test_fraction
        )));
    }
    check_labels(labels, labels.len())?;
    let n = labels.len();
    let n_test = (n as f64 * spec.test_fraction).floor() as usize;
    let mut rng = seed::rng(spec.seed);
    let mut test = Vec::with_capacity(n_test);

    if spec.stratify {
        let mut classes: Vec<Vec<usize>> = vec![Vec::new(), Vec::new()];
        for (i, &l) in labels.iter().enumerate() {
            classes[l as usize].push(i);
        }
        for (c, members) in classes.iter().enumerate() {
            if members.len() < 2 {
                return Err(Error::Split(format!(
                    "class {c} has {} member(s); stratification needs at least 2",
                    members.len()
                )));
            }
        }
        let exact: Vec<f64> = classes
            .iter()
            .map(|m| m.len() as f64 * spec.test_fraction)
            .collect();
        let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let mut short = n_test.saturating_sub(quota.iter().sum());
        let mut by_remainder: Vec<usize> = vec![0, 1];
        by_remainder.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
        for &c in by_remainder.iter().cycle() {
            if short == 0 {
                break;
            }
            if quota[c] < classes[c].len() {
                quota[c] += 1;
                short -= 1;
            }
        }
        for (members, q) in classes.iter_mut().zip(quota) {
            members.shuffle(&mut rng);
            test.extend_from_slice(&members[..q]);
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        test.extend_from_slice(&idx[..n_test]);
    }

    let mut in_test = vec![false; n];
    for &i in &test {
        in_test[i] = true;
    }
    test.sort_unstable();
    let train = (0..n).filter(|&i| !in_test[i]).collect();
    Ok((train, test))
}

pub fn split(m: &FeatureMatrix, labels: &[u8], spec: &SplitSpec) -> Result<(LabeledPart, LabeledPart)> {
    check_labels(labels, m.n_rows())?;
    let (train, test) = split_indices(labels, spec)?;
    let part = |rows: Vec<usize>| LabeledPart {
        x: m.select_rows(&rows),
        y: rows.iter().map(|&i| labels[i]).collect(),
        rows,
    };
    Ok((part(train), part(test)))
}
