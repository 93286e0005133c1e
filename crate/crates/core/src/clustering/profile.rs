use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::quantile;
use crate::tabular::{ColumnKind, Dataset, ReportTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileOptions {
    pub marital_column: String,
    pub relationship_values: Vec<String>,
    pub education_column: String,
    pub bachelor_plus_values: Vec<String>,
    /// Numeric columns left out of the per-cluster statistics.
    pub exclude: Vec<String>,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        Self {
            marital_column: "Marital_Status".into(),
            relationship_values: s(&["Married", "Together"]),
            education_column: "Education".into(),
            bachelor_plus_values: s(&["Graduation", "2n Cycle", "Master", "PhD"]),
            exclude: s(&["ID"]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSummary {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub cluster: usize,
    pub size: usize,
    pub share: f64,
    pub numeric: BTreeMap<String, NumericSummary>,
    pub categorical: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallShares {
    pub rows: usize,
    /// Share of rows whose marital status counts as a relationship.
    pub relationship: Option<f64>,
    /// Share of rows with at least a bachelor-level education.
    pub bachelor_plus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentProfile {
    pub clusters: Vec<ClusterProfile>,
    pub overall: OverallShares,
}

fn summarize(values: &[f64], missing: usize) -> Option<NumericSummary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(NumericSummary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        median: quantile(&sorted, 0.5),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        missing,
    })
}

/// Share of non-missing cells of `column` whose text is in `members`.
fn group_share(ds: &Dataset, column: &str, members: &[String]) -> Option<f64> {
    let values: Vec<&str> = ds.column(column).ok()?.flatten().filter_map(|v| v.as_text()).collect();
    if values.is_empty() {
        return None;
    }
    let set: BTreeSet<&str> = members.iter().map(String::as_str).collect();
    Some(values.iter().filter(|v| set.contains(*v)).count() as f64 / values.len() as f64)
}

pub fn profile_segments(ds: &Dataset, labels: &[usize]) -> Result<SegmentProfile> {
    profile_segments_with(ds, labels, &ProfileOptions::default())
}

pub fn profile_segments_with(ds: &Dataset, labels: &[usize], opts: &ProfileOptions) -> Result<SegmentProfile> {
    if labels.len() != ds.n_rows() {
        return Err(Error::Dimension {
            expected: ds.n_rows(),
            got: labels.len(),
        });
    }
    let n = ds.n_rows();
    let k = labels.iter().max().map_or(0, |&l| l + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let mut clusters = Vec::with_capacity(k);
    for (c, rows) in members.iter().enumerate() {
        let mut numeric = BTreeMap::new();
        let mut categorical = BTreeMap::new();
        for (j, spec) in ds.schema().columns().iter().enumerate() {
            if opts.exclude.contains(&spec.name) {
                continue;
            }
            match spec.kind {
                ColumnKind::Integer | ColumnKind::Real | ColumnKind::Boolean => {
                    let cells: Vec<Option<f64>> =
                        rows.iter().map(|&i| ds.cell(i, j).and_then(|v| v.as_f64())).collect();
                    let present: Vec<f64> = cells.iter().flatten().copied().collect();
                    if let Some(s) = summarize(&present, cells.len() - present.len()) {
                        numeric.insert(spec.name.clone(), s);
                    }
                }
                ColumnKind::Categorical => {
                    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
                    let mut total = 0;
                    for &i in rows {
                        if let Some(t) = ds.cell(i, j).and_then(|v| v.as_text()) {
                            *counts.entry(t.to_string()).or_default() += 1;
                            total += 1;
                        }
                    }
                    let shares = counts.into_iter().map(|(v, c)| (v, c as f64 / total as f64)).collect();
                    categorical.insert(spec.name.clone(), shares);
                }
                ColumnKind::Date => {}
            }
        }
        clusters.push(ClusterProfile {
            cluster: c,
            size: rows.len(),
            share: if n == 0 { 0.0 } else { rows.len() as f64 / n as f64 },
            numeric,
            categorical,
        });
    }
    Ok(SegmentProfile {
        clusters,
        overall: OverallShares {
            rows: n,
            relationship: group_share(ds, &opts.marital_column, &opts.relationship_values),
            bachelor_plus: group_share(ds, &opts.education_column, &opts.bachelor_plus_values),
        },
    })
}

/// One row per cluster: size, share and the mean of each numeric column.
pub fn profile_table(profile: &SegmentProfile) -> ReportTable {
    let columns: BTreeSet<&String> = profile.clusters.iter().flat_map(|c| c.numeric.keys()).collect();
    let header = ["cluster", "size", "share"]
        .into_iter()
        .map(String::from)
        .chain(columns.iter().map(|c| format!("mean_{c}")));
    let mut t = ReportTable::new(header);
    for c in &profile.clusters {
        let mut row = vec![c.cluster.to_string(), c.size.to_string(), c.share.to_string()];
        row.extend(columns.iter().map(|col| c.numeric.get(*col).map_or(String::new(), |s| s.mean.to_string())));
        t.push(row);
    }
    t
}
