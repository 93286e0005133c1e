use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{Dataset, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RuleKind {
    /// Later rows repeating an earlier key value.
    DedupOnKey { column: String },
    /// Values outside `[min, max]`.
    RangeBound { column: String, min: f64, max: f64 },
    /// Values outside `[Q1 - k*IQR, Q3 + k*IQR]`.
    QuantileFence { column: String, k_iqr: f64 },
    /// Birth years implying an age above `max_age` (or below zero) at `reference_year`.
    ImpossibleAge {
        birth_column: String,
        reference_year: i64,
        max_age: i64,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleAction {
    #[default]
    DropRow,
    FlagOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningRule {
    #[serde(flatten)]
    pub kind: RuleKind,
    #[serde(default)]
    pub action: RuleAction,
}

impl CleaningRule {
    pub fn drop(kind: RuleKind) -> Self {
        Self {
            kind,
            action: RuleAction::DropRow,
        }
    }

    pub fn flag(kind: RuleKind) -> Self {
        Self {
            kind,
            action: RuleAction::FlagOnly,
        }
    }

    fn validate(&self, ds: &Dataset) -> Result<()> {
        let column = match &self.kind {
            RuleKind::DedupOnKey { column } => column,
            RuleKind::RangeBound { column, min, max } => {
                if min > max {
                    return Err(Error::Config(format!("range_bound on `{column}`: min > max")));
                }
                column
            }
            RuleKind::QuantileFence { column, k_iqr } => {
                if !(*k_iqr > 0.0) {
                    return Err(Error::Config(format!("quantile_fence on `{column}`: k_iqr must be > 0")));
                }
                column
            }
            RuleKind::ImpossibleAge {
                birth_column,
                max_age,
                ..
            } => {
                if *max_age <= 0 {
                    return Err(Error::Config("impossible_age: max_age must be > 0".into()));
                }
                birth_column
            }
        };
        ds.column_index(column)
            .map(|_| ())
            .map_err(|_| Error::Config(format!("cleaning rule references absent column `{column}`")))
    }
}

impl fmt::Display for CleaningRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RuleKind::DedupOnKey { column } => write!(f, "dedup_on_key({column})"),
            RuleKind::RangeBound { column, min, max } => {
                write!(f, "range_bound({column}, {min}, {max})")
            }
            RuleKind::QuantileFence { column, k_iqr } => {
                write!(f, "quantile_fence({column}, {k_iqr})")
            }
            RuleKind::ImpossibleAge {
                birth_column,
                reference_year,
                max_age,
            } => write!(f, "impossible_age({birth_column}, {reference_year}, {max_age})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleOutcome {
    pub rule: String,
    pub matched: usize,
    pub dropped: usize,
    /// IDs of matched rows when the action is flag-only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flagged: Vec<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rows_before: usize,
    pub rows_after: usize,
    pub rules: Vec<RuleOutcome>,
}

/// Linear-interpolation quantile of sorted data (the "type 7" estimator).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn matches(ds: &Dataset, kind: &RuleKind) -> Result<Vec<bool>> {
    Ok(match kind {
        RuleKind::DedupOnKey { column } => {
            let mut seen = HashSet::new();
            ds.column(column)?
                .map(|v| match v {
                    Some(v) => !seen.insert(v.to_string()),
                    None => false,
                })
                .collect()
        }
        RuleKind::RangeBound { column, min, max } => ds
            .numeric_column(column)?
            .into_iter()
            .map(|v| v.is_some_and(|x| x < *min || x > *max))
            .collect(),
        RuleKind::QuantileFence { column, k_iqr } => {
            let col = ds.numeric_column(column)?;
            let mut present: Vec<f64> = col.iter().flatten().copied().collect();
            if present.is_empty() {
                return Ok(vec![false; col.len()]);
            }
            present.sort_by(f64::total_cmp);
            let (q1, q3) = (quantile(&present, 0.25), quantile(&present, 0.75));
            let iqr = q3 - q1;
            let (lo, hi) = (q1 - k_iqr * iqr, q3 + k_iqr * iqr);
            col.into_iter()
                .map(|v| v.is_some_and(|x| x < lo || x > hi))
                .collect()
        }
        RuleKind::ImpossibleAge {
            birth_column,
            reference_year,
            max_age,
        } => ds
            .column(birth_column)?
            .map(|v| {
                v.and_then(Value::as_f64).is_some_and(|year| {
                    let age = *reference_year as f64 - year;
                    age > *max_age as f64 || age < 0.0
                })
            })
            .collect(),
    })
}

/// Apply cleaning rules in order. Each rule sees the rows surviving the
/// previous ones.
pub fn clean(ds: &Dataset, rules: &[CleaningRule]) -> Result<(Dataset, CleaningReport)> {
    for r in rules {
        r.validate(ds)?;
    }
    let mut current = ds.clone();
    let mut report = CleaningReport {
        rows_before: ds.n_rows(),
        ..Default::default()
    };
    for rule in rules {
        let hit = matches(&current, &rule.kind)?;
        let matched = hit.iter().filter(|&&h| h).count();
        let mut outcome = RuleOutcome {
            rule: rule.to_string(),
            matched,
            dropped: 0,
            flagged: Vec::new(),
        };
        match rule.action {
            RuleAction::DropRow => {
                let keep: Vec<bool> = hit.iter().map(|h| !h).collect();
                current = current.retain_rows(&keep);
                outcome.dropped = matched;
            }
            RuleAction::FlagOnly => {
                let ids = current.row_ids()?;
                outcome.flagged = ids.into_iter().zip(&hit).filter(|(_, &h)| h).map(|(id, _)| id).collect();
            }
        }
        report.rules.push(outcome);
    }
    report.rows_after = current.n_rows();
    Ok((current, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{ColumnSpec, Schema};

    fn ds(ids: &[i64], births: &[i64], incomes: &[Option<f64>]) -> Dataset {
        let schema = Schema::new(vec![
            ColumnSpec::integer("ID"),
            ColumnSpec::integer("Year_Birth"),
            ColumnSpec::real("Income").nullable(),
        ])
        .unwrap();
        let rows = ids
            .iter()
            .zip(births)
            .zip(incomes)
            .map(|((&i, &b), &inc)| vec![Some(Value::Int(i)), Some(Value::Int(b)), inc.map(Value::Real)])
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    #[test]
    fn impossible_age_drops_old_birth_year() {
        let d = ds(&[1, 2, 3], &[1893, 1970, 1985], &[Some(1.0); 3]);
        let rule = CleaningRule::drop(RuleKind::ImpossibleAge {
            birth_column: "Year_Birth".into(),
            reference_year: 2014,
            max_age: 100,
        });
        let (out, report) = clean(&d, &[rule]).unwrap();
        assert_eq!(out.row_ids().unwrap(), vec![2, 3]);
        assert_eq!(report.rules[0].dropped, 1);
        assert_eq!(report.rules[0].rule, "impossible_age(Year_Birth, 2014, 100)");
        assert_eq!(out.provenance().rows_retained, 2);
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let d = ds(&[7, 8, 7], &[1970, 1971, 1972], &[Some(1.0); 3]);
        let (out, report) = clean(
            &d,
            &[CleaningRule::drop(RuleKind::DedupOnKey { column: "ID".into() })],
        )
        .unwrap();
        assert_eq!(out.n_rows(), 2);
        assert_eq!(out.cell(0, 1), Some(&Value::Int(1970)));
        assert_eq!((report.rows_before, report.rows_after), (3, 2));
    }

    /// Tukey hinges: medians of the lower and upper halves.
    fn hinge_oracle(values: &[f64]) -> (f64, f64) {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let median = |s: &[f64]| {
            let n = s.len();
            if n % 2 == 1 { s[n / 2] } else { (s[n / 2 - 1] + s[n / 2]) / 2.0 }
        };
        let half = v.len().div_ceil(2);
        (median(&v[..half]), median(&v[v.len() - half..]))
    }

    #[test]
    fn quantile_fence_flags_outlier() {
        let incomes = [10.0, 11.0, 12.0, 13.0, 1000.0];
        let (q1, q3) = hinge_oracle(&incomes);
        let (lo, hi) = (q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1));
        let expected: Vec<i64> = (1..=5).zip(incomes).filter(|(_, x)| *x < lo || *x > hi).map(|(i, _)| i).collect();
        assert_eq!(expected, vec![5]);

        let d = ds(&[1, 2, 3, 4, 5], &[1970; 5], &incomes.map(Some));
        let rule = CleaningRule::flag(RuleKind::QuantileFence {
            column: "Income".into(),
            k_iqr: 1.5,
        });
        let (out, report) = clean(&d, &[rule]).unwrap();
        assert_eq!(out.n_rows(), 5);
        assert_eq!(report.rules[0].flagged, expected);
        assert_eq!(report.rules[0].dropped, 0);
    }

    #[test]
    fn rules_validated() {
        let d = ds(&[1], &[1970], &[None]);
        let bad = CleaningRule::drop(RuleKind::DedupOnKey { column: "Nope".into() });
        assert!(matches!(clean(&d, &[bad]), Err(Error::Config(_))));
        let bad = CleaningRule::drop(RuleKind::QuantileFence { column: "Income".into(), k_iqr: 0.0 });
        assert!(matches!(clean(&d, &[bad]), Err(Error::Config(_))));
        // all-missing column: nothing to fence
        let ok = CleaningRule::drop(RuleKind::QuantileFence { column: "Income".into(), k_iqr: 1.5 });
        assert_eq!(clean(&d, &[ok]).unwrap().0.n_rows(), 1);
    }

    #[test]
    fn range_bound_and_serde() {
        let d = ds(&[1, 2], &[1970, 1980], &[Some(-5.0), Some(50.0)]);
        let json = r#"[{"rule":"range_bound","column":"Income","min":0,"max":1e6}]"#;
        let rules: Vec<CleaningRule> = serde_json::from_str(json).unwrap();
        assert_eq!(rules[0].action, RuleAction::DropRow);
        let (out, _) = clean(&d, &rules).unwrap();
        assert_eq!(out.row_ids().unwrap(), vec![2]);
        let again = clean(&out, &rules).unwrap().1;
        assert_eq!(again.rules[0].dropped, 0);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        assert_eq!(quantile(&[5.0], 0.9), 5.0);
    }
}
