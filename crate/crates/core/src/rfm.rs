//! Recency / frequency / monetary scoring.
//!
//! Raw values come straight from the campaign columns; scores are rank
//! quantiles (1..=bins) so bins stay near-equal under skewed spend.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{Dataset, ReportTable, Value, CHANNEL_PURCHASE_COLUMNS, MNT_COLUMNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfmScores {
    pub r: u8,
    pub f: u8,
    pub m: u8,
}

impl RfmScores {
    pub fn code(&self) -> String {
        format!("R{}F{}M{}", self.r, self.f, self.m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfmRecord {
    pub customer_id: i64,
    pub recency_days: f64,
    pub frequency: u64,
    pub monetary: f64,
    pub scores: Option<RfmScores>,
}

impl RfmRecord {
    pub fn segment_code(&self) -> Option<String> {
        self.scores.map(|s| s.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfmOptions {
    /// Count `NumDealsPurchases` towards frequency (it overlaps the channel counts).
    pub include_deals: bool,
    /// Column used to derive recency when `Recency` is absent.
    pub fallback_date_column: String,
    /// Reference date for the fallback; defaults to the latest date in the column.
    pub reference_date: Option<NaiveDate>,
}

impl Default for RfmOptions {
    fn default() -> Self {
        Self {
            include_deals: false,
            fallback_date_column: "Dt_Customer".into(),
            reference_date: None,
        }
    }
}

fn nonneg(ds: &Dataset, column: &str) -> Result<Vec<f64>> {
    let v = ds.complete_numeric_column(column)?;
    if let Some(i) = v.iter().position(|&x| x < 0.0) {
        return Err(Error::Scoring(format!("negative `{column}` at row {i}")));
    }
    Ok(v)
}

fn sum_columns(ds: &Dataset, columns: &[&str]) -> Result<Vec<f64>> {
    let mut total = vec![0.0; ds.n_rows()];
    for c in columns {
        for (t, v) in total.iter_mut().zip(nonneg(ds, c)?) {
            *t += v;
        }
    }
    Ok(total)
}

/// Raw recency, frequency and monetary values per customer; scores unset.
pub fn compute_rfm(ds: &Dataset, opts: &RfmOptions) -> Result<Vec<RfmRecord>> {
    let ids = ds.row_ids()?;
    let recency = if ds.schema().index_of("Recency").is_some() {
        nonneg(ds, "Recency")?
    } else {
        let dates: Vec<NaiveDate> = ds
            .column(&opts.fallback_date_column)?
            .map(|v| {
                v.and_then(Value::as_date).ok_or_else(|| Error::IncompleteData {
                    column: opts.fallback_date_column.clone(),
                })
            })
            .collect::<Result<_>>()?;
        let reference = match opts.reference_date {
            Some(d) => d,
            None => *dates.iter().max().ok_or_else(|| Error::Scoring("empty dataset".into()))?,
        };
        dates
            .iter()
            .map(|d| ((reference - *d).num_days() as f64).max(0.0))
            .collect()
    };
    let mut freq_cols: Vec<&str> = CHANNEL_PURCHASE_COLUMNS.to_vec();
    if opts.include_deals {
        freq_cols.push("NumDealsPurchases");
    }
    let frequency = sum_columns(ds, &freq_cols)?;
    let monetary = sum_columns(ds, &MNT_COLUMNS)?;
    Ok((0..ds.n_rows())
        .map(|i| RfmRecord {
            customer_id: ids[i],
            recency_days: recency[i],
            frequency: frequency[i].round() as u64,
            monetary: monetary[i],
            scores: None,
        })
        .collect())
}

/// Rank-partition scores. Each dimension is sorted stably by
/// `(value, customer_id)`; position `p` of `n` falls in bin
/// `floor(p * bins / n)`; tied values share the bin of their first position.
/// Frequency and monetary score ascending (largest = `bins`), recency
/// descending (smallest days = `bins`).
fn rank_bins(values: &[(f64, i64)], bins: usize) -> Vec<u8> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].0.total_cmp(&values[b].0).then(values[a].1.cmp(&values[b].1)));
    let mut out = vec![0u8; n];
    let mut run_bin = 0;
    for (p, &i) in order.iter().enumerate() {
        if p == 0 || values[order[p - 1]].0 != values[i].0 {
            run_bin = p * bins / n;
        }
        out[i] = run_bin as u8;
    }
    out
}

pub fn score_rfm(records: &[RfmRecord], bins: usize) -> Result<Vec<RfmRecord>> {
    if bins == 0 || bins > u8::MAX as usize {
        return Err(Error::Config(format!("bins must be in 1..=255, got {bins}")));
    }
    if records.len() < bins {
        return Err(Error::Scoring(format!(
            "{} records cannot fill {bins} bins",
            records.len()
        )));
    }
    let key = |f: fn(&RfmRecord) -> f64| records.iter().map(|r| (f(r), r.customer_id)).collect::<Vec<_>>();
    let r_bins = rank_bins(&key(|r| r.recency_days), bins);
    let f_bins = rank_bins(&key(|r| r.frequency as f64), bins);
    let m_bins = rank_bins(&key(|r| r.monetary), bins);
    let top = bins as u8;
    Ok(records
        .iter()
        .enumerate()
        .map(|(i, r)| RfmRecord {
            scores: Some(RfmScores {
                r: top - r_bins[i],
                f: f_bins[i] + 1,
                m: m_bins[i] + 1,
            }),
            ..r.clone()
        })
        .collect())
}

/// Inclusive score bounds; `None` leaves a dimension unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRule {
    pub name: String,
    #[serde(default)]
    pub r: Option<(u8, u8)>,
    #[serde(default)]
    pub f: Option<(u8, u8)>,
    #[serde(default)]
    pub m: Option<(u8, u8)>,
}

impl SegmentRule {
    fn matches(&self, s: &RfmScores) -> bool {
        let within = |b: Option<(u8, u8)>, v: u8| b.is_none_or(|(lo, hi)| lo <= v && v <= hi);
        within(self.r, s.r) && within(self.f, s.f) && within(self.m, s.m)
    }
}

/// Ordered rule table; the first matching rule names the segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRules {
    pub rules: Vec<SegmentRule>,
    #[serde(default)]
    pub fallback: Option<String>,
}

impl Default for SegmentRules {
    fn default() -> Self {
        let rule = |name: &str, r, f, m| SegmentRule {
            name: name.into(),
            r,
            f,
            m,
        };
        Self {
            rules: vec![
                rule("champion", Some((4, 5)), Some((4, 5)), Some((4, 5))),
                rule("at-risk-loyal", Some((1, 2)), Some((4, 5)), None),
                rule("lapsed", Some((1, 2)), Some((1, 2)), None),
            ],
            fallback: Some("regular".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentLabel {
    pub customer_id: i64,
    pub segment_code: String,
    pub name: Option<String>,
}

/// Attach `R{r}F{f}M{m}` codes and rule-table names to scored records.
pub fn label_segments(records: &[RfmRecord], rules: Option<&SegmentRules>) -> Result<Vec<SegmentLabel>> {
    let default = SegmentRules::default();
    let rules = rules.unwrap_or(&default);
    records
        .iter()
        .map(|r| {
            let s = r.scores.ok_or_else(|| {
                Error::Scoring(format!("customer {} has no scores", r.customer_id))
            })?;
            let name = rules
                .rules
                .iter()
                .find(|rule| rule.matches(&s))
                .map(|rule| rule.name.clone())
                .or_else(|| rules.fallback.clone());
            Ok(SegmentLabel {
                customer_id: r.customer_id,
                segment_code: s.code(),
                name,
            })
        })
        .collect()
}

/// `customer_id,recency_days,frequency,monetary,r,f,m,segment_code,segment_name`
pub fn rfm_table(records: &[RfmRecord], labels: &[SegmentLabel]) -> ReportTable {
    let mut t = ReportTable::new([
        "customer_id",
        "recency_days",
        "frequency",
        "monetary",
        "r",
        "f",
        "m",
        "segment_code",
        "segment_name",
    ]);
    for (rec, lab) in records.iter().zip(labels) {
        let s = rec.scores.unwrap_or(RfmScores { r: 0, f: 0, m: 0 });
        t.push([
            rec.customer_id.to_string(),
            rec.recency_days.to_string(),
            rec.frequency.to_string(),
            rec.monetary.to_string(),
            s.r.to_string(),
            s.f.to_string(),
            s.m.to_string(),
            lab.segment_code.clone(),
            lab.name.clone().unwrap_or_default(),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub customers: usize,
    pub by_code: BTreeMap<String, usize>,
    pub by_name: BTreeMap<String, usize>,
}

pub fn summarize_segments(labels: &[SegmentLabel]) -> SegmentSummary {
    let mut by_code = BTreeMap::new();
    let mut by_name = BTreeMap::new();
    for l in labels {
        *by_code.entry(l.segment_code.clone()).or_insert(0) += 1;
        if let Some(n) = &l.name {
            *by_name.entry(n.clone()).or_insert(0) += 1;
        }
    }
    SegmentSummary {
        customers: labels.len(),
        by_code,
        by_name,
    }
}
