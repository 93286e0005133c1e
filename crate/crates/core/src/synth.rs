//! Seeded synthetic data: Gaussian blobs, XOR quadrants and a campaign
//! table following the merged customer schema.

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed::{self, SeededRng};
use crate::tabular::{Dataset, FeatureMatrix, Schema, Value};

/// Three centers pairwise at least 10 apart.
pub const TRIANGLE_CENTERS: [[f64; 2]; 3] = [[0.0, 0.0], [10.0, 0.0], [5.0, 8.7]];

/// `per_cluster` isotropic Gaussian points around each center. Returns the
/// matrix and the generating cluster of every row.
pub fn blobs(centers: &[Vec<f64>], per_cluster: usize, sigma: f64, seed: u64) -> Result<(FeatureMatrix, Vec<usize>)> {
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("bad sigma {sigma}: {e}")))?;
    let mut rng = seed::rng(seed);
    let mut rows = Vec::with_capacity(centers.len() * per_cluster);
    let mut labels = Vec::with_capacity(rows.capacity());
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_cluster {
            rows.push(center.iter().map(|&x| x + noise.sample(&mut rng)).collect());
            labels.push(c);
        }
    }
    Ok((FeatureMatrix::from_unnamed_rows(&rows)?, labels))
}

pub fn three_blobs(per_cluster: usize, sigma: f64, seed: u64) -> Result<(FeatureMatrix, Vec<usize>)> {
    let centers: Vec<Vec<f64>> = TRIANGLE_CENTERS.iter().map(|c| c.to_vec()).collect();
    blobs(&centers, per_cluster, sigma, seed)
}

/// Points in four blobs at (+-0.5, +-0.5) inside [-1, 1]^2, labelled 1 when
/// the coordinate signs differ.
pub fn xor_blobs(n: usize, sigma: f64, seed: u64) -> Result<(FeatureMatrix, Vec<u8>)> {
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("bad sigma {sigma}: {e}")))?;
    let mut rng = seed::rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (sx, sy) = match i % 4 {
            0 => (1.0, 1.0),
            1 => (-1.0, 1.0),
            2 => (-1.0, -1.0),
            _ => (1.0, -1.0),
        };
        let x: f64 = (0.5 * sx + noise.sample(&mut rng)).clamp(-1.0, 1.0);
        let y: f64 = (0.5 * sy + noise.sample(&mut rng)).clamp(-1.0, 1.0);
        rows.push(vec![x, y]);
        labels.push(u8::from((sx > 0.0) != (sy > 0.0)));
    }
    let m = FeatureMatrix::from_rows(&rows, vec!["x".into(), "y".into()])?;
    Ok((m, labels))
}

fn pick<'a>(rng: &mut SeededRng, table: &[(&'a str, f64)]) -> &'a str {
    let total: f64 = table.iter().map(|(_, w)| w).sum();
    let mut u = rng.random::<f64>() * total;
    for (v, w) in table {
        if u < *w {
            return v;
        }
        u -= w;
    }
    table[table.len() - 1].0
}

fn count(rng: &mut SeededRng, table: &[f64]) -> i64 {
    let mut u = rng.random::<f64>();
    for (i, w) in table.iter().enumerate() {
        if u < *w {
            return i as i64;
        }
        u -= w;
    }
    table.len() as i64 - 1
}

const EDUCATION: [(&str, f64); 5] =
    [("Graduation", 0.503), ("PhD", 0.217), ("Master", 0.165), ("2n Cycle", 0.091), ("Basic", 0.024)];

const MARITAL: [(&str, f64); 6] = [
    ("Married", 0.386),
    ("Together", 0.259),
    ("Single", 0.214),
    ("Divorced", 0.104),
    ("Widow", 0.034),
    ("Alone", 0.003),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignOptions {
    pub rows: usize,
    pub seed: u64,
    /// Share of rows with a missing Income.
    pub missing_income: f64,
    /// Add a few implausible birth years and a duplicated ID.
    pub anomalies: bool,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        Self {
            rows: 2240,
            seed: 0,
            missing_income: 0.01,
            anomalies: false,
        }
    }
}

/// A marketing-campaign table over [`Schema::merged`]. Roughly 15% of
/// customers respond; response depends on past acceptances, recency,
/// tenure, household and spending through thresholds and interactions.
pub fn campaign(opts: &CampaignOptions) -> Result<Dataset> {
    let schema = Schema::merged();
    let mut rng = seed::rng(opts.seed);
    let birth: Normal<f64> = Normal::new(1969.0, 11.5).expect("valid normal");
    let std: Normal<f64> = Normal::new(0.0, 1.0).expect("valid normal");
    let first_day = NaiveDate::from_ymd_opt(2012, 7, 30).expect("valid date");
    let mut rows = Vec::with_capacity(opts.rows);
    for i in 0..opts.rows {
        let education = pick(&mut rng, &EDUCATION);
        let marital = pick(&mut rng, &MARITAL);
        let year_birth = (birth.sample(&mut rng) as i64).clamp(1940, 1996);
        let edu_boost: f64 = match education {
            "PhD" => 8000.0,
            "Master" => 5000.0,
            "Basic" => -25000.0,
            "2n Cycle" => -2000.0,
            _ => 0.0,
        };
        let income = (52000.0 + edu_boost + 19000.0 * std.sample(&mut rng)).clamp(1730.0, 160000.0).round();
        let kidhome = count(&mut rng, &[0.58, 0.40, 0.02]);
        let teenhome = count(&mut rng, &[0.52, 0.46, 0.02]);
        let tenure = rng.random_range(0..=699u64);
        let dt = first_day + Days::new(tenure);
        let recency = rng.random_range(0..=99i64);
        let kids = (kidhome + teenhome) as f64;
        let wealth = ((income - 15000.0) / 1000.0).max(0.0);
        let appetite = wealth * wealth / 40.0 * (1.0 - 0.3 * kids).max(0.15) * (0.6 + 0.8 * rng.random::<f64>());
        let mut spend = |share: f64| -> i64 { (appetite * share * (0.5 + rng.random::<f64>())).round() as i64 };
        let wines = spend(0.50);
        let fruits = spend(0.05);
        let meat = spend(0.28);
        let fish = spend(0.07);
        let sweets = spend(0.05);
        let gold = spend(0.07) + rng.random_range(0..20);
        let total = (wines + fruits + meat + fish + sweets + gold) as f64;
        let deals = (1.0 + kids * 1.2 + rng.random::<f64>() * 2.5).round() as i64;
        let web = (1.0 + total / 250.0 + rng.random::<f64>() * 3.0).min(27.0).round() as i64;
        let catalog = (total / 300.0 + rng.random::<f64>() * 1.5).min(28.0).round() as i64;
        let store = (2.0 + total / 180.0 + rng.random::<f64>() * 3.0).min(13.0).round() as i64;
        let visits = (8.0 - wealth / 12.0 + kids + 2.0 * std.sample(&mut rng)).clamp(0.0, 20.0).round() as i64;
        let affinity = total / 2500.0;
        let mut accepted = [0i64; 5];
        for (c, slot) in accepted.iter_mut().enumerate() {
            let p = [0.05, 0.01, 0.06, 0.06, 0.05][c] * (0.4 + 2.2 * affinity);
            *slot = i64::from(rng.random::<f64>() < p.min(0.6));
        }
        let complain = i64::from(rng.random::<f64>() < 0.01);
        let single = matches!(marital, "Single" | "Divorced" | "Widow" | "Alone");
        let n_acc = accepted.iter().sum::<i64>() as f64;
        let mut z = -3.3 + 1.0 * n_acc;
        if recency < 20 {
            z += 2.4;
        } else if recency > 70 {
            z -= 1.0;
        }
        if tenure > 450 {
            z += 1.4;
        }
        if single && total > 600.0 {
            z += 2.4;
        }
        if teenhome > 0 && kidhome == 0 {
            z -= 1.4;
        }
        if (25000.0..45000.0).contains(&income) && recency < 40 {
            z += 1.5;
        }
        if accepted[2] == 1 && recency < 50 {
            z += 1.5;
        }
        let response = i64::from(rng.random::<f64>() < crate::models::sigmoid(z));
        let income_cell = if rng.random::<f64>() < opts.missing_income {
            None
        } else {
            Some(Value::Real(income))
        };
        let mut row = vec![
            Some(Value::Int(1000 + i as i64)),
            Some(Value::Int(year_birth)),
            Some(Value::Text(education.into())),
            Some(Value::Text(marital.into())),
            income_cell,
            Some(Value::Int(kidhome)),
            Some(Value::Int(teenhome)),
            Some(Value::Date(dt)),
            Some(Value::Int(recency)),
        ];
        row.extend([wines, fruits, meat, fish, sweets, gold].map(|v| Some(Value::Int(v))));
        row.extend([deals, web, catalog, store, visits].map(|v| Some(Value::Int(v))));
        row.extend(accepted.map(|v| Some(Value::Int(v))));
        row.extend([complain, 3, 11, response].map(|v| Some(Value::Int(v))));
        rows.push(row);
    }
    if opts.anomalies && rows.len() >= 4 {
        rows[0][1] = Some(Value::Int(1893));
        rows[1][1] = Some(Value::Int(1899));
        let dup = rows[2].clone();
        rows.push(dup);
    }
    Dataset::new(schema, rows)
}
