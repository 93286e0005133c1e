use log::warn;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans_fit, kmeans_from_centroids, KMeansModel};
use crate::error::{Error, Result};
use crate::seed;
use crate::similarity::Measure;
use crate::tabular::FeatureMatrix;

const MAX_ITER: usize = 300;
const TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Silhouette {
    pub per_row: Vec<f64>,
    pub mean: f64,
}

pub fn silhouette(m: &FeatureMatrix, labels: &[usize], measure: Measure) -> Result<Silhouette> {
    if labels.len() != m.n_rows() {
        return Err(Error::Dimension {
            expected: m.n_rows(),
            got: labels.len(),
        });
    }
    let k = labels.iter().max().map_or(0, |&l| l + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::Validity("silhouette needs at least two non-empty clusters".into()));
    }
    let n = m.n_rows();
    let per_row = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return Ok(0.0);
            }
            let mut sums = vec![0.0; k];
            let xi = m.row(i);
            for (j, xj) in m.rows().enumerate() {
                if j != i {
                    sums[labels[j]] += measure.distance(xi, xj)?;
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            Ok(if denom == 0.0 { 0.0 } else { (b - a) / denom })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = per_row.iter().sum::<f64>() / n as f64;
    Ok(Silhouette { per_row, mean })
}

/// Best fit per k over `restarts` seeded runs. From the second k on, one
/// of the runs starts from the best (k-1) codebook plus the worst-fit row,
/// which keeps the curve non-increasing.
pub fn fit_curve(
    m: &FeatureMatrix,
    k_min: usize,
    k_max: usize,
    measure: Measure,
    seed: u64,
    restarts: usize,
) -> Result<Vec<KMeansModel>> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::Config(format!("invalid k range {k_min}..={k_max}")));
    }
    if restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let distinct = m.distinct_rows();
    if k_max > distinct {
        return Err(Error::Config(format!(
            "k range {k_min}..={k_max} exceeds the {distinct} distinct rows"
        )));
    }
    let mut best: Vec<KMeansModel> = Vec::with_capacity(k_max - k_min + 1);
    for k in k_min..=k_max {
        let inherited = best.last().filter(|_| k > 1);
        let random_runs = if inherited.is_some() { restarts - 1 } else { restarts };
        let mut fits = (0..random_runs)
            .into_par_iter()
            .map(|r| kmeans_fit(m, k, measure, seed::derive(seed, &[k as u64, r as u64])))
            .collect::<Result<Vec<_>>>()?;
        if let Some(prev) = inherited {
            let (far, _) = worst_fit(m, prev)?;
            let mut init = prev.centroids.clone();
            init.push(m.row(far).to_vec());
            fits.push(kmeans_from_centroids(m, init, measure, MAX_ITER, TOL, prev.seed)?);
        }
        let mut chosen = fits.swap_remove(0);
        for f in fits {
            if f.final_wcss < chosen.final_wcss {
                chosen = f;
            }
        }
        best.push(chosen);
    }
    Ok(best)
}

fn worst_fit(m: &FeatureMatrix, model: &KMeansModel) -> Result<(usize, f64)> {
    let mut worst = (0, f64::NEG_INFINITY);
    for (i, (r, &l)) in m.rows().zip(&model.labels).enumerate() {
        let d = model.measure.distance(r, &model.centroids[l])?;
        if d > worst.1 {
            worst = (i, d);
        }
    }
    Ok(worst)
}

/// Index of the maximal discrete second difference over interior points,
/// ties to the smallest k. `None` when fewer than three points.
pub fn knee(ks: &[usize], wcss: &[f64]) -> Option<usize> {
    if wcss.len() < 3 {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 1..wcss.len() - 1 {
        let d2 = wcss[i - 1] - 2.0 * wcss[i] + wcss[i + 1];
        if best.is_none_or(|(_, b)| d2 > b) {
            best = Some((ks[i], d2));
        }
    }
    best.map(|(k, _)| k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowCurve {
    pub ks: Vec<usize>,
    pub wcss: Vec<f64>,
    pub knee: Option<usize>,
}

pub fn elbow(
    m: &FeatureMatrix,
    k_min: usize,
    k_max: usize,
    measure: Measure,
    seed: u64,
    restarts: usize,
) -> Result<(ElbowCurve, Vec<KMeansModel>)> {
    let models = fit_curve(m, k_min, k_max, measure, seed, restarts)?;
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let wcss: Vec<f64> = models.iter().map(|f| f.final_wcss).collect();
    let knee = knee(&ks, &wcss);
    Ok((ElbowCurve { ks, wcss, knee }, models))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub k: usize,
    pub log_w: Option<f64>,
    pub ref_log_w: f64,
    /// `None` when the observed WCSS is zero.
    pub gap: Option<f64>,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub points: Vec<GapPoint>,
    pub chosen_k: Option<usize>,
    pub warnings: Vec<String>,
}

fn uniform_reference(m: &FeatureMatrix, seed: u64) -> Result<FeatureMatrix> {
    let d = m.n_cols();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for r in m.rows() {
        for j in 0..d {
            lo[j] = lo[j].min(r[j]);
            hi[j] = hi[j].max(r[j]);
        }
    }
    let mut rng = seed::rng(seed);
    let mut values = Vec::with_capacity(m.n_rows() * d);
    for _ in 0..m.n_rows() {
        for j in 0..d {
            values.push(lo[j] + (hi[j] - lo[j]) * rng.random::<f64>());
        }
    }
    FeatureMatrix::new(values, m.column_names().to_vec(), m.row_ids().to_vec())
}

/// Tibshirani rule: smallest k with gap(k) >= gap(k+1) - s(k+1), else the
/// largest k with a defined gap.
pub fn choose_gap_k(points: &[GapPoint]) -> Option<usize> {
    for w in points.windows(2) {
        if let (Some(g), Some(g1)) = (w[0].gap, w[1].gap) {
            if g >= g1 - w[1].sd {
                return Some(w[0].k);
            }
        }
    }
    points.iter().rev().find(|p| p.gap.is_some()).map(|p| p.k)
}

/// Observed curve models are returned alongside so callers can reuse them.
pub fn gap_statistic_with_models(
    m: &FeatureMatrix,
    k_min: usize,
    k_max: usize,
    b: usize,
    measure: Measure,
    seed: u64,
    restarts: usize,
) -> Result<(GapResult, Vec<KMeansModel>)> {
    if b < 2 {
        return Err(Error::Config("gap statistic needs B >= 2 reference sets".into()));
    }
    let observed = fit_curve(m, k_min, k_max, measure, seed::derive(seed, &[0]), restarts)?;
    let refs = (0..b)
        .into_par_iter()
        .map(|i| {
            let r = uniform_reference(m, seed::derive(seed, &[1, i as u64]))?;
            let fits = fit_curve(&r, k_min, k_max, measure, seed::derive(seed, &[2, i as u64]), restarts)?;
            Ok(fits.iter().map(|f| f.final_wcss.ln()).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    let mut points = Vec::with_capacity(observed.len());
    for (i, model) in observed.iter().enumerate() {
        let k = k_min + i;
        let logs: Vec<f64> = refs.iter().map(|r| r[i]).collect();
        let mean = logs.iter().sum::<f64>() / b as f64;
        let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
        let sd = var.sqrt() * (1.0 + 1.0 / b as f64).sqrt();
        let (log_w, gap) = if model.final_wcss > 0.0 && mean.is_finite() {
            let lw = model.final_wcss.ln();
            (Some(lw), Some(mean - lw))
        } else {
            let msg = format!("k = {k} excluded from gap selection: zero within-cluster dispersion");
            warn!("{msg}");
            warnings.push(msg);
            (None, None)
        };
        points.push(GapPoint {
            k,
            log_w,
            ref_log_w: mean,
            gap,
            sd: if sd.is_finite() { sd } else { 0.0 },
        });
    }
    let chosen_k = choose_gap_k(&points);
    Ok((GapResult { points, chosen_k, warnings }, observed))
}

pub fn gap_statistic(
    m: &FeatureMatrix,
    k_min: usize,
    k_max: usize,
    b: usize,
    measure: Measure,
    seed: u64,
) -> Result<GapResult> {
    Ok(gap_statistic_with_models(m, k_min, k_max, b, measure, seed, 5)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityParams {
    pub k_min: usize,
    pub k_max: usize,
    pub measure: Measure,
    pub seed: u64,
    pub restarts: usize,
    pub b: usize,
}

impl Default for ValidityParams {
    fn default() -> Self {
        Self {
            k_min: 1,
            k_max: 8,
            measure: Measure::Euclidean,
            seed: 0,
            restarts: 5,
            b: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub wcss: f64,
    pub silhouette: Option<f64>,
    pub gap: Option<f64>,
    pub gap_sd: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Chosen {
    pub elbow: Option<usize>,
    pub silhouette: Option<usize>,
    pub gap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub curve: Vec<CurvePoint>,
    pub chosen: Chosen,
}

/// Elbow, silhouette and gap over one k range. The observed fits are
/// shared by all three criteria.
pub fn validity_report(m: &FeatureMatrix, p: &ValidityParams) -> Result<(ValidityReport, Vec<KMeansModel>)> {
    let (gap, models) = gap_statistic_with_models(m, p.k_min, p.k_max, p.b, p.measure, p.seed, p.restarts)?;
    let ks: Vec<usize> = (p.k_min..=p.k_max).collect();
    let wcss: Vec<f64> = models.iter().map(|f| f.final_wcss).collect();
    let mut curve = Vec::with_capacity(ks.len());
    let mut best_sil: Option<(usize, f64)> = None;
    for (i, model) in models.iter().enumerate() {
        let sil = match silhouette(m, &model.labels, p.measure) {
            Ok(s) => Some(s.mean),
            Err(Error::Validity(_)) => None,
            Err(e) => return Err(e),
        };
        if let Some(s) = sil {
            if best_sil.is_none_or(|(_, b)| s > b) {
                best_sil = Some((ks[i], s));
            }
        }
        curve.push(CurvePoint {
            k: ks[i],
            wcss: wcss[i],
            silhouette: sil,
            gap: gap.points[i].gap,
            gap_sd: gap.points[i].sd,
        });
    }
    let chosen = Chosen {
        elbow: knee(&ks, &wcss),
        silhouette: best_sil.map(|(k, _)| k),
        gap: gap.chosen_k,
    };
    Ok((ValidityReport { curve, chosen }, models))
}

/// Hubert-Arabie adjusted Rand index.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    let ka = a.iter().max().map_or(0, |&x| x + 1);
    let kb = b.iter().max().map_or(0, |&x| x + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |v: u64| (v * v.saturating_sub(1)) as f64 / 2.0;
    let sum_ij: f64 = table.iter().flatten().map(|&v| c2(v)).sum();
    let sum_a: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let sum_b: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(n as u64);
    let expected = if total > 0.0 { sum_a * sum_b / total } else { 0.0 };
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pairs() -> FeatureMatrix {
        FeatureMatrix::from_unnamed_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![10.0, 0.0], vec![10.0, 1.0]]).unwrap()
    }

    #[test]
    fn silhouette_pairs() {
        let s = silhouette(&pairs(), &[0, 0, 1, 1], Measure::Euclidean).unwrap();
        let b = (10.0 + 101f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(s.mean, (b - 1.0) / b, epsilon = 1e-12);
        assert_abs_diff_eq!(s.mean, 0.9002, epsilon = 1e-4);
    }

    #[test]
    fn silhouette_singleton_and_ties() {
        let m = FeatureMatrix::from_unnamed_rows(&[vec![0.0], vec![0.0], vec![5.0]]).unwrap();
        let s = silhouette(&m, &[0, 0, 1], Measure::Euclidean).unwrap();
        assert_eq!(s.per_row, vec![1.0, 1.0, 0.0]);
        // middle row: a = 1, b = 1
        let m = FeatureMatrix::from_unnamed_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let s = silhouette(&m, &[0, 0, 1, 1], Measure::Euclidean).unwrap();
        assert!(s.per_row[1] > 0.0);
        let m = FeatureMatrix::from_unnamed_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let s = silhouette(&m, &[0, 0, 1], Measure::Euclidean).unwrap();
        assert_eq!(s.per_row[1], 0.0);
        assert!(matches!(silhouette(&m, &[0, 0, 0], Measure::Euclidean), Err(Error::Validity(_))));
    }

    #[test]
    fn knee_rule() {
        assert_eq!(knee(&[1, 2, 3, 4], &[100.0, 50.0, 10.0, 8.0]), Some(3));
        assert_eq!(knee(&[1, 2], &[1.0, 0.0]), None);
        assert_eq!(knee(&[1, 2, 3, 4], &[3.0, 2.0, 1.0, 0.0]), Some(2));
    }

    #[test]
    fn gap_selection_rule() {
        let p = |k, gap: Option<f64>, sd| GapPoint { k, log_w: None, ref_log_w: 0.0, gap, sd };
        assert_eq!(choose_gap_k(&[p(1, Some(0.1), 0.1), p(2, Some(0.5), 0.1), p(3, Some(0.45), 0.1)]), Some(2));
        assert_eq!(choose_gap_k(&[p(1, Some(0.1), 0.1), p(2, Some(0.5), 0.1), p(3, None, 0.0)]), Some(2));
        assert_eq!(choose_gap_k(&[p(1, Some(0.1), 0.0), p(2, Some(0.5), 0.0), p(3, Some(0.9), 0.0)]), Some(3));
    }

    #[test]
    fn ari_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!(v < 0.0);
    }

    #[test]
    fn curve_is_monotone_and_ends_at_zero() {
        let m = FeatureMatrix::from_unnamed_rows(&[vec![0.0], vec![1.0], vec![3.0], vec![7.0], vec![8.0]]).unwrap();
        let (curve, _) = elbow(&m, 1, 5, Measure::Euclidean, 4, 3).unwrap();
        assert!(curve.wcss.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*curve.wcss.last().unwrap(), 0.0);
    }
}
