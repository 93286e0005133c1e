use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::similarity::Measure;
use crate::tabular::{FeatureMatrix, ReportTable};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `k` distinct data rows drawn uniformly.
    #[default]
    RandomRows,
    /// k-means++ seeding (D² sampling).
    PlusPlus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansParams {
    pub k: usize,
    pub measure: Measure,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub init: Init,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            k: 2,
            measure: Measure::Euclidean,
            seed: 0,
            max_iter: 300,
            tol: 1e-6,
            init: Init::RandomRows,
        }
    }
}

/// A fitted codebook. `wcss` is the sum over rows of the squared distance
/// (under `measure`) to the assigned centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub centroids: Vec<Vec<f64>>,
    pub measure: Measure,
    pub k: usize,
    pub seed: u64,
    pub iterations_run: usize,
    pub final_wcss: f64,
    pub converged: bool,
    /// WCSS after initial assignment and after every iteration.
    pub trace: Vec<f64>,
    /// Training labels, equal to `assign(model, training matrix)`.
    pub labels: Vec<usize>,
}

impl KMeansModel {
    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    pub fn centroid_table(&self, column_names: &[String]) -> ReportTable {
        let mut t = ReportTable::new(std::iter::once("cluster".to_string()).chain(column_names.iter().cloned()));
        for (j, c) in self.centroids.iter().enumerate() {
            t.push(std::iter::once(j.to_string()).chain(c.iter().map(f64::to_string)));
        }
        t
    }
}

/// Nearest centroid (ties to the lowest index) and its distance.
fn nearest(row: &[f64], centroids: &[Vec<f64>], measure: Measure) -> Result<(usize, f64)> {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = measure.distance(row, c)?;
        if d < best.1 {
            best = (j, d);
        }
    }
    Ok(best)
}

fn assign_all(m: &FeatureMatrix, centroids: &[Vec<f64>], measure: Measure) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut labels = Vec::with_capacity(m.n_rows());
    let mut dists = Vec::with_capacity(m.n_rows());
    for r in m.rows() {
        let (j, d) = nearest(r, centroids, measure)?;
        labels.push(j);
        dists.push(d);
    }
    Ok((labels, dists))
}

fn cost(dists: &[f64]) -> f64 {
    dists.iter().map(|d| d * d).sum()
}

fn means(m: &FeatureMatrix, labels: &[usize], k: usize, previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = m.n_cols();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (r, &l) in m.rows().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(r) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(j, (s, c))| {
            if c == 0 {
                previous[j].clone()
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect()
}

/// Give each empty cluster the row farthest from its current centroid,
/// taken from clusters that keep at least one member.
fn repair_empty(labels: &mut [usize], dists: &mut [f64], k: usize) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let mut pick: Option<usize> = None;
        for i in 0..labels.len() {
            if counts[labels[i]] > 1 && pick.is_none_or(|p| dists[i] > dists[p]) {
                pick = Some(i);
            }
        }
        if let Some(i) = pick {
            counts[labels[i]] -= 1;
            counts[j] += 1;
            labels[i] = j;
            dists[i] = 0.0;
        }
    }
}

fn check_k(m: &FeatureMatrix, k: usize) -> Result<()> {
    if m.is_empty() {
        return Err(Error::Config("cannot cluster an empty matrix".into()));
    }
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let distinct = m.distinct_rows();
    if k > distinct {
        return Err(Error::Config(format!(
            "k = {k} exceeds the {distinct} distinct rows"
        )));
    }
    Ok(())
}

fn random_rows(m: &FeatureMatrix, k: usize, rng: &mut seed::SeededRng) -> Vec<Vec<f64>> {
    let mut idx: Vec<usize> = (0..m.n_rows()).collect();
    idx.shuffle(rng);
    let mut chosen: Vec<Vec<f64>> = Vec::with_capacity(k);
    for i in idx {
        let r = m.row(i);
        if !chosen.iter().any(|c| c.as_slice() == r) {
            chosen.push(r.to_vec());
            if chosen.len() == k {
                break;
            }
        }
    }
    chosen
}

fn plus_plus(m: &FeatureMatrix, k: usize, measure: Measure, rng: &mut seed::SeededRng) -> Result<Vec<Vec<f64>>> {
    let n = m.n_rows();
    let mut chosen = vec![m.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = m
        .rows()
        .map(|r| measure.distance(r, &chosen[0]).map(|d| d * d))
        .collect::<Result<_>>()?;
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numerical("k-means++ ran out of distinct rows".into()));
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 && target < w {
                pick = i;
                break;
            }
            target -= w;
        }
        while d2[pick] == 0.0 {
            pick -= 1;
        }
        let c = m.row(pick).to_vec();
        for (i, r) in m.rows().enumerate() {
            let d = measure.distance(r, &c)?;
            d2[i] = d2[i].min(d * d);
        }
        chosen.push(c);
    }
    Ok(chosen)
}

/// Lloyd iteration from the given centroids until assignments stop
/// changing, the WCSS improvement drops below `tol`, or `max_iter` passes.
pub fn kmeans_from_centroids(
    m: &FeatureMatrix,
    init: Vec<Vec<f64>>,
    measure: Measure,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<KMeansModel> {
    let k = init.len();
    if let Some(c) = init.iter().find(|c| c.len() != m.n_cols()) {
        return Err(Error::Dimension {
            expected: m.n_cols(),
            got: c.len(),
        });
    }
    let mut centroids = init;
    let (mut labels, mut dists) = assign_all(m, &centroids, measure)?;
    let mut current = cost(&dists);
    let mut trace = vec![current];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        repair_empty(&mut labels, &mut dists, k);
        centroids = means(m, &labels, k, &centroids);
        let (new_labels, new_dists) = assign_all(m, &centroids, measure)?;
        let new_cost = cost(&new_dists);
        trace.push(new_cost);
        let changed = new_labels != labels;
        let improvement = current - new_cost;
        labels = new_labels;
        dists = new_dists;
        current = new_cost;
        if !changed || improvement < tol {
            converged = true;
            break;
        }
    }
    if centroids.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite centroid".into()));
    }
    Ok(KMeansModel {
        centroids,
        measure,
        k,
        seed,
        iterations_run: iterations,
        final_wcss: current,
        converged,
        trace,
        labels,
    })
}

pub fn kmeans_fit_with(m: &FeatureMatrix, params: &KMeansParams) -> Result<KMeansModel> {
    check_k(m, params.k)?;
    let mut rng = seed::rng(params.seed);
    let init = match params.init {
        Init::RandomRows => random_rows(m, params.k, &mut rng),
        Init::PlusPlus => plus_plus(m, params.k, params.measure, &mut rng)?,
    };
    kmeans_from_centroids(m, init, params.measure, params.max_iter, params.tol, params.seed)
}

/// Fit with default iteration limits (300 passes, tolerance 1e-6).
pub fn kmeans_fit(m: &FeatureMatrix, k: usize, measure: Measure, seed: u64) -> Result<KMeansModel> {
    kmeans_fit_with(
        m,
        &KMeansParams {
            k,
            measure,
            seed,
            ..Default::default()
        },
    )
}

pub fn assign(model: &KMeansModel, m: &FeatureMatrix) -> Result<Vec<usize>> {
    if m.n_cols() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            got: m.n_cols(),
        });
    }
    Ok(assign_all(m, &model.centroids, model.measure)?.0)
}

/// Average distance from each row to its nearest centroid under `measure`.
pub fn mean_distortion(model: &KMeansModel, m: &FeatureMatrix, measure: Measure) -> Result<f64> {
    if m.is_empty() {
        return Err(Error::Undefined("distortion of an empty matrix".into()));
    }
    if m.n_cols() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            got: m.n_cols(),
        });
    }
    let (_, dists) = assign_all(m, &model.centroids, measure)?;
    Ok(dists.iter().sum::<f64>() / dists.len() as f64)
}

/// Sum of squared distances from each row to the centroid of its label.
pub fn wcss(m: &FeatureMatrix, labels: &[usize], centroids: &[Vec<f64>], measure: Measure) -> Result<f64> {
    m.rows()
        .zip(labels)
        .map(|(r, &l)| measure.distance(r, &centroids[l]).map(|d| d * d))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs() -> FeatureMatrix {
        FeatureMatrix::from_unnamed_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![10.0, 0.0], vec![10.0, 1.0]]).unwrap()
    }

    #[test]
    fn symmetric_pairs() {
        // an init on (0,0),(10,0) settles in the {(5,0),(5,1)} local optimum
        let mut hits = 0;
        for seed in 0..10 {
            let model = kmeans_fit(&pairs(), 2, Measure::Euclidean, seed).unwrap();
            if model.final_wcss != 1.0 {
                assert_eq!(model.final_wcss, 100.0);
                continue;
            }
            hits += 1;
            let mut c = model.centroids.clone();
            c.sort_by(|a, b| a[0].total_cmp(&b[0]));
            assert_eq!(c, vec![vec![0.0, 0.5], vec![10.0, 0.5]]);
            assert_eq!(model.final_wcss, 1.0);
            assert!(model.converged);
            assert_eq!(model.labels[0], model.labels[1]);
            assert_ne!(model.labels[0], model.labels[2]);
        }
        assert!(hits > 0);
    }

    #[test]
    fn k_equals_n() {
        let model = kmeans_fit(&pairs(), 4, Measure::Euclidean, 3).unwrap();
        assert_eq!(model.final_wcss, 0.0);
        let mut c = model.centroids.clone();
        c.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        assert_eq!(c, pairs().to_rows());
    }

    #[test]
    fn k_bounds() {
        let dup = FeatureMatrix::from_unnamed_rows(&[vec![1.0], vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(kmeans_fit(&dup, 3, Measure::Euclidean, 0), Err(Error::Config(_))));
        assert!(matches!(kmeans_fit(&dup, 0, Measure::Euclidean, 0), Err(Error::Config(_))));
        assert_eq!(kmeans_fit(&dup, 2, Measure::Euclidean, 0).unwrap().final_wcss, 0.0);
    }

    #[test]
    fn assignment_contract() {
        let model = kmeans_fit(&pairs(), 2, Measure::Euclidean, 1).unwrap();
        assert_eq!(assign(&model, &pairs()).unwrap(), model.labels);
        let tie = KMeansModel {
            centroids: vec![vec![0.0, 0.0], vec![2.0, 0.0]],
            ..model.clone()
        };
        let q = FeatureMatrix::from_unnamed_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(assign(&tie, &q).unwrap(), vec![0, 1]);
        let bad = FeatureMatrix::from_unnamed_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(assign(&tie, &bad), Err(Error::Dimension { .. })));
    }

    #[test]
    fn distortion_examples() {
        let model = KMeansModel {
            centroids: vec![vec![0.0, 0.0]],
            measure: Measure::Euclidean,
            k: 1,
            seed: 0,
            iterations_run: 0,
            final_wcss: 0.0,
            converged: true,
            trace: vec![],
            labels: vec![],
        };
        let m = FeatureMatrix::from_unnamed_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(mean_distortion(&model, &m, Measure::L1Distortion).unwrap(), 1.0);
        let on = FeatureMatrix::from_unnamed_rows(&[vec![0.0, 0.0]]).unwrap();
        assert_eq!(mean_distortion(&model, &on, Measure::L1Distortion).unwrap(), 0.0);
        assert!(matches!(
            mean_distortion(&model, &FeatureMatrix::empty(vec!["a".into(), "b".into()]), Measure::Euclidean),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        // centroid 2 starts far from every row
        let m = FeatureMatrix::from_unnamed_rows(&[vec![0.0], vec![1.0], vec![5.0], vec![6.0]]).unwrap();
        let model = kmeans_from_centroids(&m, vec![vec![0.0], vec![6.0], vec![100.0]], Measure::Euclidean, 50, 1e-9, 0).unwrap();
        let mut counts = [0; 3];
        for &l in &model.labels {
            counts[l] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0));
        assert!(model.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn plus_plus_init() {
        let p = KMeansParams { k: 2, init: Init::PlusPlus, seed: 5, ..Default::default() };
        let model = kmeans_fit_with(&pairs(), &p).unwrap();
        assert_eq!(model.final_wcss, 1.0);
    }
}
